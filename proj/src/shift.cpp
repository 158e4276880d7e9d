#include "stakeshift/shift.hpp"

#include <algorithm>
#include <queue>
#include <thread>

#include "stakeshift/errors.hpp"

namespace stakeshift {

namespace {

using u128 = unsigned __int128;
using i128 = __int128;

u128 gcd_u128(u128 a, u128 b) {
    while (b != 0) {
        u128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

// Rounds an exact rational in [0, 1] to double. The fraction is reduced
// first so that equal rationals always produce the same double, no matter
// how the instance was scaled.
double ratio_to_double(u128 num, u128 den) {
    if (num == 0) return 0.0;
    u128 g = gcd_u128(num, den);
    num /= g;
    den /= g;
    return (double)num / (double)den;
}

u128 abs_i128(i128 v) { return v < 0 ? (u128)(-v) : (u128)v; }

}  // namespace

StakeDistribution distribution_at(const BalanceSeries& balances, Period period,
                                  const DistributionOptions& options) {
    StakeDistribution d;
    d.period = period;
    const std::int64_t fee = balances.balance_at(balances.fee_pool_slot(), period);
    const std::int64_t burned = balances.balance_at(balances.burned_slot(), period);
    i128 supply = balances.supply_at(period);
    if (!options.include_fee_pool) supply -= fee;
    if (options.include_burned) supply += burned;
    d.supply = (std::int64_t)supply;

    if (options.include_burned && burned > 0) d.holdings.emplace_back(kBurnedEntity, burned);
    if (options.include_fee_pool && fee > 0) d.holdings.emplace_back(kFeePoolEntity, fee);
    for (std::uint32_t slot = 0; slot < balances.entity_count(); ++slot) {
        const std::int64_t bal = balances.balance_at(slot, period);
        if (bal > 0) d.holdings.emplace_back(balances.entity_id(slot), bal);
    }
    return d;
}

double statistical_distance(const StakeDistribution& x, const StakeDistribution& y) {
    if (x.supply <= 0 || y.supply <= 0) return 0.0;  // zero-supply convention
    const u128 bx = (u128)x.supply;
    const u128 by = (u128)y.supply;

    // Exact sum of |share_x - share_y| over the support union, on the common
    // denominator supply_x * supply_y. Bounded by 2 * bx * by < 2^127.
    u128 sum = 0;
    auto ix = x.holdings.begin();
    auto iy = y.holdings.begin();
    while (ix != x.holdings.end() || iy != y.holdings.end()) {
        if (iy == y.holdings.end() || (ix != x.holdings.end() && ix->first < iy->first)) {
            sum += (u128)ix->second * by;
            ++ix;
        } else if (ix == x.holdings.end() || iy->first < ix->first) {
            sum += (u128)iy->second * bx;
            ++iy;
        } else {
            sum += abs_i128((i128)((u128)ix->second * by) - (i128)((u128)iy->second * bx));
            ++ix;
            ++iy;
        }
    }
    return ratio_to_double(sum, 2 * bx * by);
}

namespace {

struct PendingChange {
    std::uint32_t slot;
    std::int64_t pre_balance;  // balance at the end of the previous period
};

// One forward sweep computing the series for every lag in `lags` (sorted,
// unique, validated). Per period t the FIFO ring holds the change lists of
// the last max_lag periods; an entity's balance at t-lag is the pre-change
// balance of its earliest change inside the window. Entities untouched in
// the window enter in aggregate as (sum of balances) * |1/B_t - 1/B_old|,
// so only changed entities are ever enumerated.
std::vector<StakeShiftSeries> sweep(const BalanceSeries& balances,
                                    const std::vector<std::int64_t>& lags,
                                    const DistributionOptions& options,
                                    detail::SweepStats* stats) {
    const Period first = balances.first_period();
    const Period last = balances.last_period();
    const std::size_t slots = balances.slot_count();
    const std::uint32_t fee_slot = balances.fee_pool_slot();
    const std::uint32_t burn_slot = balances.burned_slot();
    const std::int64_t max_lag = lags.back();

    std::vector<StakeShiftSeries> out(lags.size());
    for (std::size_t i = 0; i < lags.size(); ++i) {
        out[i].lag = lags[i];
        out[i].ledger_first = first;
        out[i].ledger_last = last;
    }

    const auto excluded = [&](std::uint32_t s) {
        return (s == fee_slot && !options.include_fee_pool) ||
               (s == burn_slot && !options.include_burned);
    };

    // Min-heap over the next change-point of every slot.
    using HeapEntry = std::pair<Period, std::uint32_t>;
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;
    std::vector<std::uint32_t> cursor(slots, 0);
    for (std::uint32_t s = 0; s < slots; ++s)
        if (!balances.changes(s).empty()) heap.emplace(balances.changes(s).front().period, s);

    const std::size_t ring = (std::size_t)max_lag + 1;
    std::vector<std::vector<PendingChange>> window(ring);
    std::vector<std::int64_t> dist_supply(ring, 0);

    std::vector<std::int64_t> cur(slots, 0);
    std::vector<std::uint64_t> stamp(slots, 0);
    std::vector<std::int64_t> old_balance(slots, 0);
    std::vector<std::uint32_t> touched;
    std::uint64_t epoch = 0;

    const auto& supply_points = balances.supply_changes();
    std::size_t supply_idx = 0;
    std::int64_t supply_now = 0;

    for (Period t = first; t <= last; ++t) {
        auto& changed = window[(std::size_t)(t % (Period)ring)];
        changed.clear();
        while (!heap.empty() && heap.top().first == t) {
            const std::uint32_t s = heap.top().second;
            heap.pop();
            const auto& points = balances.changes(s);
            changed.push_back({s, cur[s]});
            cur[s] = points[cursor[s]].balance;
            if (++cursor[s] < points.size()) heap.emplace(points[cursor[s]].period, s);
        }
        while (supply_idx < supply_points.size() && supply_points[supply_idx].period <= t)
            supply_now = supply_points[supply_idx++].balance;

        std::int64_t ds = supply_now;
        if (!options.include_fee_pool) ds -= cur[fee_slot];
        if (options.include_burned) ds += cur[burn_slot];
        dist_supply[(std::size_t)(t % (Period)ring)] = ds;

        for (std::size_t li = 0; li < lags.size(); ++li) {
            const std::int64_t lag = lags[li];
            if (t - first < lag) continue;
            const std::int64_t b_now = ds;
            const std::int64_t b_old = dist_supply[(std::size_t)((t - lag) % (Period)ring)];
            if (b_now == 0 || b_old == 0) continue;  // absent by convention

            ++epoch;
            touched.clear();
            // Oldest period first, so the recorded pre-change balance is the
            // balance at exactly t - lag.
            for (Period p = t - lag + 1; p <= t; ++p) {
                for (const auto& ch : window[(std::size_t)(p % (Period)ring)]) {
                    if (excluded(ch.slot)) continue;
                    if (stamp[ch.slot] != epoch) {
                        stamp[ch.slot] = epoch;
                        old_balance[ch.slot] = ch.pre_balance;
                        touched.push_back(ch.slot);
                    }
                }
            }

            const u128 u_now = (u128)b_now;
            const u128 u_old = (u128)b_old;
            u128 sum = 0;
            std::int64_t moved_now = 0;
            for (std::uint32_t s : touched) {
                sum += abs_i128((i128)((u128)cur[s] * u_old) - (i128)((u128)old_balance[s] * u_now));
                moved_now += cur[s];
            }
            // Everything untouched held the same balance at both endpoints.
            const std::int64_t unchanged = b_now - moved_now;
            const std::uint64_t supply_gap =
                (std::uint64_t)(b_now > b_old ? b_now - b_old : b_old - b_now);
            sum += (u128)(std::uint64_t)unchanged * (u128)supply_gap;

            out[li].values.emplace_back(t, ratio_to_double(sum, 2 * u_now * u_old));
            if (stats) stats->enumerated.push_back(touched.size());
        }
    }
    return out;
}

std::vector<std::int64_t> validated_lags(const BalanceSeries& balances,
                                         std::span<const std::int64_t> lags) {
    if (lags.empty()) throw Error(ErrorKind::input, "no lags given");
    const std::int64_t periods =
        balances.last_period() < balances.first_period()
            ? 0
            : balances.last_period() - balances.first_period() + 1;
    std::vector<std::int64_t> sorted(lags.begin(), lags.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (std::int64_t lag : sorted) {
        if (lag < 1) throw Error(ErrorKind::input, "lag must be >= 1");
        if (periods < lag + 1) throw InsufficientHistory(lag, periods);
    }
    return sorted;
}

}  // namespace

StakeShiftSeries stake_shift_series(const BalanceSeries& balances, std::int64_t lag,
                                    const DistributionOptions& options) {
    const auto lags = validated_lags(balances, std::span(&lag, 1));
    return sweep(balances, lags, options, nullptr).front();
}

namespace detail {
StakeShiftSeries stake_shift_series_counted(const BalanceSeries& balances, std::int64_t lag,
                                            const DistributionOptions& options, SweepStats& stats) {
    const auto lags = validated_lags(balances, std::span(&lag, 1));
    return sweep(balances, lags, options, &stats).front();
}
}  // namespace detail

std::vector<StakeShiftSeries> stake_shift_multi(const BalanceSeries& balances,
                                                std::span<const std::int64_t> lags,
                                                const DistributionOptions& options,
                                                unsigned threads) {
    const auto sorted = validated_lags(balances, lags);

    std::vector<StakeShiftSeries> computed;
    if (threads <= 1 || sorted.size() == 1) {
        computed = sweep(balances, sorted, options, nullptr);
    } else {
        const unsigned workers = std::min<unsigned>(threads, (unsigned)sorted.size());
        std::vector<std::vector<std::int64_t>> groups(workers);
        for (std::size_t i = 0; i < sorted.size(); ++i)
            groups[i % workers].push_back(sorted[i]);
        std::vector<std::vector<StakeShiftSeries>> results(workers);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] { results[w] = sweep(balances, groups[w], options, nullptr); });
        for (auto& th : pool) th.join();
        for (auto& r : results)
            for (auto& s : r) computed.push_back(std::move(s));
        std::sort(computed.begin(), computed.end(),
                  [](const StakeShiftSeries& a, const StakeShiftSeries& b) { return a.lag < b.lag; });
    }

    // Hand results back in the caller's order (duplicates share values).
    std::vector<StakeShiftSeries> out;
    out.reserve(lags.size());
    for (std::int64_t lag : lags) {
        auto it = std::lower_bound(computed.begin(), computed.end(), lag,
                                   [](const StakeShiftSeries& s, std::int64_t v) { return s.lag < v; });
        out.push_back(*it);
    }
    return out;
}

std::pair<Period, double> execution_max_shift(const StakeShiftSeries& series) {
    if (series.values.empty()) throw Error(ErrorKind::input, "empty stake shift series");
    auto best = series.values.front();
    for (const auto& v : series.values)
        if (v.second > best.second) best = v;  // strict: earliest period wins ties
    return best;
}

std::vector<ContributionRow> top_contributors(const BalanceSeries& balances, Period period,
                                              std::int64_t lag, std::size_t k,
                                              const DistributionOptions& options) {
    if (lag < 1) throw Error(ErrorKind::input, "lag must be >= 1");
    if (period - lag < balances.first_period() || period > balances.last_period())
        throw Error(ErrorKind::input,
                    "period " + std::to_string(period) + " out of range for lag " +
                        std::to_string(lag));

    const Period old_period = period - lag;
    const std::int64_t fee_now = balances.balance_at(balances.fee_pool_slot(), period);
    const std::int64_t fee_old = balances.balance_at(balances.fee_pool_slot(), old_period);
    const std::int64_t burn_now = balances.balance_at(balances.burned_slot(), period);
    const std::int64_t burn_old = balances.balance_at(balances.burned_slot(), old_period);

    std::int64_t b_now = balances.supply_at(period);
    std::int64_t b_old = balances.supply_at(old_period);
    if (!options.include_fee_pool) {
        b_now -= fee_now;
        b_old -= fee_old;
    }
    if (options.include_burned) {
        b_now += burn_now;
        b_old += burn_old;
    }
    if (b_now == 0 || b_old == 0)
        throw Error(ErrorKind::input, "zero supply at period " + std::to_string(period) +
                                          " or " + std::to_string(old_period));

    const u128 u_now = (u128)b_now, u_old = (u128)b_old;
    struct Item {
        u128 numerator;
        EntityId entity;
    };
    std::vector<Item> items;
    items.reserve(balances.entity_count() + 2);
    const auto push = [&](EntityId id, std::int64_t now, std::int64_t old) {
        items.push_back({abs_i128((i128)((u128)now * u_old) - (i128)((u128)old * u_now)), id});
    };
    for (std::uint32_t slot = 0; slot < balances.entity_count(); ++slot)
        push(balances.entity_id(slot), balances.balance_at(slot, period),
             balances.balance_at(slot, old_period));
    if (options.include_fee_pool) push(kFeePoolEntity, fee_now, fee_old);
    if (options.include_burned) push(kBurnedEntity, burn_now, burn_old);

    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.numerator != b.numerator) return a.numerator > b.numerator;
        return a.entity < b.entity;
    });
    if (k != 0 && items.size() > k) items.resize(k);

    std::vector<ContributionRow> rows;
    rows.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i)
        rows.push_back({items[i].entity, ratio_to_double(items[i].numerator, u_now * u_old),
                        (std::uint32_t)(i + 1)});
    return rows;
}

}  // namespace stakeshift
