#include "stakeshift/balance.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "stakeshift/errors.hpp"

namespace stakeshift {

namespace {

using i128 = __int128;

constexpr std::int64_t kInt64Max = std::numeric_limits<std::int64_t>::max();

// Predecessor lookup: balance at the last change-point with period <= p.
std::int64_t lookup(const std::vector<ChangePoint>& points, Period p) {
    auto it = std::upper_bound(points.begin(), points.end(), p,
                               [](Period v, const ChangePoint& cp) { return v < cp.period; });
    return it == points.begin() ? 0 : std::prev(it)->balance;
}

// Sorts by period, merges duplicate periods, drops zero deltas.
void normalize_deltas(std::vector<ChangePoint>& v) {
    bool sorted = true;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i - 1].period >= v[i].period) {
            sorted = false;
            break;
        }
    if (!sorted) {
        std::stable_sort(v.begin(), v.end(),
                         [](const ChangePoint& a, const ChangePoint& b) { return a.period < b.period; });
        std::size_t w = 0;
        for (std::size_t r = 0; r < v.size(); ++r) {
            if (w > 0 && v[w - 1].period == v[r].period)
                v[w - 1].balance += v[r].balance;
            else
                v[w++] = v[r];
        }
        v.resize(w);
    }
    std::erase_if(v, [](const ChangePoint& cp) { return cp.balance == 0; });
}

// In-place: per-period deltas -> cumulative change-points.
void accumulate(std::vector<ChangePoint>& v, EntityId id_for_errors) {
    i128 running = 0;
    std::size_t w = 0;
    for (const auto& cp : v) {
        running += cp.balance;
        if (running < 0) throw NegativeBalance(id_for_errors, cp.period);
        if (running > kInt64Max)
            throw ValueOverflow("cumulative balance of entity " + std::to_string(id_for_errors));
        if (w > 0 && v[w - 1].balance == (std::int64_t)running) continue;  // net zero change
        v[w++] = {cp.period, (std::int64_t)running};
    }
    v.resize(w);
}

}  // namespace

BalanceAccumulator::BalanceAccumulator(const EntityAssignment& assignment, BalanceOptions options)
    : assignment_(assignment), options_(options) {
    deltas_.resize(assignment.entity_count() + 2);
}

void BalanceAccumulator::bump(std::uint32_t slot, Period period, std::int64_t delta) {
    if (delta == 0) return;
    auto& v = deltas_[slot];
    if (!v.empty() && v.back().period == period)
        v.back().balance += delta;
    else
        v.push_back({period, delta});
}

void BalanceAccumulator::add(const Transaction& tx) {
    const Period p = period_of(tx.timestamp);
    if (!any_ || p < first_) first_ = p;
    if (!any_ || p > last_) last_ = p;
    any_ = true;

    const auto fee_slot = (std::uint32_t)assignment_.entity_count();
    const auto burn_slot = fee_slot + 1;

    i128 in_sum = 0, out_sum = 0, burned = 0;
    for (const auto& in : tx.inputs) {
        bump(assignment_.entity_index_of(in.address), p, -in.value);
        in_sum += in.value;
    }
    for (const auto& out : tx.outputs) {
        out_sum += out.value;
        if (out.address == kUnspendableAddress)
            burned += out.value;
        else
            bump(assignment_.entity_index_of(out.address), p, out.value);
    }

    if (tx.is_coinbase()) {
        if (out_sum > kInt64Max) throw ValueOverflow("coinbase outputs in tx " + tx.tx_id);
        if (out_sum != 0) {
            auto& v = issuance_;
            if (!v.empty() && v.back().period == p)
                v.back().balance += (std::int64_t)out_sum;
            else
                v.push_back({p, (std::int64_t)out_sum});
        }
    } else {
        if (in_sum > kInt64Max) throw ValueOverflow("inputs in tx " + tx.tx_id);
        if (out_sum > in_sum)
            throw Error(ErrorKind::input, "outputs exceed inputs in tx " + tx.tx_id);
        const auto fee = (std::int64_t)(in_sum - out_sum);
        if (options_.fee_policy == FeePolicy::pool)
            bump(fee_slot, p, fee);
        else
            burned += fee;
    }

    if (burned != 0) {
        bump(burn_slot, p, (std::int64_t)burned);
        auto& v = burns_;
        if (!v.empty() && v.back().period == p)
            v.back().balance += (std::int64_t)burned;
        else
            v.push_back({p, (std::int64_t)burned});
    }
}

BalanceSeries BalanceAccumulator::finish() {
    BalanceSeries out;
    out.options_ = options_;
    out.first_ = first_;
    out.last_ = any_ ? last_ : -1;
    if (!any_) out.first_ = 0;

    const std::size_t entities = assignment_.entity_count();
    out.entity_ids_.resize(entities);
    for (std::uint32_t i = 0; i < entities; ++i) out.entity_ids_[i] = assignment_.entity_id(i);

    out.changes_ = std::move(deltas_);
    for (std::uint32_t slot = 0; slot < out.changes_.size(); ++slot) {
        EntityId id = slot < entities ? out.entity_ids_[slot]
                                      : (slot == entities ? kFeePoolEntity : kBurnedEntity);
        normalize_deltas(out.changes_[slot]);
        accumulate(out.changes_[slot], id);
        out.changes_[slot].shrink_to_fit();
    }

    normalize_deltas(issuance_);
    normalize_deltas(burns_);

    // Spendable supply: cumulative issuance minus cumulative burned value.
    {
        std::vector<ChangePoint> deltas;
        deltas.reserve(issuance_.size() + burns_.size());
        deltas.insert(deltas.end(), issuance_.begin(), issuance_.end());
        for (const auto& b : burns_) deltas.push_back({b.period, -b.balance});
        normalize_deltas(deltas);
        accumulate(deltas, kBurnedEntity);
        out.supply_ = std::move(deltas);
    }
    out.issuance_ = std::move(issuance_);
    out.burns_ = std::move(burns_);
    return out;
}

EntityId BalanceSeries::entity_id(std::uint32_t slot) const {
    if (slot < entity_count()) return entity_ids_[slot];
    return slot == fee_pool_slot() ? kFeePoolEntity : kBurnedEntity;
}

std::uint32_t BalanceSeries::slot_of(EntityId id) const {
    if (id == kFeePoolEntity) return fee_pool_slot();
    if (id == kBurnedEntity) return burned_slot();
    auto it = std::lower_bound(entity_ids_.begin(), entity_ids_.end(), id);
    if (it == entity_ids_.end() || *it != id)
        throw Error(ErrorKind::input, "unknown entity id " + std::to_string(id));
    return (std::uint32_t)(it - entity_ids_.begin());
}

std::int64_t BalanceSeries::balance_at(std::uint32_t slot, Period period) const {
    if (period < first_ || period > last_)
        throw Error(ErrorKind::input, "period " + std::to_string(period) + " outside [" +
                                          std::to_string(first_) + ", " + std::to_string(last_) + "]");
    return lookup(changes_[slot], period);
}

std::int64_t BalanceSeries::supply_at(Period period) const {
    if (period < first_ || period > last_)
        throw Error(ErrorKind::input, "period " + std::to_string(period) + " outside [" +
                                          std::to_string(first_) + ", " + std::to_string(last_) + "]");
    return lookup(supply_, period);
}

void BalanceSeries::write_tsv(std::ostream& out) const {
    for (std::uint32_t slot = 0; slot < changes_.size(); ++slot)
        for (const auto& cp : changes_[slot])
            out << entity_id(slot) << '\t' << cp.period << '\t' << cp.balance << '\n';
}

BalanceSeries compute_balances(const std::vector<Transaction>& txs,
                               const EntityAssignment& assignment, BalanceOptions options) {
    BalanceAccumulator acc(assignment, options);
    for (const auto& tx : txs) acc.add(tx);
    return acc.finish();
}

BalanceSeries compute_balances(TransactionReader& reader, const EntityAssignment& assignment,
                               BalanceOptions options) {
    BalanceAccumulator acc(assignment, options);
    while (auto tx = reader.next()) acc.add(*tx);
    return acc.finish();
}

std::int64_t balance_at(const BalanceSeries& series, EntityId entity, Period period) {
    return series.balance_at(series.slot_of(entity), period);
}

}  // namespace stakeshift
