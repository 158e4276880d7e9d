#include "stakeshift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "stakeshift/errors.hpp"

namespace stakeshift {

void SynthConfig::validate() const {
    if (days <= 0) throw Error(ErrorKind::input, "days must be positive");
    if (entities <= 0) throw Error(ErrorKind::input, "entities must be positive");
    if (coinbase_per_day <= 0) throw Error(ErrorKind::input, "coinbase_per_day must be positive");
    if (transfer_intensity < 0) throw Error(ErrorKind::input, "transfer_intensity must be >= 0");
    if (spike) {
        if (spike->day < 1 || spike->day >= days)
            throw Error(ErrorKind::input, "spike day must lie within (0, days)");
        if (!(spike->fraction > 0.0 && spike->fraction <= 1.0))
            throw Error(ErrorKind::input, "spike fraction must lie in (0, 1]");
    }
}

namespace {

std::int64_t poisson_small(SplitMix64& rng, double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.next_unit();
    } while (p > limit);
    return k - 1;
}

// Knuth's product method, split into chunks so exp(-lambda) never
// underflows; a sum of independent Poissons is Poisson.
std::int64_t poisson(SplitMix64& rng, double lambda) {
    std::int64_t total = 0;
    while (lambda > 60.0) {
        total += poisson_small(rng, 60.0);
        lambda -= 60.0;
    }
    return total + poisson_small(rng, lambda);
}

struct Ledger {
    std::vector<std::string> addr_name;       // global address slots
    std::vector<std::int64_t> addr_balance;
    std::vector<std::uint32_t> addr_entity;
    std::vector<std::uint32_t> entity_first;  // first address slot per entity
    std::vector<std::uint32_t> entity_addrs;  // address count per entity
    std::vector<std::int64_t> entity_balance;
    std::int64_t supply = 0;

    std::uint32_t slot(std::uint32_t entity, std::uint32_t j) const {
        return entity_first[entity] + j;
    }
};

void emit(std::ostream& out, const std::string& tx_id, std::int64_t ts, char hint,
          const std::vector<std::pair<std::uint32_t, std::int64_t>>& ins,
          const std::vector<std::pair<std::string, std::int64_t>>& outs, Ledger& led) {
    std::string line = tx_id;
    line += '\t';
    line += std::to_string(ts);
    line += '\t';
    line += hint;
    line += '\t';
    bool first = true;
    for (const auto& [slot, value] : ins) {
        if (!first) line += ',';
        first = false;
        line += led.addr_name[slot];
        line += ':';
        line += std::to_string(value);
        led.addr_balance[slot] -= value;
        led.entity_balance[led.addr_entity[slot]] -= value;
    }
    line += '\t';
    first = true;
    for (const auto& [addr, value] : outs) {
        if (!first) line += ',';
        first = false;
        line += addr;
        line += ':';
        line += std::to_string(value);
    }
    line += '\n';
    out.write(line.data(), (std::streamsize)line.size());
}

}  // namespace

void generate(const SynthConfig& config, std::ostream& out) {
    config.validate();
    SplitMix64 rng(config.seed);

    Ledger led;
    const auto entities = (std::uint32_t)config.entities;
    led.entity_first.resize(entities);
    led.entity_addrs.resize(entities);
    led.entity_balance.assign(entities, 0);
    for (std::uint32_t e = 0; e < entities; ++e) {
        led.entity_first[e] = (std::uint32_t)led.addr_name.size();
        const auto n = (std::uint32_t)(1 + rng.next_below(3));
        led.entity_addrs[e] = n;
        for (std::uint32_t j = 0; j < n; ++j) {
            led.addr_name.push_back("E" + std::to_string(e) + "A" + std::to_string(j));
            led.addr_balance.push_back(0);
            led.addr_entity.push_back(e);
        }
    }
    const auto total_addrs = (std::uint64_t)led.addr_name.size();

    // Credits an output to a generator-tracked address.
    const auto credit = [&](std::uint32_t slot, std::int64_t value) {
        led.addr_balance[slot] += value;
        led.entity_balance[led.addr_entity[slot]] += value;
    };

    std::uint64_t tx_counter = 0;
    for (std::int64_t day = 0; day < config.days; ++day) {
        std::int64_t seq = 0;
        const auto ts = [&] { return day * kSecondsPerDay + std::min<std::int64_t>(seq++, 86399); };

        // one coinbase per day to a random miner entity
        const auto miner = (std::uint32_t)rng.next_below(entities);
        const std::uint32_t miner_slot = led.slot(miner, 0);
        emit(out, "cb" + std::to_string(day), ts(), '-', {},
             {{led.addr_name[miner_slot], config.coinbase_per_day}}, led);
        credit(miner_slot, config.coinbase_per_day);
        led.supply += config.coinbase_per_day;

        if (config.spike && config.spike->day == day) {
            // Move a fixed fraction of the current supply to one fresh
            // address, draining the richest entities first (deterministic).
            std::int64_t remaining = (std::int64_t)(config.spike->fraction * (double)led.supply);
            const std::string spike_addr = "SPIKEDAY" + std::to_string(day);
            std::vector<std::uint32_t> order(entities);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
                if (led.entity_balance[a] != led.entity_balance[b])
                    return led.entity_balance[a] > led.entity_balance[b];
                return a < b;
            });
            std::uint64_t part = 0;
            for (std::uint32_t e : order) {
                if (remaining <= 0) break;
                if (led.entity_balance[e] <= 0) break;
                std::vector<std::pair<std::uint32_t, std::int64_t>> ins;
                std::int64_t taken = 0;
                for (std::uint32_t j = 0; j < led.entity_addrs[e] && remaining - taken > 0; ++j) {
                    const std::uint32_t s = led.slot(e, j);
                    if (led.addr_balance[s] <= 0) continue;
                    const std::int64_t amount = std::min(led.addr_balance[s], remaining - taken);
                    ins.emplace_back(s, amount);
                    taken += amount;
                }
                if (taken == 0) continue;
                emit(out, "spike" + std::to_string(day) + "-" + std::to_string(part++), ts(), '-',
                     ins, {{spike_addr, taken}}, led);
                remaining -= taken;
            }
        }

        const std::int64_t transfers = poisson(rng, config.transfer_intensity);
        for (std::int64_t i = 0; i < transfers; ++i) {
            ++tx_counter;
            const std::string tx_id = "t" + std::to_string(tx_counter);

            if (tx_counter % 97 == 0) {
                // CoinJoin-style mixer: three entities, value-preserving, so
                // the hint is the only thing keeping their clusters apart.
                std::vector<std::uint32_t> takers;
                for (int attempt = 0; attempt < 48 && takers.size() < 3; ++attempt) {
                    const auto s = (std::uint32_t)rng.next_below(total_addrs);
                    if (led.addr_balance[s] <= 0) continue;
                    bool dup = false;
                    for (std::uint32_t other : takers)
                        if (led.addr_entity[other] == led.addr_entity[s]) dup = true;
                    if (!dup) takers.push_back(s);
                }
                if (takers.size() == 3) {
                    std::vector<std::pair<std::uint32_t, std::int64_t>> ins;
                    std::vector<std::pair<std::string, std::int64_t>> outs;
                    for (std::uint32_t s : takers) {
                        const std::int64_t v = 1 + (std::int64_t)rng.next_below(
                                                       (std::uint64_t)led.addr_balance[s]);
                        ins.emplace_back(s, v);
                        outs.emplace_back(led.addr_name[s], v);
                    }
                    emit(out, tx_id, ts(), '1', ins, outs, led);
                    for (const auto& [s, v] : ins) credit(s, v);
                    continue;
                }
            }

            // normal transfer
            std::uint32_t sender = 0;
            bool found = false;
            for (int attempt = 0; attempt < 32 && !found; ++attempt) {
                sender = (std::uint32_t)rng.next_below(total_addrs);
                found = led.addr_balance[sender] > 0;
            }
            if (!found) continue;

            std::vector<std::pair<std::uint32_t, std::int64_t>> ins;
            std::int64_t total =
                1 + (std::int64_t)rng.next_below((std::uint64_t)led.addr_balance[sender]);
            ins.emplace_back(sender, total);

            // occasionally co-spend a second address of the same entity,
            // feeding the multiple-input heuristic
            if (rng.next_below(4) == 0) {
                const std::uint32_t e = led.addr_entity[sender];
                for (std::uint32_t j = 0; j < led.entity_addrs[e]; ++j) {
                    const std::uint32_t s = led.slot(e, j);
                    if (s != sender && led.addr_balance[s] > 0) {
                        const std::int64_t extra =
                            1 + (std::int64_t)rng.next_below((std::uint64_t)led.addr_balance[s]);
                        ins.emplace_back(s, extra);
                        total += extra;
                        break;
                    }
                }
            }

            const auto recipient = (std::uint32_t)rng.next_below(entities);
            const std::uint32_t recipient_slot =
                led.slot(recipient, (std::uint32_t)rng.next_below(led.entity_addrs[recipient]));

            const std::int64_t fee = tx_counter % 5 == 0 ? total / 100 : 0;
            const std::int64_t burn = tx_counter % 50 == 0 ? total / 64 : 0;
            const std::int64_t paid = total - fee - burn;

            std::vector<std::pair<std::string, std::int64_t>> outs;
            outs.emplace_back(led.addr_name[recipient_slot], paid);
            if (burn > 0) outs.emplace_back(kUnspendableAddress, burn);

            emit(out, tx_id, ts(), tx_counter % 13 == 0 ? '0' : '-', ins, outs, led);
            credit(recipient_slot, paid);
            led.supply -= fee + burn;  // fee leaves circulation either way here
        }
    }
    out.flush();
}

std::string generate_string(const SynthConfig& config) {
    std::ostringstream out;
    generate(config, out);
    return out.str();
}

void generate_file(const SynthConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::input, "cannot open " + path + " for writing");
    generate(config, out);
    if (!out) throw Error(ErrorKind::input, "write failed: " + path);
}

BalanceGrid naive_balance_grid(const std::vector<Transaction>& txs,
                               const EntityAssignment& assignment, BalanceOptions options,
                               std::size_t grid_guard) {
    BalanceGrid grid;
    grid.slots = assignment.entity_count() + 2;
    if (txs.empty()) return grid;

    Period first = period_of(txs.front().timestamp), last = first;
    for (const auto& tx : txs) {
        const Period p = period_of(tx.timestamp);
        first = std::min(first, p);
        last = std::max(last, p);
    }
    grid.first = first;
    grid.last = last;
    const auto periods = (std::size_t)(last - first + 1);
    if (grid.slots * periods > grid_guard)
        throw Error(ErrorKind::input, "grid-size guard exceeded: " + std::to_string(grid.slots) +
                                          " slots x " + std::to_string(periods) + " periods");

    grid.balances.assign(grid.slots * periods, 0);
    grid.supply.assign(periods, 0);
    const std::size_t fee_slot = assignment.entity_count();
    const std::size_t burn_slot = fee_slot + 1;

    // Pass 1: per-period deltas straight from the transactions.
    for (const auto& tx : txs) {
        const auto p = (std::size_t)(period_of(tx.timestamp) - first);
        std::int64_t in_sum = 0, out_sum = 0, burned = 0;
        for (const auto& in : tx.inputs) {
            grid.balances[(std::size_t)assignment.entity_index_of(in.address) * periods + p] -=
                in.value;
            in_sum += in.value;
        }
        for (const auto& out : tx.outputs) {
            out_sum += out.value;
            if (out.address == kUnspendableAddress)
                burned += out.value;
            else
                grid.balances[(std::size_t)assignment.entity_index_of(out.address) * periods + p] +=
                    out.value;
        }
        if (tx.is_coinbase()) {
            grid.supply[p] += out_sum;
        } else {
            const std::int64_t fee = in_sum - out_sum;
            if (options.fee_policy == FeePolicy::pool)
                grid.balances[fee_slot * periods + p] += fee;
            else
                burned += fee;
        }
        if (burned != 0) {
            grid.balances[burn_slot * periods + p] += burned;
            grid.supply[p] -= burned;
        }
    }

    // Pass 2: prefix sums turn deltas into cumulative balances.
    for (std::size_t s = 0; s < grid.slots; ++s) {
        std::int64_t running = 0;
        for (std::size_t p = 0; p < periods; ++p) {
            running += grid.balances[s * periods + p];
            grid.balances[s * periods + p] = running;
        }
    }
    std::int64_t running = 0;
    for (std::size_t p = 0; p < periods; ++p) {
        running += grid.supply[p];
        grid.supply[p] = running;
    }
    return grid;
}

StakeShiftSeries naive_shift_oracle(const std::vector<Transaction>& txs,
                                    const EntityAssignment& assignment, std::int64_t lag,
                                    const DistributionOptions& dist_options,
                                    BalanceOptions balance_options, std::size_t grid_guard) {
    if (lag < 1) throw Error(ErrorKind::input, "lag must be >= 1");
    const BalanceGrid grid = naive_balance_grid(txs, assignment, balance_options, grid_guard);
    const std::int64_t periods = grid.last < grid.first ? 0 : grid.last - grid.first + 1;
    if (periods < lag + 1) throw InsufficientHistory(lag, periods);

    const std::size_t fee_slot = assignment.entity_count();
    const std::size_t burn_slot = fee_slot + 1;

    std::vector<double> dist_supply((std::size_t)periods, 0.0);
    for (std::int64_t p = 0; p < periods; ++p) {
        std::int64_t s = grid.supply[(std::size_t)p];
        if (!dist_options.include_fee_pool) s -= grid.at(fee_slot, grid.first + p);
        if (dist_options.include_burned) s += grid.at(burn_slot, grid.first + p);
        dist_supply[(std::size_t)p] = (double)s;
    }

    StakeShiftSeries series;
    series.lag = lag;
    series.ledger_first = grid.first;
    series.ledger_last = grid.last;

    for (Period t = grid.first + lag; t <= grid.last; ++t) {
        const double b_now = dist_supply[(std::size_t)(t - grid.first)];
        const double b_old = dist_supply[(std::size_t)(t - lag - grid.first)];
        if (b_now == 0.0 || b_old == 0.0) continue;
        double sum = 0.0;
        for (std::size_t s = 0; s < grid.slots; ++s) {
            if (s == fee_slot && !dist_options.include_fee_pool) continue;
            if (s == burn_slot && !dist_options.include_burned) continue;
            const double share_now = (double)grid.at(s, t) / b_now;
            const double share_old = (double)grid.at(s, t - lag) / b_old;
            sum += std::fabs(share_now - share_old);
        }
        series.values.emplace_back(t, 0.5 * sum);
    }
    return series;
}

}  // namespace stakeshift
