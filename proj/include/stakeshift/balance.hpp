#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "stakeshift/clustering.hpp"
#include "stakeshift/parser.hpp"
#include "stakeshift/types.hpp"

namespace stakeshift {

// What happens to the fee (sum of inputs minus sum of outputs):
//   pool — credited to a reserved fee-pool pseudo-entity, supply conserved;
//   burn — treated like provably unspendable value, leaves the supply.
enum class FeePolicy { pool, burn };

struct BalanceOptions {
    FeePolicy fee_policy = FeePolicy::pool;
};

struct ChangePoint {
    Period period;         // day the balance changed
    std::int64_t balance;  // cumulative balance at end of that day
};

// Sparse per-entity balance histories plus the spendable-supply series.
// Periods without change are omitted; consecutive points differ in balance.
//
// Slots 0..entity_count-1 are the assignment's entities in canonical-id
// order; two extra slots at the end hold the fee pool and the cumulative
// burned value. Burned value is *outside* the supply.
class BalanceSeries {
public:
    std::size_t slot_count() const noexcept { return changes_.size(); }
    std::size_t entity_count() const noexcept { return slot_count() - 2; }
    std::uint32_t fee_pool_slot() const noexcept { return (std::uint32_t)entity_count(); }
    std::uint32_t burned_slot() const noexcept { return (std::uint32_t)entity_count() + 1; }

    EntityId entity_id(std::uint32_t slot) const;
    // Slot for a canonical entity id (including the pseudo-entities).
    std::uint32_t slot_of(EntityId id) const;

    Period first_period() const noexcept { return first_; }
    Period last_period() const noexcept { return last_; }

    const std::vector<ChangePoint>& changes(std::uint32_t slot) const { return changes_[slot]; }
    const std::vector<ChangePoint>& supply_changes() const noexcept { return supply_; }

    // Per-period tallies behind the supply: issuance (coinbase outputs) and
    // burned value (unspendable outputs, plus fees under the burn policy).
    const std::vector<ChangePoint>& issuance_by_period() const noexcept { return issuance_; }
    const std::vector<ChangePoint>& burns_by_period() const noexcept { return burns_; }

    // Cumulative balance via predecessor lookup; zero before the first
    // change-point. Period must lie within [first_period, last_period].
    std::int64_t balance_at(std::uint32_t slot, Period period) const;
    std::int64_t supply_at(Period period) const;

    const BalanceOptions& options() const noexcept { return options_; }

    // `entity_id<TAB>period<TAB>cumulative_balance` change-points, slots in
    // canonical-id order.
    void write_tsv(std::ostream& out) const;

private:
    friend class BalanceAccumulator;

    std::vector<std::vector<ChangePoint>> changes_;  // per slot
    std::vector<EntityId> entity_ids_;               // per slot
    std::vector<ChangePoint> supply_;                // cumulative spendable supply
    std::vector<ChangePoint> issuance_;              // per-period amounts (not cumulative)
    std::vector<ChangePoint> burns_;                 // per-period amounts (not cumulative)
    Period first_ = 0, last_ = -1;
    BalanceOptions options_;
};

// Streaming accumulator: feed transactions in any order, then finalize.
// Input order only affects intra-period netting, never the result.
class BalanceAccumulator {
public:
    BalanceAccumulator(const EntityAssignment& assignment, BalanceOptions options = {});
    void add(const Transaction& tx);
    BalanceSeries finish();

private:
    void bump(std::uint32_t slot, Period period, std::int64_t delta);

    const EntityAssignment& assignment_;
    BalanceOptions options_;
    // Per-slot (period, net delta) runs; kept merged while input stays
    // period-sorted, deduplicated during finish() otherwise.
    std::vector<std::vector<ChangePoint>> deltas_;
    std::vector<ChangePoint> issuance_, burns_;
    Period first_ = 0, last_ = -1;
    bool any_ = false;
};

BalanceSeries compute_balances(const std::vector<Transaction>& txs,
                               const EntityAssignment& assignment,
                               BalanceOptions options = {});
BalanceSeries compute_balances(TransactionReader& reader,
                               const EntityAssignment& assignment,
                               BalanceOptions options = {});

// Cumulative balance of a canonical entity id at a period.
std::int64_t balance_at(const BalanceSeries& series, EntityId entity, Period period);

}  // namespace stakeshift
