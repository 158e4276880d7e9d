#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "stakeshift/balance.hpp"
#include "stakeshift/types.hpp"

namespace stakeshift {

// Which pseudo-entities participate in stake distributions. Neither models a
// staking actor, so both are excluded by default; including the burned slot
// adds the burned value back to the distribution's denominator.
struct DistributionOptions {
    bool include_fee_pool = false;
    bool include_burned = false;
};

// Snapshot of stake ownership at one period, as a probability distribution
// in exact rational form: entity share = balance / supply. Holdings are
// sorted by entity id and only cover entities with a positive balance.
struct StakeDistribution {
    Period period = 0;
    std::int64_t supply = 0;
    std::vector<std::pair<EntityId, std::int64_t>> holdings;
};

StakeDistribution distribution_at(const BalanceSeries& balances, Period period,
                                  const DistributionOptions& options = {});

// Total variation distance: 1/2 * sum over the support union of the absolute
// share differences. Computed exactly over a common denominator in 128-bit
// integers and rounded to double once; if either supply is zero the distance
// is 0 by convention.
double statistical_distance(const StakeDistribution& x, const StakeDistribution& y);

// Stake shift at each period t in [first+lag, last]: the distance between
// the distributions at t-lag and t. Periods where either endpoint has zero
// supply are absent rather than NaN.
struct StakeShiftSeries {
    std::int64_t lag = 0;
    Period ledger_first = 0;  // full ledger timeline, for burn-in cuts
    Period ledger_last = -1;
    std::vector<std::pair<Period, double>> values;  // ordered by period
};

// Streaming computation: one forward sweep over balance change-points with a
// FIFO of the last `lag` per-period change lists. Memory stays proportional
// to the entity count plus the changes inside the window, never to
// entities x periods. Exact integer arithmetic makes the result identical
// for any entity partitioning or worker count.
StakeShiftSeries stake_shift_series(const BalanceSeries& balances, std::int64_t lag,
                                    const DistributionOptions& options = {});

// Same sweep evaluating several lags at once; `threads` > 1 splits the lag
// set across workers (output is bit-identical regardless).
std::vector<StakeShiftSeries> stake_shift_multi(const BalanceSeries& balances,
                                                std::span<const std::int64_t> lags,
                                                const DistributionOptions& options = {},
                                                unsigned threads = 1);

// Maximizing (period, value); ties take the earliest period.
std::pair<Period, double> execution_max_shift(const StakeShiftSeries& series);

// One entity's contribution to a period's shift: |R_t - R_{t-lag}| where R
// is the entity's share. Half the sum over all entities equals the shift.
struct ContributionRow {
    EntityId entity = 0;
    double abs_share_delta = 0.0;
    std::uint32_t rank = 0;  // 1-based
};

// All entities ranked by contribution (descending, entity id ascending on
// ties), truncated to the top k. k = 0 means no truncation.
std::vector<ContributionRow> top_contributors(const BalanceSeries& balances, Period period,
                                              std::int64_t lag, std::size_t k,
                                              const DistributionOptions& options = {});

namespace detail {
// Per-period count of entities the streaming sweep actually enumerated
// (changed within the lag window); exposed for efficiency tests.
struct SweepStats {
    std::vector<std::size_t> enumerated;  // parallel to the series values
};
StakeShiftSeries stake_shift_series_counted(const BalanceSeries& balances, std::int64_t lag,
                                            const DistributionOptions& options,
                                            SweepStats& stats);
}  // namespace detail

}  // namespace stakeshift
