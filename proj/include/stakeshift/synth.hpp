#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stakeshift/balance.hpp"
#include "stakeshift/clustering.hpp"
#include "stakeshift/shift.hpp"
#include "stakeshift/types.hpp"

namespace stakeshift {

// SplitMix64: counter-based PRNG (state_k = seed + k * 0x9E3779B97F4A7C15,
// output = mix(state_k)). Chosen so the generator can be reproduced from the
// seed in any language; the exact algorithm is documented in the README.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n); plain modulo, documented as part of the algorithm.
    std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

    // Uniform in [0, 1) with 53 random bits.
    double next_unit() { return (double)(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

struct SpikeSpec {
    std::int64_t day = 0;     // day index within the generated range
    double fraction = 0.5;    // fraction of current supply moved, in (0, 1]
};

struct SynthConfig {
    std::uint64_t seed = 1;
    std::int64_t days = 30;
    std::int64_t entities = 10;
    std::int64_t coinbase_per_day = 5'000'000'000;  // base units
    double transfer_intensity = 4.0;                // expected transfers/day
    std::optional<SpikeSpec> spike;

    void validate() const;  // throws Error(input) on bad values
};

// Deterministic synthetic ledger in the normalized dump format, sorted by
// timestamp. Conservation and non-negative balances hold by construction;
// a spike spec plants a known shift event on the given day.
void generate(const SynthConfig& config, std::ostream& out);
std::string generate_string(const SynthConfig& config);
void generate_file(const SynthConfig& config, const std::string& path);

// Dense entity x period cumulative-balance grid, the simple reference the
// streaming engine is tested against. Slots follow BalanceSeries layout
// (entities in canonical order, then fee pool, then burned).
struct BalanceGrid {
    Period first = 0, last = -1;
    std::size_t slots = 0;
    std::vector<std::int64_t> balances;  // slots x periods, slot-major
    std::vector<std::int64_t> supply;    // per period

    std::int64_t at(std::size_t slot, Period period) const {
        return balances[slot * (std::size_t)(last - first + 1) + (std::size_t)(period - first)];
    }
};

BalanceGrid naive_balance_grid(const std::vector<Transaction>& txs,
                               const EntityAssignment& assignment,
                               BalanceOptions options = {},
                               std::size_t grid_guard = 10'000'000);

// Reference shift computation: materializes full distributions per period
// and applies the distance definition directly, in plain double arithmetic.
// Refuses grids beyond `grid_guard` cells (test scale only).
StakeShiftSeries naive_shift_oracle(const std::vector<Transaction>& txs,
                                    const EntityAssignment& assignment, std::int64_t lag,
                                    const DistributionOptions& dist_options = {},
                                    BalanceOptions balance_options = {},
                                    std::size_t grid_guard = 10'000'000);

}  // namespace stakeshift
