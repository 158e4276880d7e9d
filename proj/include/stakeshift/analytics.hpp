#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stakeshift/clustering.hpp"
#include "stakeshift/shift.hpp"
#include "stakeshift/types.hpp"

namespace stakeshift {

enum class StdDevMode { population, sample };

struct LagSummary {
    std::int64_t lag = 0;
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;  // values retained after burn-in
};

// Mean / median / standard deviation of a shift series after dropping the
// first ceil(fraction * total ledger days) periods of the full timeline (the
// same cut for every lag, so summaries stay comparable). Median is the
// midpoint of the two central order statistics for even counts; stddev is
// population (divide by n) by default.
LagSummary summary_stats(const StakeShiftSeries& series, double burn_in_fraction = 0.06,
                         StdDevMode stddev_mode = StdDevMode::population);

struct QuadraticFit {
    std::array<double, 3> coeffs{};  // c0 + c1*lag + c2*lag^2
    double r_squared = 0.0;
};

// Least-squares degree-2 polynomial through (lag, statistic) points, solved
// by Householder QR on the Vandermonde design. Needs >= 3 distinct lags.
QuadraticFit fit_quadratic(std::span<const std::pair<double, double>> points);

struct ResilienceQuery {
    double threshold = 0.5;  // T, typically 1/2 or 1/3; in (0, 1]
    double epsilon = 0.0;    // >= 0
    double sigma = 0.0;      // stake shift, in [0, 1]

    void validate() const;  // throws Error(input) outside the stated ranges
};

struct ResilienceBound {
    double alpha_max = 0.0;  // (1 - epsilon) * threshold - sigma
    bool clamped = false;    // raw value was negative, reported as 0
};

ResilienceBound resilience_bound(const ResilienceQuery& query);

// Stake distribution lag survey for provably secure PoS protocol families.
// A range (min < max) means the protocol fixes no single value.
struct ProtocolLagEntry {
    std::string name;
    std::int64_t lag_days_min = 0;
    std::int64_t lag_days_max = 0;
    std::string basis;
};

const std::vector<ProtocolLagEntry>& protocol_catalog();

// Attribution tags from a local file, one record per line:
//   key_type(address|entity)<TAB>key<TAB>label<TAB>category<TAB>source
struct TagRecord {
    enum class KeyType { address, entity };
    KeyType key_type = KeyType::address;
    std::string key;
    std::string label;
    std::string category;
    std::string source;
};

std::vector<TagRecord> load_tags(std::istream& in);
std::vector<TagRecord> load_tags_file(const std::string& path);

struct AnnotatedContribution {
    ContributionRow row;
    // (label, category) pairs, lexicographically sorted; a single
    // ("unknown", "") entry when nothing matches.
    std::vector<std::pair<std::string, std::string>> tags;
};

// Joins contribution rows with tags, propagating address-keyed tags to the
// whole entity through the assignment. Conflicting labels are all retained.
std::vector<AnnotatedContribution> attribute_entities(const std::vector<ContributionRow>& rows,
                                                      const std::vector<TagRecord>& tags,
                                                      const EntityAssignment& assignment);

}  // namespace stakeshift
