#include "stakeshift/analytics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <string_view>

#include "stakeshift/errors.hpp"

namespace stakeshift {

LagSummary summary_stats(const StakeShiftSeries& series, double burn_in_fraction,
                         StdDevMode stddev_mode) {
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
        throw Error(ErrorKind::input, "burn-in fraction must lie in [0, 1)");

    // The cut is a fraction of the full ledger timeline, not of this series,
    // so every lag gets the same burn-in boundary.
    const double total_days = (double)(series.ledger_last - series.ledger_first + 1);
    const Period cut = series.ledger_first + (Period)std::ceil(burn_in_fraction * total_days);

    std::vector<double> kept;
    kept.reserve(series.values.size());
    for (const auto& [period, value] : series.values)
        if (period >= cut) kept.push_back(value);
    if (kept.empty()) throw EmptyAfterBurnIn();

    // Sorting first makes the result independent of input order bit-for-bit.
    std::sort(kept.begin(), kept.end());
    const std::size_t n = kept.size();

    double sum = 0.0;
    for (double v : kept) sum += v;
    const double mean = sum / (double)n;

    const double median =
        n % 2 == 1 ? kept[n / 2] : 0.5 * (kept[n / 2 - 1] + kept[n / 2]);

    double ss = 0.0;
    for (double v : kept) ss += (v - mean) * (v - mean);
    const double denom = stddev_mode == StdDevMode::population ? (double)n : (double)(n - 1);
    const double stddev = (n == 1 && stddev_mode == StdDevMode::sample) ? 0.0 : std::sqrt(ss / denom);

    return {series.lag, mean, median, stddev, n};
}

QuadraticFit fit_quadratic(std::span<const std::pair<double, double>> points) {
    std::set<double> distinct;
    for (const auto& [lag, value] : points) distinct.insert(lag);
    if (distinct.size() < 3) throw DegenerateDesign(distinct.size());

    const auto n = (Eigen::Index)points.size();
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lag = points[(std::size_t)i].first;
        design(i, 0) = 1.0;
        design(i, 1) = lag;
        design(i, 2) = lag * lag;
        y(i) = points[(std::size_t)i].second;
    }

    const Eigen::Vector3d coeffs = design.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd residuals = y - design * coeffs;
    const double ss_res = residuals.squaredNorm();
    const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();

    QuadraticFit fit;
    fit.coeffs = {coeffs(0), coeffs(1), coeffs(2)};
    if (ss_tot == 0.0)
        fit.r_squared = ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    else
        fit.r_squared = 1.0 - ss_res / ss_tot;
    return fit;
}

void ResilienceQuery::validate() const {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw Error(ErrorKind::input, "threshold must lie in (0, 1]");
    if (!(epsilon >= 0.0)) throw Error(ErrorKind::input, "epsilon must be >= 0");
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw Error(ErrorKind::input, "sigma must lie in [0, 1]");
}

ResilienceBound resilience_bound(const ResilienceQuery& query) {
    query.validate();
    const double raw = (1.0 - query.epsilon) * query.threshold - query.sigma;
    if (raw < 0.0) return {0.0, true};
    return {raw, false};
}

const std::vector<ProtocolLagEntry>& protocol_catalog() {
    static const std::vector<ProtocolLagEntry> catalog = {
        {"ouroboros", 7, 7,
         "epochs of 10k slots, leaders drawn from the chain up to slot 4k of the previous epoch; "
         "lag <= 14k slots = 7 days at 20 s slots with k = 2160"},
        {"ouroboros-praos", 10, 10,
         "leaders for epoch j drawn from the chain up to the end of epoch j-2; two epochs = 10 days"},
        {"ouroboros-genesis", 10, 10,
         "same two-epoch sampling rule as Praos; two epochs = 10 days"},
        {"algorand", 1, 1, "suggested parametrization uses a one-day look-back"},
        {"vault", 2, 2, "doubles Algorand's look-back to two days"},
        {"snow-white", 1, 10,
         "look-back of 2w blocks with w left open; common-prefix style requirements place it "
         "between 1 and 10 days"},
    };
    return catalog;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t tab = line.find('\t', pos);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            return fields;
        }
        fields.push_back(line.substr(pos, tab - pos));
        pos = tab + 1;
    }
}

}  // namespace

std::vector<TagRecord> load_tags(std::istream& in) {
    std::vector<TagRecord> tags;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 5)
            throw TagFileSyntax(line_no, "expected 5 tab-separated fields");
        TagRecord tag;
        if (fields[0] == "address")
            tag.key_type = TagRecord::KeyType::address;
        else if (fields[0] == "entity")
            tag.key_type = TagRecord::KeyType::entity;
        else
            throw TagFileSyntax(line_no, "key_type must be 'address' or 'entity'");
        if (fields[1].empty()) throw TagFileSyntax(line_no, "empty key");
        if (tag.key_type == TagRecord::KeyType::entity) {
            std::int64_t id = 0;
            auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), id);
            if (ec != std::errc{} || ptr != fields[1].data() + fields[1].size())
                throw TagFileSyntax(line_no, "entity key must be an integer id");
        }
        tag.key = std::string(fields[1]);
        tag.label = std::string(fields[2]);
        tag.category = std::string(fields[3]);
        tag.source = std::string(fields[4]);
        if (tag.label.empty()) throw TagFileSyntax(line_no, "empty label");
        tags.push_back(std::move(tag));
    }
    return tags;
}

std::vector<TagRecord> load_tags_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::input, "cannot open " + path);
    return load_tags(in);
}

std::vector<AnnotatedContribution> attribute_entities(const std::vector<ContributionRow>& rows,
                                                      const std::vector<TagRecord>& tags,
                                                      const EntityAssignment& assignment) {
    // Tags keyed by address annotate the whole entity owning the address;
    // tags on addresses the assignment never saw are silently unusable.
    std::map<EntityId, std::set<std::pair<std::string, std::string>>> by_entity;
    for (const auto& tag : tags) {
        if (tag.key_type == TagRecord::KeyType::entity) {
            std::int64_t id = 0;
            std::from_chars(tag.key.data(), tag.key.data() + tag.key.size(), id);
            by_entity[id].insert({tag.label, tag.category});
        } else if (auto idx = assignment.try_entity_index(tag.key)) {
            by_entity[assignment.entity_id(*idx)].insert({tag.label, tag.category});
        }
    }

    std::vector<AnnotatedContribution> annotated;
    annotated.reserve(rows.size());
    for (const auto& row : rows) {
        AnnotatedContribution a;
        a.row = row;
        auto it = by_entity.find(row.entity);
        if (it == by_entity.end() || it->second.empty())
            a.tags = {{"unknown", ""}};
        else
            a.tags.assign(it->second.begin(), it->second.end());  // set order = lexicographic
        annotated.push_back(std::move(a));
    }
    return annotated;
}

}  // namespace stakeshift
