// Command-line pipeline: synth -> cluster -> shift -> spikes / fit /
// resilience. Every command writes plain TSV files plus a manifest.json
// into --out; rerunning with the same inputs reproduces the output tree
// byte for byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "stakeshift/analytics.hpp"
#include "stakeshift/balance.hpp"
#include "stakeshift/clustering.hpp"
#include "stakeshift/errors.hpp"
#include "stakeshift/parser.hpp"
#include "stakeshift/shift.hpp"
#include "stakeshift/synth.hpp"
#include "stakeshift/types.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace stakeshift;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitInput = 2;      // bad input data / arguments
constexpr int kExitInvariant = 3;  // violated engine invariant

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::input, "cannot open " + path);
    std::uint64_t hash = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= (std::uint8_t)buf[i];
            hash *= 1099511628211ULL;
        }
        if (in.eof()) break;
    }
    return hash;
}

std::string hex64(std::uint64_t v) {
    char out[20];
    std::snprintf(out, sizeof out, "%016" PRIx64, v);
    return out;
}

// Output directory holding the command's files plus its manifest.
struct OutputDir {
    fs::path dir;
    std::vector<std::string> written;

    explicit OutputDir(const std::string& path) : dir(path) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Error(ErrorKind::input, "cannot create " + path + ": " + ec.message());
    }

    std::ofstream create(const std::string& name) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw Error(ErrorKind::input, "cannot write " + (dir / name).string());
        written.push_back(name);
        return out;
    }

    void write_manifest(const std::string& command, const std::vector<std::string>& input_paths,
                        const json& params) {
        json inputs = json::array();
        for (const auto& path : input_paths) {
            std::error_code ec;
            const auto bytes = fs::file_size(path, ec);
            inputs.push_back({{"path", path},
                              {"fnv1a64", hex64(fnv1a64_file(path))},
                              {"bytes", ec ? 0 : (std::uint64_t)bytes}});
        }
        std::sort(written.begin(), written.end());
        const json manifest = {{"tool", "stakeshift"}, {"version", kVersion},
                               {"command", command},  {"inputs", inputs},
                               {"out_dir", dir.string()}, {"outputs", written},
                               {"params", params}};
        std::ofstream m(dir / "manifest.json", std::ios::binary);
        if (!m) throw Error(ErrorKind::input, "cannot write manifest in " + dir.string());
        m << manifest.dump(2) << '\n';
    }
};

EntityAssignment load_assignment(const std::string& path) {
    {
        std::ifstream probe(path, std::ios::binary);
        if (!probe) throw Error(ErrorKind::input, "cannot open " + path);
        char magic[6] = {};
        probe.read(magic, sizeof magic);
        if (probe.gcount() == 6 && std::string_view(magic, 6) == "SSASGN") {
            std::ifstream in(path, std::ios::binary);
            return EntityAssignment::read_cache(in);
        }
    }
    return EntityAssignment::read_tsv_file(path);
}

BalanceOptions balance_options_for(const std::string& fee_policy) {
    if (fee_policy == "pool") return {FeePolicy::pool};
    if (fee_policy == "burn") return {FeePolicy::burn};
    if (fee_policy == "miner-unsupported-error")
        throw Error(ErrorKind::input,
                    "fee policy 'miner' is not supported: the dump format carries no miner "
                    "attribution; use 'pool' or 'burn'");
    throw Error(ErrorKind::input, "unknown fee policy '" + fee_policy + "'");
}

struct CommonArgs {
    std::string input;
    std::string assignment;
    std::string out;
    std::string fee_policy = "pool";
    bool include_fee_pool = false;
};

BalanceSeries load_balances(const CommonArgs& args, const EntityAssignment& assignment) {
    auto reader = TransactionReader::open(args.input);
    return compute_balances(reader, assignment, balance_options_for(args.fee_policy));
}

// --- subcommands ---------------------------------------------------------

int run_synth(const SynthConfig& config, const std::string& out_path) {
    OutputDir out(out_path);
    {
        auto f = out.create("dump.tsv");
        generate(config, f);
    }
    json params = {{"seed", config.seed},
                   {"days", config.days},
                   {"entities", config.entities},
                   {"coinbase_per_day", config.coinbase_per_day},
                   {"transfer_intensity", config.transfer_intensity}};
    if (config.spike) {
        params["spike_day"] = config.spike->day;
        params["spike_fraction"] = config.spike->fraction;
    }
    out.write_manifest("synth", {}, params);
    return 0;
}

int run_cluster(const std::string& input, const std::string& out_path, bool cache) {
    ClusterBuilder builder;
    ScanStatsAccumulator stats_acc;
    {
        auto reader = TransactionReader::open(input);
        while (auto tx = reader.next()) {
            builder.add(*tx);
            stats_acc.add(*tx);
        }
    }
    const EntityAssignment assignment = builder.finish();
    const LedgerStats stats = stats_acc.finish();

    OutputDir out(out_path);
    {
        auto f = out.create("assignment.tsv");
        assignment.write_tsv(f);
    }
    if (cache) {
        auto f = out.create("assignment.bin");
        assignment.write_cache(f);
    }
    {
        auto f = out.create("counts.tsv");
        f << "txs\taddresses\tclusters\tentities\n";
        f << stats.tx_count << '\t' << stats.address_count << '\t' << assignment.cluster_count()
          << '\t' << assignment.entity_count() << '\n';
    }
    std::cout << "txs\taddresses\tclusters\tentities\n"
              << stats.tx_count << '\t' << stats.address_count << '\t'
              << assignment.cluster_count() << '\t' << assignment.entity_count() << '\n';

    out.write_manifest("cluster", {input}, {{"cache", cache}});
    return 0;
}

int run_shift(const CommonArgs& args, std::vector<std::int64_t> lags, double burn_in,
              unsigned threads, bool export_balances) {
    if (lags.empty()) {
        lags.resize(14);
        std::iota(lags.begin(), lags.end(), 1);
    }
    const EntityAssignment assignment = load_assignment(args.assignment);
    const BalanceSeries balances = load_balances(args, assignment);
    const DistributionOptions dist{args.include_fee_pool, false};
    const auto series = stake_shift_multi(balances, lags, dist, threads);

    OutputDir out(args.out);
    if (export_balances) {
        auto f = out.create("balances.tsv");
        balances.write_tsv(f);
    }
    for (const auto& s : series) {
        char name[40];
        std::snprintf(name, sizeof name, "shift_lag%02" PRId64 ".tsv", s.lag);
        auto f = out.create(name);
        f << "period\tiso_date\tlag\tshift\n";
        for (const auto& [period, value] : s.values)
            f << period << '\t' << iso_date(period) << '\t' << s.lag << '\t' << fmt_double(value)
              << '\n';
    }
    {
        auto f = out.create("summary.tsv");
        f << "lag\tmean\tmedian\tstddev\tn\n";
        for (const auto& s : series) {
            const LagSummary sum = summary_stats(s, burn_in);
            f << sum.lag << '\t' << fmt_double(sum.mean) << '\t' << fmt_double(sum.median) << '\t'
              << fmt_double(sum.stddev) << '\t' << sum.count << '\n';
        }
    }
    {
        auto f = out.create("max_shift.tsv");
        f << "lag\tperiod\tiso_date\tshift\n";
        for (const auto& s : series) {
            const auto [period, value] = execution_max_shift(s);
            f << s.lag << '\t' << period << '\t' << iso_date(period) << '\t' << fmt_double(value)
              << '\n';
        }
    }
    out.write_manifest("shift", {args.input, args.assignment},
                       {{"lags", lags},
                        {"burn_in", burn_in},
                        {"fee_policy", args.fee_policy},
                        {"include_fee_pool", args.include_fee_pool},
                        {"threads", threads},
                        {"export_balances", export_balances}});
    return 0;
}

int run_spikes(const CommonArgs& args, Period period, std::int64_t lag, std::size_t top,
               const std::string& tags_path) {
    const EntityAssignment assignment = load_assignment(args.assignment);
    const BalanceSeries balances = load_balances(args, assignment);
    const DistributionOptions dist{args.include_fee_pool, false};
    const auto rows = top_contributors(balances, period, lag, top, dist);

    OutputDir out(args.out);
    auto f = out.create("contributions.tsv");
    if (tags_path.empty()) {
        f << "rank\tentity_id\tabs_share_delta\n";
        for (const auto& row : rows)
            f << row.rank << '\t' << row.entity << '\t' << fmt_double(row.abs_share_delta) << '\n';
    } else {
        const auto tags = load_tags_file(tags_path);
        const auto annotated = attribute_entities(rows, tags, assignment);
        f << "rank\tentity_id\tabs_share_delta\ttags\n";
        for (const auto& a : annotated) {
            f << a.row.rank << '\t' << a.row.entity << '\t' << fmt_double(a.row.abs_share_delta)
              << '\t';
            for (std::size_t i = 0; i < a.tags.size(); ++i) {
                if (i) f << ',';
                f << a.tags[i].first;
                if (!a.tags[i].second.empty()) f << '(' << a.tags[i].second << ')';
            }
            f << '\n';
        }
    }

    std::vector<std::string> inputs = {args.input, args.assignment};
    if (!tags_path.empty()) inputs.push_back(tags_path);
    out.write_manifest("spikes", inputs,
                       {{"period", period},
                        {"lag", lag},
                        {"top", top},
                        {"fee_policy", args.fee_policy},
                        {"include_fee_pool", args.include_fee_pool}});
    return 0;
}

// summary.tsv rows: lag mean median stddev n
struct SummaryTable {
    std::vector<std::int64_t> lags;
    std::vector<double> mean, median, stddev;
};

SummaryTable read_summary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::input, "cannot open " + path);
    SummaryTable table;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.rfind("lag\t", 0) == 0) continue;  // header
        std::int64_t lag;
        double mean, median, stddev;
        if (std::sscanf(line.c_str(), "%" PRId64 "\t%lf\t%lf\t%lf", &lag, &mean, &median,
                        &stddev) != 4)
            throw SyntaxError(line_no, "expected lag<TAB>mean<TAB>median<TAB>stddev");
        table.lags.push_back(lag);
        table.mean.push_back(mean);
        table.median.push_back(median);
        table.stddev.push_back(stddev);
    }
    if (table.lags.empty()) throw Error(ErrorKind::input, "empty summary table: " + path);
    return table;
}

int run_fit(const std::string& summary_path, const std::string& out_path) {
    const SummaryTable table = read_summary(summary_path);
    OutputDir out(out_path);
    auto f = out.create("fit.tsv");
    f << "statistic\tc0\tc1\tc2\tr_squared\n";
    const std::pair<const char*, const std::vector<double>*> stats[] = {
        {"mean", &table.mean}, {"median", &table.median}, {"stddev", &table.stddev}};
    for (const auto& [name, values] : stats) {
        std::vector<std::pair<double, double>> points;
        for (std::size_t i = 0; i < table.lags.size(); ++i)
            points.emplace_back((double)table.lags[i], (*values)[i]);
        const QuadraticFit fit = fit_quadratic(points);
        f << name << '\t' << fmt_double(fit.coeffs[0]) << '\t' << fmt_double(fit.coeffs[1]) << '\t'
          << fmt_double(fit.coeffs[2]) << '\t' << fmt_double(fit.r_squared) << '\n';
    }
    out.write_manifest("fit", {summary_path}, json::object());
    return 0;
}

int run_protocols(const std::string& out_path) {
    OutputDir out(out_path);
    auto f = out.create("protocols.tsv");
    f << "protocol\tlag_days_min\tlag_days_max\tbasis\n";
    for (const auto& entry : protocol_catalog())
        f << entry.name << '\t' << entry.lag_days_min << '\t' << entry.lag_days_max << '\t'
          << entry.basis << '\n';
    out.write_manifest("protocols", {}, json::object());
    return 0;
}

int run_resilience(const std::string& protocol, double threshold, bool threshold_set,
                   double epsilon, double sigma, bool sigma_set, const std::string& summary_path,
                   const std::string& out_path) {
    std::int64_t lag_min = 0, lag_max = 0;
    if (!protocol.empty()) {
        const auto& catalog = protocol_catalog();
        auto it = std::find_if(catalog.begin(), catalog.end(),
                               [&](const ProtocolLagEntry& e) { return e.name == protocol; });
        if (it == catalog.end())
            throw Error(ErrorKind::input, "unknown protocol '" + protocol + "'");
        lag_min = it->lag_days_min;
        lag_max = it->lag_days_max;
    }

    OutputDir out(out_path);
    auto f = out.create("resilience.tsv");
    f << "lag\tsigma\tthreshold\tepsilon\talpha_max\tclamped\n";

    const auto emit_row = [&](std::int64_t lag, double sig, double thr) {
        const ResilienceBound bound = resilience_bound({thr, epsilon, sig});
        f << lag << '\t' << fmt_double(sig) << '\t' << fmt_double(thr) << '\t'
          << fmt_double(epsilon) << '\t' << fmt_double(bound.alpha_max) << '\t'
          << (bound.clamped ? 1 : 0) << '\n';
    };

    std::vector<std::string> inputs;
    if (!summary_path.empty()) {
        inputs.push_back(summary_path);
        const SummaryTable table = read_summary(summary_path);
        for (std::size_t i = 0; i < table.lags.size(); ++i) {
            if (!protocol.empty() && (table.lags[i] < lag_min || table.lags[i] > lag_max))
                continue;
            // mean stake shift is the sigma estimate for the lag
            if (threshold_set) {
                emit_row(table.lags[i], table.mean[i], threshold);
            } else {
                emit_row(table.lags[i], table.mean[i], 0.5);
                emit_row(table.lags[i], table.mean[i], 1.0 / 3.0);
            }
        }
    } else if (sigma_set) {
        const double thr = threshold_set ? threshold : 0.5;
        emit_row(protocol.empty() ? 0 : lag_max, sigma, thr);
    } else {
        throw Error(ErrorKind::input, "need --sigma or --summary");
    }

    json params = {{"epsilon", epsilon}};
    if (!protocol.empty()) params["protocol"] = protocol;
    if (threshold_set) params["threshold"] = threshold;
    if (sigma_set) params["sigma"] = sigma;
    out.write_manifest("resilience", inputs, params);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stabilized stake shift over normalized UTXO transaction dumps"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a deterministic synthetic ledger dump");
    SynthConfig config;
    std::string synth_out;
    std::int64_t spike_day = -1;
    double spike_fraction = 0.0;
    synth->add_option("--seed", config.seed, "PRNG seed")->capture_default_str();
    synth->add_option("--days", config.days, "number of days")->capture_default_str();
    synth->add_option("--entities", config.entities, "number of entities")->capture_default_str();
    synth->add_option("--coinbase", config.coinbase_per_day, "daily issuance in base units")
        ->capture_default_str();
    synth->add_option("--intensity", config.transfer_intensity, "expected transfers per day")
        ->capture_default_str();
    synth->add_option("--spike-day", spike_day, "plant a spike on this day");
    synth->add_option("--spike-fraction", spike_fraction, "fraction of supply the spike moves");
    synth->add_option("--out", synth_out, "output directory")->required();

    // cluster
    auto* cluster = app.add_subcommand("cluster", "multiple-input clustering with CoinJoin filter");
    std::string cluster_input, cluster_out;
    bool cluster_cache = false;
    cluster->add_option("--input", cluster_input, "transaction dump (.tsv or .tsv.gz)")->required();
    cluster->add_option("--out", cluster_out, "output directory")->required();
    cluster->add_flag("--cache", cluster_cache, "also write the binary assignment cache");

    // shift
    auto* shift = app.add_subcommand("shift", "stake shift series, summary stats and maxima");
    CommonArgs shift_args;
    std::vector<std::int64_t> lags;
    double burn_in = 0.06;
    unsigned threads = 1;
    bool export_balances = false;
    shift->add_option("--input", shift_args.input, "transaction dump")->required();
    shift->add_option("--assignment", shift_args.assignment, "assignment file (tsv or cache)")
        ->required();
    shift->add_option("--lags", lags, "lags in days (default 1..14)")->delimiter(',');
    shift->add_option("--burn-in", burn_in, "burn-in fraction of the timeline")
        ->capture_default_str();
    shift->add_option("--fee-policy", shift_args.fee_policy, "pool|burn|miner-unsupported-error")
        ->capture_default_str();
    shift->add_flag("--include-fee-pool", shift_args.include_fee_pool,
                    "include the fee pool in distributions");
    shift->add_option("--threads", threads, "worker threads")->capture_default_str();
    shift->add_flag("--export-balances", export_balances,
                    "also write per-entity balance change-points");
    shift->add_option("--out", shift_args.out, "output directory")->required();

    // spikes
    auto* spikes = app.add_subcommand("spikes", "ranked per-entity contributions at one period");
    CommonArgs spikes_args;
    Period spike_period = 0;
    std::int64_t spike_lag = 1;
    std::size_t top = 60;
    std::string tags_path;
    spikes->add_option("--input", spikes_args.input, "transaction dump")->required();
    spikes->add_option("--assignment", spikes_args.assignment, "assignment file")->required();
    spikes->add_option("--period", spike_period, "day number to decompose")->required();
    spikes->add_option("--lag", spike_lag, "lag in days")->capture_default_str();
    spikes->add_option("--top", top, "rows to keep (0 = all)")->capture_default_str();
    spikes->add_option("--tags", tags_path, "attribution tag file");
    spikes->add_option("--fee-policy", spikes_args.fee_policy, "pool|burn")->capture_default_str();
    spikes->add_flag("--include-fee-pool", spikes_args.include_fee_pool,
                     "include the fee pool in distributions");
    spikes->add_option("--out", spikes_args.out, "output directory")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "quadratic lag-trend fit of a summary table");
    std::string fit_summary, fit_out;
    fit->add_option("--summary", fit_summary, "summary.tsv from the shift command")->required();
    fit->add_option("--out", fit_out, "output directory")->required();

    // resilience
    auto* res = app.add_subcommand("resilience", "adversarial-stake margin under stake shift");
    std::string res_protocol, res_summary, res_out;
    double res_threshold = 0.5, res_epsilon = 0.0, res_sigma = 0.0;
    res->add_option("--protocol", res_protocol, "protocol name from the catalog");
    auto* thr_opt = res->add_option("--threshold", res_threshold, "tolerance threshold T");
    res->add_option("--epsilon", res_epsilon, "epsilon margin")->capture_default_str();
    auto* sigma_opt = res->add_option("--sigma", res_sigma, "stake shift value");
    res->add_option("--summary", res_summary, "summary.tsv for per-lag reports");
    res->add_option("--out", res_out, "output directory")->required();

    // protocols
    auto* protocols = app.add_subcommand("protocols", "write the protocol lag catalog");
    std::string protocols_out;
    protocols->add_option("--out", protocols_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (synth->parsed()) {
            if (spike_day >= 0) config.spike = SpikeSpec{spike_day, spike_fraction};
            return run_synth(config, synth_out);
        }
        if (cluster->parsed()) return run_cluster(cluster_input, cluster_out, cluster_cache);
        if (shift->parsed())
            return run_shift(shift_args, lags, burn_in, threads, export_balances);
        if (spikes->parsed())
            return run_spikes(spikes_args, spike_period, spike_lag, top, tags_path);
        if (fit->parsed()) return run_fit(fit_summary, fit_out);
        if (res->parsed())
            return run_resilience(res_protocol, res_threshold, thr_opt->count() > 0, res_epsilon,
                                  res_sigma, sigma_opt->count() > 0, res_summary, res_out);
        if (protocols->parsed()) return run_protocols(protocols_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::input ? kExitInput : kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvariant;
    }
    return 0;
}
