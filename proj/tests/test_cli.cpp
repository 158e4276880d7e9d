#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kBinary = STAKESHIFT_CLI_PATH;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& sub = "") const {
        return sub.empty() ? path.string() : (path / sub).string();
    }
};

int run(const std::string& args) {
    const std::string cmd = kBinary + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string first_line(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::getline(in, line);
    return line;
}

std::map<std::string, std::string> tree_bytes(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file())
            files[fs::relative(entry.path(), dir).string()] = slurp(entry.path().string());
    return files;
}

}  // namespace

TEST_CASE("full pipeline produces schema-valid outputs") {
    TempDir tmp("stakeshift_cli_pipeline");
    REQUIRE(run("synth --seed 11 --days 50 --entities 30 --coinbase 5000000 --intensity 6 "
                "--spike-day 25 --spike-fraction 0.4 --out " + tmp.str("s")) == 0);
    CHECK(fs::exists(tmp.path / "s" / "dump.tsv"));
    CHECK(fs::exists(tmp.path / "s" / "manifest.json"));

    REQUIRE(run("cluster --input " + tmp.str("s/dump.tsv") + " --cache --out " + tmp.str("c")) == 0);
    CHECK(fs::exists(tmp.path / "c" / "assignment.tsv"));
    CHECK(fs::exists(tmp.path / "c" / "assignment.bin"));
    CHECK(first_line(tmp.str("c/counts.tsv")) == "txs\taddresses\tclusters\tentities");

    REQUIRE(run("shift --input " + tmp.str("s/dump.tsv") + " --assignment " +
                tmp.str("c/assignment.tsv") + " --lags 1,7,14 --out " + tmp.str("sh")) == 0);
    for (const char* name : {"shift_lag01.tsv", "shift_lag07.tsv", "shift_lag14.tsv",
                             "summary.tsv", "max_shift.tsv", "manifest.json"})
        CHECK(fs::exists(tmp.path / "sh" / name));
    CHECK(first_line(tmp.str("sh/shift_lag01.tsv")) == "period\tiso_date\tlag\tshift");
    CHECK(first_line(tmp.str("sh/summary.tsv")) == "lag\tmean\tmedian\tstddev\tn");

    // binary assignment cache gives the same shift series
    REQUIRE(run("shift --input " + tmp.str("s/dump.tsv") + " --assignment " +
                tmp.str("c/assignment.bin") + " --lags 1,7,14 --out " + tmp.str("sh_bin")) == 0);
    CHECK(slurp(tmp.str("sh/shift_lag07.tsv")) == slurp(tmp.str("sh_bin/shift_lag07.tsv")));

    REQUIRE(run("spikes --input " + tmp.str("s/dump.tsv") + " --assignment " +
                tmp.str("c/assignment.tsv") + " --period 25 --lag 1 --top 10 --out " +
                tmp.str("sp")) == 0);
    CHECK(first_line(tmp.str("sp/contributions.tsv")) == "rank\tentity_id\tabs_share_delta");

    // default lag set is 1..14; balance change-points export on request
    REQUIRE(run("shift --input " + tmp.str("s/dump.tsv") + " --assignment " +
                tmp.str("c/assignment.tsv") + " --export-balances --out " + tmp.str("sh_all")) ==
            0);
    CHECK(fs::exists(tmp.path / "sh_all" / "shift_lag14.tsv"));
    CHECK(fs::exists(tmp.path / "sh_all" / "balances.tsv"));

    REQUIRE(run("fit --summary " + tmp.str("sh/summary.tsv") + " --out " + tmp.str("f")) == 0);
    CHECK(first_line(tmp.str("f/fit.tsv")) == "statistic\tc0\tc1\tc2\tr_squared");

    REQUIRE(run("resilience --summary " + tmp.str("sh/summary.tsv") + " --out " + tmp.str("r")) ==
            0);
    CHECK(first_line(tmp.str("r/resilience.tsv")) ==
          "lag\tsigma\tthreshold\tepsilon\talpha_max\tclamped");
    // one row per lag and threshold: 3 lags x {1/2, 1/3} + header
    std::istringstream rows(slurp(tmp.str("r/resilience.tsv")));
    std::string line;
    int count = 0;
    while (std::getline(rows, line)) ++count;
    CHECK(count == 1 + 3 * 2);

    REQUIRE(run("protocols --out " + tmp.str("p")) == 0);
    CHECK(first_line(tmp.str("p/protocols.tsv")) == "protocol\tlag_days_min\tlag_days_max\tbasis");

    // protocol filter keeps only the catalog's lags (7 for this one)
    REQUIRE(run("resilience --protocol ouroboros --summary " + tmp.str("sh/summary.tsv") +
                " --out " + tmp.str("r7")) == 0);
    std::istringstream filtered(slurp(tmp.str("r7/resilience.tsv")));
    int filtered_rows = 0;
    while (std::getline(filtered, line)) {
        if (filtered_rows > 0) CHECK(line.rfind("7\t", 0) == 0);
        ++filtered_rows;
    }
    CHECK(filtered_rows == 1 + 2);  // header + lag 7 at both thresholds
}

TEST_CASE("cluster counts on a tiny hand-checked fixture") {
    TempDir tmp("stakeshift_cli_counts");
    {
        std::ofstream dump(tmp.str("dump.tsv"), std::ios::binary);
        dump << "c1\t0\t-\t\tA1:100\n";                       // coinbase
        dump << "t1\t86400\t-\tA1:100\tA2:60,A3:40\n";        // A1 -> A2, A3
        dump << "t2\t172800\t-\tA2:60,A3:40\tA4:100\n";       // co-spend merges A2+A3
    }
    REQUIRE(run("cluster --input " + tmp.str("dump.tsv") + " --out " + tmp.str("c")) == 0);
    const auto counts = slurp(tmp.str("c/counts.tsv"));
    // 3 txs, 4 addresses, 1 multi-address cluster, 3 entities
    CHECK(counts == "txs\taddresses\tclusters\tentities\n3\t4\t1\t3\n");
}

TEST_CASE("max shift report names a planted spike day") {
    TempDir tmp("stakeshift_cli_spikemax");
    REQUIRE(run("synth --seed 21 --days 40 --entities 25 --coinbase 2000 --intensity 1 "
                "--spike-day 22 --spike-fraction 0.75 --out " + tmp.str("s")) == 0);
    REQUIRE(run("cluster --input " + tmp.str("s/dump.tsv") + " --out " + tmp.str("c")) == 0);
    REQUIRE(run("shift --input " + tmp.str("s/dump.tsv") + " --assignment " +
                tmp.str("c/assignment.tsv") + " --lags 1 --out " + tmp.str("sh")) == 0);
    std::istringstream rows(slurp(tmp.str("sh/max_shift.tsv")));
    std::string header, row;
    std::getline(rows, header);
    std::getline(rows, row);
    CHECK(row.rfind("1\t22\t", 0) == 0);
}

TEST_CASE("tags annotate spike rows") {
    TempDir tmp("stakeshift_cli_tags");
    REQUIRE(run("synth --seed 3 --days 20 --entities 10 --intensity 4 --out " + tmp.str("s")) == 0);
    REQUIRE(run("cluster --input " + tmp.str("s/dump.tsv") + " --out " + tmp.str("c")) == 0);
    {
        std::ofstream tags(tmp.str("tags.tsv"), std::ios::binary);
        tags << "address\tE0A0\tBigExchange\texchange\tmanual\n";
    }
    REQUIRE(run("spikes --input " + tmp.str("s/dump.tsv") + " --assignment " +
                tmp.str("c/assignment.tsv") + " --period 10 --lag 1 --top 0 --tags " +
                tmp.str("tags.tsv") + " --out " + tmp.str("sp")) == 0);
    const auto table = slurp(tmp.str("sp/contributions.tsv"));
    CHECK(first_line(tmp.str("sp/contributions.tsv")) == "rank\tentity_id\tabs_share_delta\ttags");
    CHECK(table.find("BigExchange(exchange)") != std::string::npos);
    CHECK(table.find("unknown") != std::string::npos);
}

TEST_CASE("exit codes distinguish input errors from invariant violations") {
    TempDir tmp("stakeshift_cli_exits");
    CHECK(run("cluster --input /nonexistent.tsv --out " + tmp.str("x")) == 2);
    CHECK(run("bogus-subcommand") == 2);
    CHECK(run("shift --out only") == 2);  // missing required options

    // malformed dump: negative amount
    {
        std::ofstream dump(tmp.str("bad.tsv"), std::ios::binary);
        dump << "t1\t0\t-\tA1:-5\tA2:5\n";
    }
    CHECK(run("cluster --input " + tmp.str("bad.tsv") + " --out " + tmp.str("b")) == 2);

    // overspend: syntactically fine, violates the balance invariant
    {
        std::ofstream dump(tmp.str("overspend.tsv"), std::ios::binary);
        dump << "c1\t0\t-\t\tA1:50\n";
        dump << "t1\t86400\t-\tA1:100\tA2:100\n";
    }
    REQUIRE(run("cluster --input " + tmp.str("overspend.tsv") + " --out " + tmp.str("oc")) == 0);
    CHECK(run("shift --input " + tmp.str("overspend.tsv") + " --assignment " +
              tmp.str("oc/assignment.tsv") + " --lags 1 --out " + tmp.str("os")) == 3);

    // unsupported fee policy is an input error
    REQUIRE(run("synth --seed 5 --days 10 --entities 5 --out " + tmp.str("s")) == 0);
    REQUIRE(run("cluster --input " + tmp.str("s/dump.tsv") + " --out " + tmp.str("c")) == 0);
    CHECK(run("shift --input " + tmp.str("s/dump.tsv") + " --assignment " +
              tmp.str("c/assignment.tsv") + " --fee-policy miner-unsupported-error --out " +
              tmp.str("m")) == 2);
    // lag longer than the history is an input error
    CHECK(run("shift --input " + tmp.str("s/dump.tsv") + " --assignment " +
              tmp.str("c/assignment.tsv") + " --lags 40 --out " + tmp.str("l")) == 2);
}

TEST_CASE("reruns are byte-identical") {
    TempDir tmp("stakeshift_cli_determinism");
    REQUIRE(run("synth --seed 77 --days 30 --entities 15 --intensity 5 --out " + tmp.str("s")) == 0);
    REQUIRE(run("cluster --input " + tmp.str("s/dump.tsv") + " --out " + tmp.str("c")) == 0);
    const std::string shift_cmd = "shift --input " + tmp.str("s/dump.tsv") + " --assignment " +
                                  tmp.str("c/assignment.tsv") + " --lags 1,5 --out " +
                                  tmp.str("sh");
    REQUIRE(run(shift_cmd) == 0);
    const auto before = tree_bytes(tmp.path / "sh");
    REQUIRE(run(shift_cmd) == 0);
    CHECK(tree_bytes(tmp.path / "sh") == before);
    REQUIRE(!before.empty());

    // threads must not change a single byte either
    REQUIRE(run(shift_cmd + "_t --threads 4") == 0);
    auto threaded = tree_bytes(tmp.path / "sh_t");
    auto expected = before;
    threaded.erase("manifest.json");  // records the thread count
    expected.erase("manifest.json");
    CHECK(threaded == expected);
}

TEST_CASE("version flag") {
    CHECK(run("--version") == 0);
}
