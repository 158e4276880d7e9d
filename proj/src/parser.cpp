#include "stakeshift/parser.hpp"

#include <zlib.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>

#include "stakeshift/errors.hpp"

namespace stakeshift {

std::string iso_date(Period period) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{period}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", (int)ymd.year(), (unsigned)ymd.month(),
                  (unsigned)ymd.day());
    return buf;
}

namespace {

using u128 = unsigned __int128;

std::int64_t parse_amount(std::string_view token, std::uint64_t line_no) {
    if (token.empty()) throw SyntaxError(line_no, "empty amount");
    if (token.front() == '-') throw ValueOverflow("negative amount on line " + std::to_string(line_no));
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec == std::errc::result_out_of_range ||
        v > (std::uint64_t)std::numeric_limits<std::int64_t>::max())
        throw ValueOverflow("amount exceeds 2^63-1 on line " + std::to_string(line_no));
    if (ec != std::errc{} || ptr != token.data() + token.size())
        throw SyntaxError(line_no, "bad amount '" + std::string(token) + "'");
    return (std::int64_t)v;
}

std::int64_t parse_timestamp(std::string_view token, std::uint64_t line_no) {
    if (token.empty() || token.front() == '-')
        throw SyntaxError(line_no, "bad timestamp '" + std::string(token) + "'");
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size() ||
        v > (std::uint64_t)std::numeric_limits<std::int64_t>::max())
        throw SyntaxError(line_no, "bad timestamp '" + std::string(token) + "'");
    return (std::int64_t)v;
}

// Splits `addr:value[,addr:value...]`; the value starts after the last ':'
// so addresses are free to contain any other byte.
template <typename Slot>
void parse_pairs(std::string_view field, std::uint64_t line_no, std::vector<Slot>& out) {
    std::size_t pos = 0;
    while (pos <= field.size()) {
        std::size_t comma = field.find(',', pos);
        std::string_view item =
            field.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        std::size_t colon = item.rfind(':');
        if (colon == std::string_view::npos || colon == 0)
            throw SyntaxError(line_no, "expected addr:value, got '" + std::string(item) + "'");
        Slot slot;
        slot.address = std::string(item.substr(0, colon));
        slot.value = parse_amount(item.substr(colon + 1), line_no);
        out.push_back(std::move(slot));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
}

}  // namespace

Transaction parse_transaction_line(const std::string& line, std::uint64_t line_no) {
    std::array<std::string_view, 5> fields;
    std::string_view rest = line;
    for (int i = 0; i < 4; ++i) {
        std::size_t tab = rest.find('\t');
        if (tab == std::string_view::npos)
            throw SyntaxError(line_no, "expected 5 tab-separated fields");
        fields[i] = rest.substr(0, tab);
        rest.remove_prefix(tab + 1);
    }
    if (rest.find('\t') != std::string_view::npos)
        throw SyntaxError(line_no, "expected 5 tab-separated fields");
    fields[4] = rest;

    Transaction tx;
    if (fields[0].empty()) throw SyntaxError(line_no, "empty tx_id");
    tx.tx_id = std::string(fields[0]);
    tx.timestamp = parse_timestamp(fields[1], line_no);

    if (fields[2] == "0")
        tx.coinjoin_hint = false;
    else if (fields[2] == "1")
        tx.coinjoin_hint = true;
    else if (fields[2] == "-")
        tx.coinjoin_hint = std::nullopt;
    else
        throw SyntaxError(line_no, "coinjoin hint must be 0, 1 or -");

    if (!fields[3].empty()) parse_pairs(fields[3], line_no, tx.inputs);
    if (fields[4].empty()) throw SyntaxError(line_no, "transaction has no outputs");
    parse_pairs(fields[4], line_no, tx.outputs);

    for (const auto& in : tx.inputs)
        if (in.address == kUnspendableAddress)
            throw SyntaxError(line_no, "burn sentinel cannot be spent as an input");

    if (!tx.inputs.empty()) {
        u128 in_sum = 0, out_sum = 0;
        for (const auto& in : tx.inputs) in_sum += (u128)in.value;
        for (const auto& out : tx.outputs) out_sum += (u128)out.value;
        if (in_sum > (u128)std::numeric_limits<std::int64_t>::max())
            throw ValueOverflow("input sum exceeds 2^63-1 on line " + std::to_string(line_no));
        if (out_sum > in_sum)
            throw SyntaxError(line_no, "outputs exceed inputs (negative fee)");
    }
    return tx;
}

std::string serialize_transaction(const Transaction& tx) {
    std::string out = tx.tx_id;
    out += '\t';
    out += std::to_string(tx.timestamp);
    out += '\t';
    out += tx.coinjoin_hint ? (*tx.coinjoin_hint ? "1" : "0") : "-";
    out += '\t';
    bool first = true;
    for (const auto& in : tx.inputs) {
        if (!first) out += ',';
        first = false;
        out += in.address;
        out += ':';
        out += std::to_string(in.value);
    }
    out += '\t';
    first = true;
    for (const auto& o : tx.outputs) {
        if (!first) out += ',';
        first = false;
        out += o.address;
        out += ':';
        out += std::to_string(o.value);
    }
    return out;
}

struct TransactionReader::Source {
    virtual ~Source() = default;
    virtual bool getline(std::string& line) = 0;
};

struct TransactionReader::StreamSource : TransactionReader::Source {
    std::istream* in;
    std::ifstream owned;

    explicit StreamSource(std::istream& s) : in(&s) {}
    explicit StreamSource(const std::string& path) : owned(path, std::ios::binary) {
        if (!owned) throw Error(ErrorKind::input, "cannot open " + path);
        in = &owned;
    }
    bool getline(std::string& line) override {
        return static_cast<bool>(std::getline(*in, line));
    }
};

struct TransactionReader::GzSource : TransactionReader::Source {
    gzFile file = nullptr;
    std::string path;
    bool eof = false;

    explicit GzSource(const std::string& p) : path(p) {
        file = gzopen(p.c_str(), "rb");
        if (!file) throw Error(ErrorKind::input, "cannot open " + p);
        gzbuffer(file, 1 << 16);
    }
    ~GzSource() override {
        if (file) gzclose(file);
    }
    bool getline(std::string& line) override {
        if (eof) return false;
        line.clear();
        char buf[1 << 14];
        while (true) {
            if (gzgets(file, buf, sizeof buf) == nullptr) {
                int err = 0;
                const char* msg = gzerror(file, &err);
                if (err != Z_OK && err != Z_STREAM_END)
                    throw Error(ErrorKind::input, "gzip read error in " + path + ": " + msg);
                eof = true;
                return !line.empty();
            }
            line += buf;
            if (!line.empty() && line.back() == '\n') {
                line.pop_back();
                return true;
            }
            // line longer than the buffer, keep reading
        }
    }
};

TransactionReader::TransactionReader(std::istream& in)
    : source_(std::make_unique<StreamSource>(in)) {}

TransactionReader::TransactionReader(std::unique_ptr<Source> src) : source_(std::move(src)) {}

TransactionReader::~TransactionReader() = default;
TransactionReader::TransactionReader(TransactionReader&&) noexcept = default;
TransactionReader& TransactionReader::operator=(TransactionReader&&) noexcept = default;

TransactionReader TransactionReader::open(const std::string& path) {
    if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0)
        return TransactionReader(std::make_unique<GzSource>(path));
    return TransactionReader(std::make_unique<StreamSource>(path));
}

std::optional<Transaction> TransactionReader::next() {
    while (source_->getline(line_)) {
        ++line_no_;
        if (!line_.empty() && line_.back() == '\r') line_.pop_back();
        if (line_.empty()) continue;  // tolerate blank lines / trailing newline
        return parse_transaction_line(line_, line_no_);
    }
    return std::nullopt;
}

std::vector<Transaction> parse_transactions(std::istream& in) {
    TransactionReader reader(in);
    std::vector<Transaction> txs;
    while (auto tx = reader.next()) txs.push_back(std::move(*tx));
    return txs;
}

std::vector<Transaction> parse_transactions_file(const std::string& path) {
    auto reader = TransactionReader::open(path);
    std::vector<Transaction> txs;
    while (auto tx = reader.next()) txs.push_back(std::move(*tx));
    return txs;
}

void ScanStatsAccumulator::add(const Transaction& tx) {
    ++stats_.tx_count;
    if (!any_ || tx.timestamp < stats_.first_timestamp) stats_.first_timestamp = tx.timestamp;
    if (!any_ || tx.timestamp > stats_.last_timestamp) stats_.last_timestamp = tx.timestamp;
    any_ = true;
    for (const auto& in : tx.inputs) addresses_.insert(in.address);
    for (const auto& out : tx.outputs)
        if (out.address != kUnspendableAddress) addresses_.insert(out.address);
}

LedgerStats ScanStatsAccumulator::finish() const {
    LedgerStats stats = stats_;
    stats.address_count = addresses_.size();
    return stats;
}

LedgerStats scan_stats(const std::vector<Transaction>& txs) {
    ScanStatsAccumulator acc;
    for (const auto& tx : txs) acc.add(tx);
    return acc.finish();
}

LedgerStats scan_stats(TransactionReader& reader) {
    ScanStatsAccumulator acc;
    while (auto tx = reader.next()) acc.add(*tx);
    return acc.finish();
}

}  // namespace stakeshift
