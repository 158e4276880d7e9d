#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "stakeshift/types.hpp"

namespace stakeshift {

// Single-pass reader for the normalized transaction dump format:
//
//   tx_id<TAB>timestamp<TAB>coinjoin_hint(0|1|-)<TAB>inputs<TAB>outputs
//
// where inputs/outputs are comma-joined `addr:value` pairs, an empty inputs
// field marks a coinbase, and `__UNSPENDABLE__` is the burn sentinel.
// Files ending in `.gz` are read through zlib. Malformed lines raise
// SyntaxError / ValueOverflow with the 1-based line number.
class TransactionReader {
public:
    // Reads from a caller-owned stream (kept alive by the caller).
    explicit TransactionReader(std::istream& in);
    ~TransactionReader();

    TransactionReader(TransactionReader&&) noexcept;
    TransactionReader& operator=(TransactionReader&&) noexcept;
    TransactionReader(const TransactionReader&) = delete;
    TransactionReader& operator=(const TransactionReader&) = delete;

    // Opens a file path; `.gz` suffix selects gzip decompression.
    static TransactionReader open(const std::string& path);

    // Next transaction in file order, or nullopt at end of input.
    std::optional<Transaction> next();

    std::uint64_t line_no() const noexcept { return line_no_; }

private:
    struct Source;
    struct StreamSource;
    struct GzSource;
    explicit TransactionReader(std::unique_ptr<Source> src);

    std::unique_ptr<Source> source_;
    std::string line_;
    std::uint64_t line_no_ = 0;
};

// Parses one record; line_no is used for error positions only.
Transaction parse_transaction_line(const std::string& line, std::uint64_t line_no);

// Inverse of parse_transaction_line (no trailing newline).
std::string serialize_transaction(const Transaction& tx);

// Convenience: materializes a whole dump. Test-scale only; the pipeline
// itself streams through TransactionReader.
std::vector<Transaction> parse_transactions(std::istream& in);
std::vector<Transaction> parse_transactions_file(const std::string& path);

// Streaming tally for tx/address counts and the timestamp range.
class ScanStatsAccumulator {
public:
    void add(const Transaction& tx);
    LedgerStats finish() const;

private:
    std::unordered_set<std::string> addresses_;
    LedgerStats stats_;
    bool any_ = false;
};

LedgerStats scan_stats(const std::vector<Transaction>& txs);
LedgerStats scan_stats(TransactionReader& reader);

}  // namespace stakeshift
