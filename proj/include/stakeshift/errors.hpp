#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stakeshift {

// Coarse classification consumed by the CLI: bad input data (exit 2)
// versus a violated engine invariant (exit 3).
enum class ErrorKind { input, invariant };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// A malformed line in a transaction dump or tag file.
class SyntaxError : public Error {
public:
    SyntaxError(std::uint64_t line_no, const std::string& reason)
        : Error(ErrorKind::input,
                "syntax error on line " + std::to_string(line_no) + ": " + reason),
          line_no_(line_no) {}
    std::uint64_t line_no() const noexcept { return line_no_; }

private:
    std::uint64_t line_no_;
};

// An amount or running total exceeds the signed 64-bit range.
class ValueOverflow : public Error {
public:
    explicit ValueOverflow(const std::string& what)
        : Error(ErrorKind::input, "value overflow: " + what) {}
};

class UnknownAddress : public Error {
public:
    explicit UnknownAddress(const std::string& address)
        : Error(ErrorKind::input, "address not covered by entity assignment: " + address) {}
};

// End-of-period cumulative balance went negative: the dump spends funds
// the entity never held.
class NegativeBalance : public Error {
public:
    NegativeBalance(std::int64_t entity, std::int64_t period)
        : Error(ErrorKind::invariant,
                "negative cumulative balance for entity " + std::to_string(entity) +
                    " at period " + std::to_string(period)),
          entity_(entity), period_(period) {}
    std::int64_t entity() const noexcept { return entity_; }
    std::int64_t period() const noexcept { return period_; }

private:
    std::int64_t entity_;
    std::int64_t period_;
};

class InsufficientHistory : public Error {
public:
    InsufficientHistory(std::int64_t lag, std::int64_t periods)
        : Error(ErrorKind::input,
                "ledger spans " + std::to_string(periods) +
                    " period(s), need at least lag+1 = " + std::to_string(lag + 1)) {}
};

class EmptyAfterBurnIn : public Error {
public:
    EmptyAfterBurnIn() : Error(ErrorKind::input, "no series values remain after burn-in") {}
};

class DegenerateDesign : public Error {
public:
    explicit DegenerateDesign(std::size_t distinct)
        : Error(ErrorKind::input,
                "quadratic fit needs >= 3 distinct lags, got " + std::to_string(distinct)) {}
};

class TagFileSyntax : public Error {
public:
    TagFileSyntax(std::uint64_t line_no, const std::string& reason)
        : Error(ErrorKind::input,
                "tag file line " + std::to_string(line_no) + ": " + reason) {}
};

}  // namespace stakeshift
