#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stakeshift {

// Addresses are opaque tokens (base58 / bech32 / hex accepted verbatim);
// equality is exact byte equality, no checksum validation.
using Address = std::string;

// Day number since the Unix epoch: floor(timestamp / 86400).
using Period = std::int64_t;

// Canonical entity id: the smallest internal address index of the cluster,
// where addresses are indexed in lexicographic order. Negative values are
// reserved for pseudo-entities that own no address.
using EntityId = std::int64_t;

inline constexpr EntityId kFeePoolEntity = -1;
inline constexpr EntityId kBurnedEntity = -2;

// Burn sentinel: outputs paying this address are provably unspendable.
inline constexpr const char* kUnspendableAddress = "__UNSPENDABLE__";

inline constexpr std::int64_t kSecondsPerDay = 86400;

struct TxIn {
    Address address;
    std::int64_t value = 0;  // base units, >= 0
};

struct TxOut {
    Address address;  // may be the unspendable sentinel
    std::int64_t value = 0;
};

struct Transaction {
    std::string tx_id;
    std::int64_t timestamp = 0;  // seconds since epoch, UTC
    std::vector<TxIn> inputs;    // empty iff coinbase
    std::vector<TxOut> outputs;  // never empty
    std::optional<bool> coinjoin_hint;

    bool is_coinbase() const noexcept { return inputs.empty(); }
};

// floor(timestamp / 86400); consecutive indices are consecutive UTC days.
constexpr Period period_of(std::int64_t timestamp) noexcept {
    Period p = timestamp / kSecondsPerDay;
    if (timestamp < 0 && timestamp % kSecondsPerDay != 0) --p;
    return p;
}

// "YYYY-MM-DD" for a day number (proleptic Gregorian, UTC).
std::string iso_date(Period period);

struct LedgerStats {
    std::uint64_t tx_count = 0;
    std::uint64_t address_count = 0;  // distinct, burn sentinel excluded
    std::int64_t first_timestamp = 0;
    std::int64_t last_timestamp = 0;
};

}  // namespace stakeshift
