#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stakeshift/types.hpp"

namespace stakeshift {

// CoinJoin decision for one transaction: the dump's hint wins when present,
// otherwise a replaceable built-in heuristic applies (>= 3 inputs, >= 3
// outputs, and some output value repeated >= 3 times).
bool detect_coinjoin(const Transaction& tx);

// Partition of all observed addresses into entities. Addresses are stored in
// lexicographic order; an entity's canonical id is the smallest lexicographic
// index among its member addresses, so ids do not depend on stream order.
class EntityAssignment {
public:
    EntityAssignment() = default;

    std::size_t address_count() const noexcept { return addresses_.size(); }
    std::size_t entity_count() const noexcept { return entity_ids_.size(); }
    std::size_t cluster_count() const noexcept { return cluster_count_; }
    std::size_t singleton_count() const noexcept { return entity_count() - cluster_count_; }

    // Dense entity index in [0, entity_count), ordered by canonical id.
    std::uint32_t entity_index_of(std::string_view address) const;
    std::optional<std::uint32_t> try_entity_index(std::string_view address) const;

    EntityId entity_id_of(std::string_view address) const;
    EntityId entity_id(std::uint32_t entity_index) const { return entity_ids_[entity_index]; }
    std::optional<std::uint32_t> try_index_of_entity(EntityId id) const;

    // Lexicographically sorted; position = internal address index.
    const std::vector<Address>& addresses() const noexcept { return addresses_; }
    std::uint32_t entity_index_of_address_index(std::uint32_t lex_index) const {
        return entity_of_address_[lex_index];
    }

    // `address<TAB>entity_id`, sorted by address.
    void write_tsv(std::ostream& out) const;
    static EntityAssignment read_tsv(std::istream& in);
    static EntityAssignment read_tsv_file(const std::string& path);

    // Binary cache; round-trips exactly.
    void write_cache(std::ostream& out) const;
    static EntityAssignment read_cache(std::istream& in);

private:
    friend class ClusterBuilder;

    std::vector<Address> addresses_;               // lex-sorted
    std::vector<std::uint32_t> entity_of_address_; // lex index -> dense entity index
    std::vector<EntityId> entity_ids_;             // dense entity index -> canonical id
    std::size_t cluster_count_ = 0;                // entities with >= 2 addresses

    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };
    std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> lex_index_;

    void rebuild_lookup();
};

// Multiple-input heuristic with CoinJoin filtering: all input addresses of a
// non-coinbase, non-CoinJoin transaction are merged; the partition is the
// transitive closure of that relation and is independent of stream order.
class ClusterBuilder {
public:
    void add(const Transaction& tx);
    EntityAssignment finish();

    std::size_t seen_addresses() const noexcept { return addresses_.size(); }

private:
    std::uint32_t intern(const Address& address);
    std::uint32_t find(std::uint32_t x);
    void unite(std::uint32_t a, std::uint32_t b);

    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };
    std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> index_;
    std::vector<Address> addresses_;      // by first appearance
    std::vector<std::uint32_t> parent_;   // union-find, path compression
    std::vector<std::uint32_t> size_;     // union by size
};

// One-shot convenience over a materialized stream.
EntityAssignment cluster_addresses(const std::vector<Transaction>& txs);

}  // namespace stakeshift
