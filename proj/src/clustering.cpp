#include "stakeshift/clustering.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "stakeshift/errors.hpp"

namespace stakeshift {

bool detect_coinjoin(const Transaction& tx) {
    if (tx.coinjoin_hint) return *tx.coinjoin_hint;
    if (tx.inputs.size() < 3 || tx.outputs.size() < 3) return false;
    std::unordered_map<std::int64_t, int> value_counts;
    for (const auto& out : tx.outputs)
        if (++value_counts[out.value] >= 3) return true;
    return false;
}

std::uint32_t ClusterBuilder::intern(const Address& address) {
    auto it = index_.find(std::string_view(address));
    if (it != index_.end()) return it->second;
    auto idx = (std::uint32_t)addresses_.size();
    addresses_.push_back(address);
    parent_.push_back(idx);
    size_.push_back(1);
    index_.emplace(address, idx);
    return idx;
}

std::uint32_t ClusterBuilder::find(std::uint32_t x) {
    std::uint32_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
        std::uint32_t up = parent_[x];
        parent_[x] = root;
        x = up;
    }
    return root;
}

void ClusterBuilder::unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
}

void ClusterBuilder::add(const Transaction& tx) {
    // Output-only addresses still get (singleton) entities: they hold balance.
    for (const auto& out : tx.outputs)
        if (out.address != kUnspendableAddress) intern(out.address);
    if (tx.inputs.empty()) return;

    std::uint32_t first = intern(tx.inputs.front().address);
    if (detect_coinjoin(tx)) {
        for (std::size_t i = 1; i < tx.inputs.size(); ++i) intern(tx.inputs[i].address);
        return;  // co-input evidence is void for CoinJoins
    }
    for (std::size_t i = 1; i < tx.inputs.size(); ++i)
        unite(first, intern(tx.inputs[i].address));
}

EntityAssignment ClusterBuilder::finish() {
    const std::uint32_t n = (std::uint32_t)addresses_.size();

    // Lexicographic address order makes canonical ids independent of the
    // order transactions were seen in.
    std::vector<std::uint32_t> by_lex(n);
    std::iota(by_lex.begin(), by_lex.end(), 0);
    std::sort(by_lex.begin(), by_lex.end(),
              [&](std::uint32_t a, std::uint32_t b) { return addresses_[a] < addresses_[b]; });

    std::vector<std::uint32_t> lex_rank(n);
    for (std::uint32_t r = 0; r < n; ++r) lex_rank[by_lex[r]] = r;

    // Canonical id per union-find root: minimum lex rank in the cluster.
    constexpr std::uint32_t kUnset = 0xFFFFFFFFu;
    std::vector<std::uint32_t> min_lex_of_root(n, kUnset);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::uint32_t r = find(i);
        min_lex_of_root[r] = std::min(min_lex_of_root[r], lex_rank[i]);
    }

    EntityAssignment out;
    out.addresses_.resize(n);
    for (std::uint32_t r = 0; r < n; ++r) out.addresses_[r] = std::move(addresses_[by_lex[r]]);

    // Dense entity indices follow ascending canonical id; a canonical id is
    // its own cluster's minimum lex rank, so roots sorted by min-lex give
    // the dense order directly.
    std::vector<EntityId> canon_of_lex(n);
    std::size_t clusters = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::uint32_t root = find(i);
        canon_of_lex[lex_rank[i]] = (EntityId)min_lex_of_root[root];
        if (root == i && size_[i] >= 2) ++clusters;
    }

    std::vector<EntityId> distinct;
    distinct.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
        if (canon_of_lex[i] == (EntityId)i) distinct.push_back((EntityId)i);

    out.entity_ids_ = std::move(distinct);
    out.entity_of_address_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        auto it = std::lower_bound(out.entity_ids_.begin(), out.entity_ids_.end(), canon_of_lex[i]);
        out.entity_of_address_[i] = (std::uint32_t)(it - out.entity_ids_.begin());
    }
    out.cluster_count_ = clusters;
    out.rebuild_lookup();

    index_.clear();
    addresses_.clear();
    parent_.clear();
    size_.clear();
    return out;
}

void EntityAssignment::rebuild_lookup() {
    lex_index_.clear();
    lex_index_.reserve(addresses_.size());
    for (std::uint32_t i = 0; i < addresses_.size(); ++i) lex_index_.emplace(addresses_[i], i);
}

std::optional<std::uint32_t> EntityAssignment::try_entity_index(std::string_view address) const {
    auto it = lex_index_.find(address);
    if (it == lex_index_.end()) return std::nullopt;
    return entity_of_address_[it->second];
}

std::uint32_t EntityAssignment::entity_index_of(std::string_view address) const {
    auto idx = try_entity_index(address);
    if (!idx) throw UnknownAddress(std::string(address));
    return *idx;
}

EntityId EntityAssignment::entity_id_of(std::string_view address) const {
    return entity_ids_[entity_index_of(address)];
}

std::optional<std::uint32_t> EntityAssignment::try_index_of_entity(EntityId id) const {
    auto it = std::lower_bound(entity_ids_.begin(), entity_ids_.end(), id);
    if (it == entity_ids_.end() || *it != id) return std::nullopt;
    return (std::uint32_t)(it - entity_ids_.begin());
}

void EntityAssignment::write_tsv(std::ostream& out) const {
    for (std::uint32_t i = 0; i < addresses_.size(); ++i)
        out << addresses_[i] << '\t' << entity_ids_[entity_of_address_[i]] << '\n';
}

EntityAssignment EntityAssignment::read_tsv(std::istream& in) {
    std::vector<std::pair<Address, EntityId>> rows;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw SyntaxError(line_no, "expected address<TAB>entity_id");
        EntityId id = 0;
        try {
            std::size_t used = 0;
            id = std::stoll(line.substr(tab + 1), &used);
            if (used != line.size() - tab - 1) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw SyntaxError(line_no, "bad entity id '" + line.substr(tab + 1) + "'");
        }
        rows.emplace_back(line.substr(0, tab), id);
    }

    std::sort(rows.begin(), rows.end());
    EntityAssignment out;
    out.addresses_.reserve(rows.size());
    out.entity_of_address_.reserve(rows.size());

    std::vector<EntityId> ids;
    ids.reserve(rows.size());
    for (const auto& [addr, id] : rows) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    std::vector<std::size_t> sizes(ids.size(), 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].first == rows[i - 1].first)
            throw Error(ErrorKind::input, "duplicate address in assignment: " + rows[i].first);
        auto it = std::lower_bound(ids.begin(), ids.end(), rows[i].second);
        const auto dense = (std::uint32_t)(it - ids.begin());
        out.addresses_.push_back(std::move(rows[i].first));
        out.entity_of_address_.push_back(dense);
        ++sizes[dense];
    }
    out.entity_ids_ = std::move(ids);
    out.cluster_count_ = (std::size_t)std::count_if(sizes.begin(), sizes.end(),
                                                    [](std::size_t s) { return s >= 2; });
    out.rebuild_lookup();
    return out;
}

EntityAssignment EntityAssignment::read_tsv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::input, "cannot open " + path);
    return read_tsv(in);
}

namespace {
constexpr char kCacheMagic[8] = {'S', 'S', 'A', 'S', 'G', 'N', '0', '1'};

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw Error(ErrorKind::input, "truncated assignment cache");
    return v;
}
}  // namespace

void EntityAssignment::write_cache(std::ostream& out) const {
    out.write(kCacheMagic, sizeof kCacheMagic);
    put<std::uint64_t>(out, addresses_.size());
    put<std::uint64_t>(out, cluster_count_);
    for (std::uint32_t i = 0; i < addresses_.size(); ++i) {
        put<std::uint32_t>(out, (std::uint32_t)addresses_[i].size());
        out.write(addresses_[i].data(), (std::streamsize)addresses_[i].size());
        put<std::uint32_t>(out, entity_of_address_[i]);
    }
    put<std::uint64_t>(out, entity_ids_.size());
    for (EntityId id : entity_ids_) put<std::int64_t>(out, id);
}

EntityAssignment EntityAssignment::read_cache(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || !std::equal(magic, magic + 8, kCacheMagic))
        throw Error(ErrorKind::input, "not an assignment cache file");
    EntityAssignment out;
    auto n = get<std::uint64_t>(in);
    out.cluster_count_ = get<std::uint64_t>(in);
    out.addresses_.resize(n);
    out.entity_of_address_.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        auto len = get<std::uint32_t>(in);
        out.addresses_[i].resize(len);
        in.read(out.addresses_[i].data(), len);
        if (!in) throw Error(ErrorKind::input, "truncated assignment cache");
        out.entity_of_address_[i] = get<std::uint32_t>(in);
    }
    auto e = get<std::uint64_t>(in);
    out.entity_ids_.resize(e);
    for (std::uint64_t i = 0; i < e; ++i) out.entity_ids_[i] = get<std::int64_t>(in);
    out.rebuild_lookup();
    return out;
}

EntityAssignment cluster_addresses(const std::vector<Transaction>& txs) {
    ClusterBuilder builder;
    for (const auto& tx : txs) builder.add(tx);
    return builder.finish();
}

}  // namespace stakeshift
