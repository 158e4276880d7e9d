#pragma once

// Shared helpers for building transactions and small reference oracles in
// tests. Everything here is deliberately simple and independent of the
// engine code paths it is used to check.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stakeshift/synth.hpp"
#include "stakeshift/types.hpp"

namespace testutil {

using stakeshift::Address;
using stakeshift::Transaction;
using stakeshift::TxIn;
using stakeshift::TxOut;

inline Transaction make_tx(std::string id, std::int64_t ts, std::vector<TxIn> ins,
                           std::vector<TxOut> outs,
                           std::optional<bool> hint = std::nullopt) {
    Transaction tx;
    tx.tx_id = std::move(id);
    tx.timestamp = ts;
    tx.inputs = std::move(ins);
    tx.outputs = std::move(outs);
    tx.coinjoin_hint = hint;
    return tx;
}

inline Transaction coinbase(std::string id, std::int64_t ts, Address to, std::int64_t value) {
    return make_tx(std::move(id), ts, {}, {{std::move(to), value}});
}

inline Transaction transfer(std::string id, std::int64_t ts, Address from, Address to,
                            std::int64_t value) {
    return make_tx(std::move(id), ts, {{std::move(from), value}}, {{std::move(to), value}});
}

// Brute-force reference partition: connected components of the co-input
// graph (CoinJoins filtered), via plain breadth-first search.
inline std::map<Address, std::set<Address>> brute_force_components(
    const std::vector<Transaction>& txs) {
    std::map<Address, std::set<Address>> adjacency;
    const auto note = [&](const Address& a) { adjacency.emplace(a, std::set<Address>{}); };
    for (const auto& tx : txs) {
        for (const auto& in : tx.inputs) note(in.address);
        for (const auto& out : tx.outputs)
            if (out.address != stakeshift::kUnspendableAddress) note(out.address);
        if (tx.inputs.empty() || stakeshift::detect_coinjoin(tx)) continue;
        for (std::size_t i = 1; i < tx.inputs.size(); ++i) {
            adjacency[tx.inputs[0].address].insert(tx.inputs[i].address);
            adjacency[tx.inputs[i].address].insert(tx.inputs[0].address);
        }
    }

    std::map<Address, std::set<Address>> component_of;
    std::set<Address> visited;
    for (const auto& [start, ignored] : adjacency) {
        if (visited.count(start)) continue;
        std::set<Address> component;
        std::vector<Address> queue{start};
        visited.insert(start);
        while (!queue.empty()) {
            Address a = queue.back();
            queue.pop_back();
            component.insert(a);
            for (const auto& next : adjacency[a])
                if (visited.insert(next).second) queue.push_back(next);
        }
        for (const auto& member : component) component_of[member] = component;
    }
    return component_of;
}

// Random clustering instance over `addresses` addresses; some transactions
// carry CoinJoin hints, some have shapes the built-in heuristic flags.
inline std::vector<Transaction> random_cluster_instance(std::uint64_t seed, int addresses,
                                                        int tx_count) {
    stakeshift::SplitMix64 rng(seed);
    const auto addr = [&](std::uint64_t i) { return "A" + std::to_string(i); };
    std::vector<Transaction> txs;
    txs.reserve((std::size_t)tx_count);
    for (int t = 0; t < tx_count; ++t) {
        Transaction tx;
        tx.tx_id = "r" + std::to_string(t);
        tx.timestamp = (std::int64_t)t;
        const auto n_in = 1 + rng.next_below(4);
        for (std::uint64_t i = 0; i < n_in; ++i)
            tx.inputs.push_back({addr(rng.next_below((std::uint64_t)addresses)), 1000});
        const auto n_out = 1 + rng.next_below(4);
        const bool repeat_values = rng.next_below(5) == 0;
        for (std::uint64_t i = 0; i < n_out; ++i)
            tx.outputs.push_back({addr(rng.next_below((std::uint64_t)addresses)),
                                  repeat_values ? 7 : (std::int64_t)(i + 1)});
        const auto hint = rng.next_below(6);
        if (hint == 0)
            tx.coinjoin_hint = true;
        else if (hint == 1)
            tx.coinjoin_hint = false;
        txs.push_back(std::move(tx));
    }
    return txs;
}

}  // namespace testutil
