#pragma once

#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "chordrec/gru.hpp"

namespace chordrec::neural {

// Prefix tree of recurrent states for decoding. Each node is the state after
// consuming the symbols on its root path; identical prefixes share a node.
// New nodes are evaluated lazily and in batches on flush().
template <typename Scalar>
class RecurrentTrie {
 public:
  using Vector = typename GruNetwork<Scalar>::Vector;
  using Matrix = typename GruNetwork<Scalar>::Matrix;
  using NodeId = std::uint32_t;
  static constexpr NodeId kNone = std::numeric_limits<NodeId>::max();

  explicit RecurrentTrie(const GruNetwork<Scalar>& net) : net_(net) {}

  // Node for the single-symbol prefix (symbol) from the zero state.
  NodeId root(int symbol) { return child(kNone, symbol); }

  NodeId child(NodeId parent, int symbol) {
    const std::uint64_t key = (static_cast<std::uint64_t>(parent) << 16) ^ static_cast<std::uint64_t>(symbol);
    if (const auto it = children_.find(key); it != children_.end()) return it->second;
    const auto id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back({parent, symbol, false});
    hidden_.emplace_back();
    logits_.emplace_back();
    children_.emplace(key, id);
    pending_.push_back(id);
    return id;
  }

  void flush() {
    while (!pending_.empty()) {
      std::vector<NodeId> batch, later;
      for (NodeId id : pending_) {
        const NodeId p = nodes_[id].parent;
        (p == kNone || nodes_[p].ready ? batch : later).push_back(id);
      }
      evaluate(batch);
      pending_ = std::move(later);
    }
  }

  // Head logits after the node's prefix.
  const Vector& logits(NodeId id) {
    if (!nodes_[id].ready) flush();
    return logits_[id];
  }
  const Vector& hidden(NodeId id) {
    if (!nodes_[id].ready) flush();
    return hidden_[id];
  }

  int symbol(NodeId id) const { return nodes_[id].symbol; }
  NodeId parent(NodeId id) const { return nodes_[id].parent; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    NodeId parent;
    int symbol;
    bool ready;
  };

  void evaluate(const std::vector<NodeId>& batch) {
    if (batch.empty()) return;
    const int H = net_.hidden_size();
    const auto m = static_cast<Eigen::Index>(batch.size());
    Matrix prev(H, m);
    std::vector<int> symbols(batch.size());
    for (Eigen::Index j = 0; j < m; ++j) {
      const Node& node = nodes_[batch[static_cast<std::size_t>(j)]];
      if (node.parent == kNone) {
        prev.col(j).setZero();
      } else {
        prev.col(j) = hidden_[node.parent];
      }
      symbols[static_cast<std::size_t>(j)] = node.symbol;
    }
    Matrix next;
    net_.step_batch(prev, symbols, next);
    const Matrix head = net_.logits(next);
    for (Eigen::Index j = 0; j < m; ++j) {
      const NodeId id = batch[static_cast<std::size_t>(j)];
      hidden_[id] = next.col(j);
      logits_[id] = head.col(j);
      nodes_[id].ready = true;
    }
  }

  const GruNetwork<Scalar>& net_;
  std::vector<Node> nodes_;
  std::vector<Vector> hidden_;
  std::vector<Vector> logits_;
  std::unordered_map<std::uint64_t, NodeId> children_;
  std::vector<NodeId> pending_;
};

}  // namespace chordrec::neural
