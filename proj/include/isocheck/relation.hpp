#pragma once

// Dense binary relation over transaction indices with eager transitive
// closure. Histories stay small (tens of transactions), so the O(n^3)
// closure is the simplest thing that keeps every membership query O(1).

#include <algorithm>
#include <optional>
#include <vector>

#include "isocheck/model.hpp"

namespace isocheck {

class CommitRelation {
 public:
  CommitRelation() = default;
  explicit CommitRelation(int n) : n_(n), m_(size_t(n) * n, 0) {}

  int size() const { return n_; }
  bool at(int a, int b) const { return m_[size_t(a) * n_ + b] != 0; }
  void add(int a, int b) { m_[size_t(a) * n_ + b] = 1; }

  // Reflexive-transitive membership.
  bool star(int a, int b) const { return a == b || at(a, b); }

  void close() {
    for (int k = 0; k < n_; ++k)
      for (int i = 0; i < n_; ++i) {
        if (!at(i, k)) continue;
        const char* row_k = &m_[size_t(k) * n_];
        char* row_i = &m_[size_t(i) * n_];
        for (int j = 0; j < n_; ++j) row_i[j] |= row_k[j];
      }
  }

  // Valid on transitively closed relations: a cycle shows up as a self pair.
  bool cyclic() const {
    for (int i = 0; i < n_; ++i)
      if (at(i, i)) return true;
    return false;
  }

  size_t edge_count() const {
    size_t c = 0;
    for (char b : m_) c += (b != 0);
    return c;
  }

  std::optional<std::vector<int>> find_cycle() const {
    return detail::find_cycle(m_, n_);
  }

  friend bool operator==(const CommitRelation& a, const CommitRelation& b) {
    return a.n_ == b.n_ && a.m_ == b.m_;
  }
  friend bool operator!=(const CommitRelation& a, const CommitRelation& b) { return !(a == b); }

  // Subset test, used by the monotonicity properties.
  bool subset_of(const CommitRelation& o) const {
    if (n_ != o.n_) return false;
    for (size_t i = 0; i < m_.size(); ++i)
      if (m_[i] && !o.m_[i]) return false;
    return true;
  }

 private:
  int n_ = 0;
  std::vector<char> m_;
};

// (so/wr)+ at the transaction level.
inline CommitRelation sowr_closure(const HistoryIndex& x) {
  CommitRelation r(x.n);
  for (int a = 0; a < x.n; ++a)
    for (int b = 0; b < x.n; ++b)
      if (x.sowr_adj[a * x.n + b]) r.add(a, b);
  r.close();
  return r;
}

// Total order given as a sequence of transaction indices.
inline CommitRelation order_relation(int n, const std::vector<int>& order) {
  CommitRelation r(n);
  for (size_t i = 0; i < order.size(); ++i)
    for (size_t j = i + 1; j < order.size(); ++j) r.add(order[i], order[j]);
  return r;
}

}  // namespace isocheck
