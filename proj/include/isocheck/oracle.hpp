#pragma once

// Ground-truth checker: enumerate every full witness extension and every
// total commit order over it, accepting as soon as one pair satisfies the
// acyclic-saturation test. Exponential on purpose; its only job is to be
// obviously correct at desk scale.

#include <functional>

#include "isocheck/checker.hpp"

namespace isocheck {

struct OracleBudget {
  int max_transactions = 9;       // including init
  int max_missing_pairs = 10;
  long max_witnesses = 250000;
  long max_steps = 4000000;       // (witness, order) pairs examined
};

struct OracleResult {
  Status status = Status::unknown;
  bool too_large = false;
  std::optional<History> witness;
  std::vector<std::string> commit_order;
};

namespace detail {

// Lexicographic enumeration of total orders extending the adjacency
// relation; `fn` returns true to stop early.
inline bool for_each_topological_order(const std::vector<char>& adj, int n,
                                       const std::function<bool(const std::vector<int>&)>& fn,
                                       long& steps, long max_steps, bool& over) {
  std::vector<int> indeg(n, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (adj[a * n + b]) ++indeg[b];
  std::vector<int> order;
  std::vector<char> used(n, 0);
  std::function<bool(int)> rec = [&](int depth) -> bool {
    if (over) return false;
    if (depth == n) {
      if (++steps > max_steps) {
        over = true;
        return false;
      }
      return fn(order);
    }
    for (int t = 0; t < n; ++t) {
      if (used[t] || indeg[t] != 0) continue;
      used[t] = 1;
      order.push_back(t);
      for (int b = 0; b < n; ++b)
        if (adj[t * n + b]) --indeg[b];
      if (rec(depth + 1)) return true;
      for (int b = 0; b < n; ++b)
        if (adj[t * n + b]) ++indeg[b];
      order.pop_back();
      used[t] = 0;
    }
    return false;
  };
  return rec(0);
}

// A total order satisfies the axioms iff one saturation pass over it adds
// nothing, i.e. stays acyclic.
inline bool order_consistent(const HistoryIndex& x, const std::vector<int>& order) {
  return !saturate(x, order_relation(x.n, order)).cyclic();
}

}  // namespace detail

// All total orders extending so/wr under which every axiom holds. Requires
// a full history within budget.
inline std::vector<std::vector<int>> enumerate_consistent_orders(const History& h,
                                                                 const OracleBudget& budget = {},
                                                                 bool* too_large = nullptr) {
  HistoryIndex x = analyze(h);
  std::vector<std::vector<int>> out;
  if (too_large) *too_large = false;
  if (x.n > budget.max_transactions) {
    if (too_large) *too_large = true;
    return out;
  }
  long steps = 0;
  bool over = false;
  detail::for_each_topological_order(
      x.sowr_adj, x.n,
      [&](const std::vector<int>& order) {
        if (detail::order_consistent(x, order)) out.push_back(order);
        return false;
      },
      steps, budget.max_steps, over);
  if (over) {
    if (too_large) *too_large = true;
    out.clear();
  }
  return out;
}

// Full witness-and-order enumeration per the definitions: every unread
// non-local (read, key) pair must be assigned some writer whose value
// falsifies the read's WHERE clause; a candidate-free pair means no witness
// exists at all.
inline OracleResult brute_force_check(const History& h, const OracleBudget& budget = {}) {
  OracleResult res;
  {
    auto errs = validate(h);
    if (!errs.empty())
      throw std::invalid_argument("brute_force_check: invalid history: " + errs.front().message);
  }
  HistoryIndex x = analyze(h);
  if (x.n > budget.max_transactions) {
    res.too_large = true;
    return res;
  }

  struct Pair {
    int read, key;
    std::vector<int> candidates;  // writer transactions
  };
  std::vector<Pair> pairs;
  long witness_count = 1;
  for (int r : x.reads) {
    const int tr = x.trans_of(r);
    for (int k = 0; k < x.nkeys; ++k) {
      if (x.wr_source(r, k) >= 0 || x.reads_local(r, k)) continue;
      Pair p{r, k, {}};
      const Predicate& where = x.h->event(x.ref(r)).where;
      for (int t = 0; t < x.n; ++t)
        if (t != tr && x.writes(t, k) && !where.eval(h.keys[k], x.txn_value(t, k)))
          p.candidates.push_back(t);
      if (p.candidates.empty()) {
        res.status = Status::inconsistent;  // no witness can exist
        return res;
      }
      witness_count *= int(p.candidates.size());
      pairs.push_back(std::move(p));
      if (int(pairs.size()) > budget.max_missing_pairs || witness_count > budget.max_witnesses) {
        res.too_large = true;
        return res;
      }
    }
  }

  long steps = 0;
  bool over = false;
  std::vector<int> pick(pairs.size(), 0);
  for (;;) {
    History ext = h;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const int t = pairs[i].candidates[pick[i]];
      WrEdge e;
      e.key = pairs[i].key;
      e.from = x.ref(x.writer_event(t, pairs[i].key));
      e.to = x.ref(pairs[i].read);
      ext.wr.push_back(e);
    }
    ext.canonicalize();

    HistoryIndex ex = analyze(ext);
    // Extensions that close an so/wr cycle are not histories at all.
    if (!detail::find_cycle(ex.sowr_adj, ex.n)) {
      std::vector<int> accepted;
      detail::for_each_topological_order(
          ex.sowr_adj, ex.n,
          [&](const std::vector<int>& order) {
            if (detail::order_consistent(ex, order)) {
              accepted = order;
              return true;
            }
            return false;
          },
          steps, budget.max_steps, over);
      if (over) {
        res.too_large = true;
        return res;
      }
      if (!accepted.empty()) {
        res.status = Status::consistent;
        res.witness = std::move(ext);
        for (int t : accepted) res.commit_order.push_back(h.txns[t].id);
        return res;
      }
    }

    // advance over the witness space
    bool done = true;
    for (size_t i = pairs.size(); i-- > 0;) {
      if (++pick[i] < int(pairs[i].candidates.size())) {
        done = false;
        break;
      }
      pick[i] = 0;
    }
    if (done || pairs.empty()) break;
  }
  res.status = Status::inconsistent;
  return res;
}

}  // namespace isocheck
