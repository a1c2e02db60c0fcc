#pragma once

// Saturation: grow a partial commit order with every ordering constraint the
// axioms force, and the polynomial consistency check for full histories whose
// levels are all saturable.

#include <stdexcept>

#include "isocheck/axioms.hpp"
#include "isocheck/model.hpp"
#include "isocheck/relation.hpp"

namespace isocheck {

struct SaturationResult {
  CommitRelation pco;
  bool acyclic = true;
  std::optional<std::vector<int>> cycle_witness;
};

// One saturation pass: for every read r observing key k from t1, and every
// other writer t2 of k that is visible to r under `pco`, order t2 before t1.
// Reads with no wr source on a key are skipped, which is exactly what client
// histories need. The result is re-closed transitively.
inline CommitRelation saturate(const HistoryIndex& x, const CommitRelation& pco) {
  CommitRelation res = pco;
  bool grew = false;
  for (int k = 0; k < x.nkeys; ++k) {
    for (int r : x.reads) {
      int src = x.wr_source(r, k);
      if (src < 0) continue;
      const int t1 = x.trans_of(src);
      const int tr = x.trans_of(r);
      const auto vs = vis_set(x.iso_of(tr));
      for (int t2 = 0; t2 < x.n; ++t2) {
        if (t2 == tr || t2 == t1 || !x.writes(t2, k) || res.at(t2, t1)) continue;
        for (Vis v : vs) {
          if (vis_holds(x, pco, v, t2, r, k)) {
            res.add(t2, t1);
            grew = true;
            break;
          }
        }
      }
    }
  }
  if (grew) res.close();
  return res;
}

inline CommitRelation saturate(const History& h, const CommitRelation& pco) {
  HistoryIndex x = analyze(h);
  return saturate(x, pco);
}

// Least fixpoint of saturate starting from (so/wr)+. Monotone growth
// inside a finite square guarantees termination; stabilization is detected
// by comparing edge counts between passes.
inline SaturationResult saturate_fixpoint(const HistoryIndex& x) {
  CommitRelation r = sowr_closure(x);
  size_t edges = r.edge_count();
  for (;;) {
    CommitRelation next = saturate(x, r);
    size_t next_edges = next.edge_count();
    r = std::move(next);
    if (next_edges == edges) break;
    edges = next_edges;
  }
  SaturationResult out;
  out.acyclic = !r.cyclic();
  if (!out.acyclic) out.cycle_witness = r.find_cycle();
  out.pco = std::move(r);
  return out;
}

inline SaturationResult saturate_fixpoint(const History& h) {
  HistoryIndex x = analyze(h);
  return saturate_fixpoint(x);
}

// Fast path for full histories under saturable configurations: the
// saturable visibility relations never consult the commit order, so a
// single saturation pass already reaches the fixpoint, and the history is
// consistent iff that pass stays acyclic.
inline bool check_saturable(const History& h) {
  if (!is_saturable_config(h))
    throw std::invalid_argument("check_saturable: non-saturable isolation level present");
  HistoryIndex x = analyze(h);
  for (int g : x.reads)
    for (int k = 0; k < x.nkeys; ++k)
      if (x.wr_source(g, k) < 0 && !x.reads_local(g, k))
        throw std::invalid_argument("check_saturable: history is not full");
  CommitRelation base = sowr_closure(x);
  if (base.cyclic()) return false;
  return !saturate(x, base).cyclic();
}

}  // namespace isocheck
