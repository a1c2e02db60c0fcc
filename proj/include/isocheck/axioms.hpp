#pragma once

// The five visibility relations and the axiom-satisfaction predicate,
// parameterized over an arbitrary commit relation. A relation type only
// needs `bool at(int,int)` and `bool star(int,int)`, so the prefix search
// can pass a lazily materialized view instead of a full matrix.

#include <span>

#include "isocheck/model.hpp"
#include "isocheck/relation.hpp"

namespace isocheck {

enum class Vis : uint8_t { rc, ra, ser, prefix, conflict };

inline const char* to_string(Vis v) {
  switch (v) {
    case Vis::rc: return "rc";
    case Vis::ra: return "ra";
    case Vis::ser: return "ser";
    case Vis::prefix: return "prefix";
    case Vis::conflict: return "conflict";
  }
  return "?";
}

// SI is the conjunction of prefix and conflict; every other level uses a
// single relation.
inline std::span<const Vis> vis_set(Iso i) {
  static constexpr Vis k_ser[] = {Vis::ser};
  static constexpr Vis k_si[] = {Vis::prefix, Vis::conflict};
  static constexpr Vis k_pc[] = {Vis::prefix};
  static constexpr Vis k_ra[] = {Vis::ra};
  static constexpr Vis k_rc[] = {Vis::rc};
  switch (i) {
    case Iso::ser: return k_ser;
    case Iso::si: return k_si;
    case Iso::pc: return k_pc;
    case Iso::ra: return k_ra;
    case Iso::rc: return k_rc;
  }
  return k_rc;
}

// True iff every transaction's level avoids commit-order-dependent
// visibility relations; those histories admit the one-pass check.
inline bool is_saturable_config(const History& h) {
  for (const Transaction& t : h.txns)
    if (!is_saturable(t.iso)) return false;
  return true;
}

// Does writer t2 have to be visible to read event r (gid) on key k, with
// every commit-order occurrence interpreted as `rel`? Callers guarantee
// t2 != trans(r) and writes(t2, k).
//
//   rc:       t2 so-precedes trans(r), or wrote something read at-or-before
//             r in program order
//   ra:       (t2, trans(r)) in so or wr
//   ser:      (t2, trans(r)) in rel
//   prefix:   some t4 with (t2,t4) in rel* and (t4, trans(r)) in so/wr
//   conflict: some t4 writing a key that trans(r) also writes, with
//             (t2,t4) in rel* and (t4, trans(r)) in rel
template <class Rel>
bool vis_holds(const HistoryIndex& x, const Rel& rel, Vis v, int t2, int r, int k) {
  (void)k;  // the key constrains the axiom's premise, not the path formula
  const int tr = x.trans_of(r);
  switch (v) {
    case Vis::rc:
      return x.so(t2, tr) || x.wr_upto[size_t(x.read_slot[r]) * x.n + t2];
    case Vis::ra:
      return x.so(t2, tr) || x.wr_into_txn[size_t(tr) * x.n + t2];
    case Vis::ser:
      return rel.at(t2, tr);
    case Vis::prefix:
      for (int t4 = 0; t4 < x.n; ++t4)
        if ((x.so(t4, tr) || x.wr_into_txn[size_t(tr) * x.n + t4]) && rel.star(t2, t4))
          return true;
      return false;
    case Vis::conflict:
      for (int t4 = 0; t4 < x.n; ++t4)
        if (t4 != tr && rel.at(t4, tr) && x.share_written_key(t4, tr) && rel.star(t2, t4))
          return true;
      return false;
  }
  return false;
}

// Axiom satisfaction for one read event under a commit relation: every
// visible writer of a key the read observed must commit no later than the
// transaction it read that key from.
template <class Rel>
bool axiom_holds(const HistoryIndex& x, const Rel& co, int r) {
  const int tr = x.trans_of(r);
  const auto vs = vis_set(x.iso_of(tr));
  for (int k = 0; k < x.nkeys; ++k) {
    int src = x.wr_source(r, k);
    if (src < 0) continue;
    int t1 = x.trans_of(src);
    for (int t2 = 0; t2 < x.n; ++t2) {
      if (t2 == t1 || t2 == tr || !x.writes(t2, k)) continue;
      for (Vis v : vs)
        if (vis_holds(x, co, v, t2, r, k) && !co.at(t2, t1)) return false;
    }
  }
  return true;
}

// All reads at once; the execution-level test.
template <class Rel>
bool execution_consistent(const HistoryIndex& x, const Rel& co) {
  for (int r : x.reads)
    if (!axiom_holds(x, co, r)) return false;
  return true;
}

inline bool axiom_holds(const History& h, const std::vector<int>& commit_order, EventRef r) {
  HistoryIndex x = analyze(h);
  return axiom_holds(x, order_relation(x.n, commit_order), x.gid(r));
}

}  // namespace isocheck
