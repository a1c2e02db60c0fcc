#pragma once

// Data model for SQL-like transactional histories: events, transaction logs,
// the per-key write-read relation, and the semantic functions (value_wr,
// writes, locality, history-class tests) the rest of the library consumes.
//
// Histories are immutable after construction. All functions here are pure;
// derived lookup tables live in HistoryIndex, which is built once per history
// and never mutated afterwards, so everything is safe to share across threads.

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace isocheck {

// ---------------------------------------------------------------------------
// Isolation levels

enum class Iso : uint8_t { ser, si, pc, ra, rc };

inline const char* to_string(Iso i) {
  switch (i) {
    case Iso::ser: return "SER";
    case Iso::si: return "SI";
    case Iso::pc: return "PC";
    case Iso::ra: return "RA";
    case Iso::rc: return "RC";
  }
  return "?";
}

inline std::optional<Iso> iso_from_string(const std::string& s) {
  if (s == "SER") return Iso::ser;
  if (s == "SI") return Iso::si;
  if (s == "PC") return Iso::pc;
  if (s == "RA") return Iso::ra;
  if (s == "RC") return Iso::rc;
  return std::nullopt;
}

// RA and RC admit the polynomial saturation-only check; the others do not.
inline bool is_saturable(Iso i) { return i == Iso::ra || i == Iso::rc; }

// ---------------------------------------------------------------------------
// Row values

// A row is a (key, value) pair. `deleted` records that the row with this key
// is absent from the database; `undefined` means the event does not determine
// a value for the key at all.
struct RowValue {
  enum class Kind : uint8_t { present, deleted, undefined };
  Kind kind = Kind::undefined;
  int64_t value = 0;

  static RowValue present(int64_t v) { return {Kind::present, v}; }
  static RowValue deleted() { return {Kind::deleted, 0}; }
  static RowValue undefined() { return {Kind::undefined, 0}; }

  bool is_present() const { return kind == Kind::present; }
  bool is_deleted() const { return kind == Kind::deleted; }
  bool is_undefined() const { return kind == Kind::undefined; }

  friend bool operator==(const RowValue& a, const RowValue& b) {
    return a.kind == b.kind && (a.kind != Kind::present || a.value == b.value);
  }
  friend bool operator!=(const RowValue& a, const RowValue& b) { return !(a == b); }
};

// ---------------------------------------------------------------------------
// Predicates (WHERE clauses)

// Closed AST over a single row: value comparisons against constants,
// key-equality against a constant key, boolean connectives, literals.
// Deleted and undefined rows satisfy no predicate, regardless of structure.
struct Predicate {
  enum class Op : uint8_t {
    lit_true,
    lit_false,
    cmp_lt,
    cmp_le,
    cmp_eq,
    cmp_ge,
    cmp_gt,
    cmp_ne,
    key_eq,
    n_and,
    n_or,
    n_not,
  };
  struct Node {
    Op op = Op::lit_true;
    int64_t rhs = 0;      // cmp_* constant
    std::string key;      // key_eq constant
    int a = -1, b = -1;   // children
  };
  std::vector<Node> nodes;  // node 0 unused when empty; root is last node
  int root = -1;

  bool empty() const { return root < 0; }

 private:
  int push(Node n) {
    nodes.push_back(std::move(n));
    root = int(nodes.size()) - 1;
    return root;
  }

 public:
  static Predicate lit(bool v) {
    Predicate p;
    Node n;
    n.op = v ? Op::lit_true : Op::lit_false;
    p.push(n);
    return p;
  }
  static Predicate cmp(Op op, int64_t rhs) {
    Predicate p;
    Node n;
    n.op = op;
    n.rhs = rhs;
    p.push(n);
    return p;
  }
  static Predicate lt(int64_t v) { return cmp(Op::cmp_lt, v); }
  static Predicate le(int64_t v) { return cmp(Op::cmp_le, v); }
  static Predicate eq(int64_t v) { return cmp(Op::cmp_eq, v); }
  static Predicate ge(int64_t v) { return cmp(Op::cmp_ge, v); }
  static Predicate gt(int64_t v) { return cmp(Op::cmp_gt, v); }
  static Predicate ne(int64_t v) { return cmp(Op::cmp_ne, v); }
  static Predicate key_is(std::string key) {
    Predicate p;
    Node n;
    n.op = Op::key_eq;
    n.key = std::move(key);
    p.push(n);
    return p;
  }

 private:
  // Graft `other` into this tree, returning its new root index.
  int graft(const Predicate& other) {
    const int base = int(nodes.size());
    for (Node n : other.nodes) {
      if (n.a >= 0) n.a += base;
      if (n.b >= 0) n.b += base;
      nodes.push_back(std::move(n));
    }
    return base + other.root;
  }

 public:
  static Predicate conj(const Predicate& l, const Predicate& r) {
    Predicate p;
    Node n;
    n.op = Op::n_and;
    n.a = p.graft(l);
    n.b = p.graft(r);
    p.push(n);
    return p;
  }
  static Predicate disj(const Predicate& l, const Predicate& r) {
    Predicate p;
    Node n;
    n.op = Op::n_or;
    n.a = p.graft(l);
    n.b = p.graft(r);
    p.push(n);
    return p;
  }
  static Predicate negate(const Predicate& inner) {
    Predicate p;
    Node n;
    n.op = Op::n_not;
    n.a = p.graft(inner);
    p.push(n);
    return p;
  }

 private:
  bool eval_node(int i, const std::string& key, int64_t v) const {
    const Node& n = nodes[i];
    switch (n.op) {
      case Op::lit_true: return true;
      case Op::lit_false: return false;
      case Op::cmp_lt: return v < n.rhs;
      case Op::cmp_le: return v <= n.rhs;
      case Op::cmp_eq: return v == n.rhs;
      case Op::cmp_ge: return v >= n.rhs;
      case Op::cmp_gt: return v > n.rhs;
      case Op::cmp_ne: return v != n.rhs;
      case Op::key_eq: return key == n.key;
      case Op::n_and: return eval_node(n.a, key, v) && eval_node(n.b, key, v);
      case Op::n_or: return eval_node(n.a, key, v) || eval_node(n.b, key, v);
      case Op::n_not: return !eval_node(n.a, key, v);
    }
    return false;
  }

 public:
  // Total on present rows; false on deleted/undefined no matter the shape.
  bool eval(const std::string& key, const RowValue& row) const {
    if (!row.is_present()) return false;
    if (empty()) return false;
    return eval_node(root, key, row.value);
  }
};

// ---------------------------------------------------------------------------
// Events and transaction logs

enum class EventKind : uint8_t { begin, commit, abort, select, insert, del, update };

inline bool is_read_kind(EventKind k) {
  return k == EventKind::select || k == EventKind::del || k == EventKind::update;
}
inline bool is_write_kind(EventKind k) {
  return k == EventKind::insert || k == EventKind::del || k == EventKind::update;
}

struct Event {
  EventKind kind = EventKind::begin;
  Predicate where;                                // select / delete / update
  std::vector<std::pair<int, RowValue>> rows;     // insert rows / update set, keyed by key index, sorted
};

// Event identifier: transaction index plus position in program order.
struct EventRef {
  int txn = -1;
  int pos = -1;
  friend bool operator==(const EventRef& a, const EventRef& b) {
    return a.txn == b.txn && a.pos == b.pos;
  }
  friend bool operator<(const EventRef& a, const EventRef& b) {
    return a.txn != b.txn ? a.txn < b.txn : a.pos < b.pos;
  }
};

struct Transaction {
  std::string id;
  Iso iso = Iso::rc;
  int session = -1;      // -1 for the init transaction
  int session_pos = 0;   // position within its session
  bool committed = true; // false = aborted
  std::vector<Event> events;  // program order; first is begin, last is commit/abort
};

struct WrEdge {
  int key = -1;
  EventRef from;  // write event
  EventRef to;    // read event
  friend bool operator==(const WrEdge& a, const WrEdge& b) {
    return a.key == b.key && a.from == b.from && a.to == b.to;
  }
  friend bool operator<(const WrEdge& a, const WrEdge& b) {
    if (a.key != b.key) return a.key < b.key;
    if (!(a.to == b.to)) return a.to < b.to;
    return a.from < b.from;
  }
};

// ---------------------------------------------------------------------------
// Histories

// Transactions are stored in canonical order: init first, then session by
// session in declaration order. Session order `so` is derived from the
// session/session_pos fields plus init-before-everything; it is never stored.
struct History {
  std::vector<std::string> keys;
  std::vector<std::string> session_ids;
  std::vector<Transaction> txns;  // txns[0] is init
  std::vector<WrEdge> wr;         // canonically sorted

  int key_index(const std::string& name) const {
    for (int i = 0; i < int(keys.size()); ++i)
      if (keys[i] == name) return i;
    return -1;
  }
  int txn_index(const std::string& id) const {
    for (int i = 0; i < int(txns.size()); ++i)
      if (txns[i].id == id) return i;
    return -1;
  }
  const Event& event(EventRef r) const { return txns[r.txn].events[r.pos]; }

  std::string event_label(EventRef r) const {
    return txns[r.txn].id + ":" + std::to_string(r.pos);
  }

  // Strict session order (init precedes every other transaction).
  bool so(int a, int b) const {
    if (a == b) return false;
    if (a == 0) return b != 0;
    if (b == 0) return false;
    const Transaction& ta = txns[a];
    const Transaction& tb = txns[b];
    return ta.session == tb.session && ta.session_pos < tb.session_pos;
  }

  void canonicalize() { std::sort(wr.begin(), wr.end()); }
};

// Reorders transactions into canonical order (init, then session-major) and
// remaps wr accordingly. Returns the permutation old index -> new index so
// callers can fix up parallel arrays.
inline std::vector<int> canonicalize_transactions(History& h) {
  const int n = int(h.txns.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const Transaction &ta = h.txns[a], &tb = h.txns[b];
    if (ta.session != tb.session) return ta.session < tb.session;
    return ta.session_pos < tb.session_pos;
  });
  std::vector<int> old_to_new(n);
  for (int i = 0; i < n; ++i) old_to_new[order[i]] = i;
  std::vector<Transaction> txns;
  txns.reserve(n);
  for (int i = 0; i < n; ++i) txns.push_back(std::move(h.txns[order[i]]));
  h.txns = std::move(txns);
  for (WrEdge& e : h.wr) {
    e.from.txn = old_to_new[e.from.txn];
    e.to.txn = old_to_new[e.to.txn];
  }
  h.canonicalize();
  return old_to_new;
}

// Builds the synthetic init transaction from the declared initial state
// ("absent" keys become deleted rows; init is the only transaction allowed
// to insert them).
inline Transaction make_init_txn(const std::vector<std::string>& keys,
                                 const std::vector<RowValue>& initial) {
  Transaction t;
  t.id = "init";
  t.iso = Iso::rc;
  t.session = -1;
  t.session_pos = 0;
  t.committed = true;
  Event ins;
  ins.kind = EventKind::insert;
  for (int k = 0; k < int(keys.size()); ++k) ins.rows.push_back({k, initial[k]});
  t.events.push_back({EventKind::begin, {}, {}});
  t.events.push_back(std::move(ins));
  t.events.push_back({EventKind::commit, {}, {}});
  return t;
}

// ---------------------------------------------------------------------------
// Derived per-history tables

// Everything downstream needs fast access to value_wr, per-transaction write
// sets, wr lookups, and locality flags. HistoryIndex computes them all once.
// Construction tolerates structurally broken histories (validate() reports
// the problems); value recursion through a wr cycle yields undefined and sets
// `value_cycle`.
struct HistoryIndex {
  const History* h = nullptr;
  int n = 0;       // transactions
  int nkeys = 0;
  int n_events = 0;
  std::vector<int> ev_base;          // txn -> first global event id
  std::vector<int> ev_txn;           // gid -> txn
  std::vector<int> ev_pos;           // gid -> pos
  std::vector<char> ev_is_read, ev_is_write;
  std::vector<int> wr_inv;           // [gid*nkeys+k] -> source write gid, or -1
  std::vector<RowValue> val;         // value_wr per (gid, key)
  std::vector<char> local;           // [gid*nkeys+k] read gid reads k locally
  std::vector<char> t_writes;        // [t*nkeys+k] transaction-level writes(t,k)
  std::vector<RowValue> t_val;       // [t*nkeys+k] transaction-level value
  std::vector<int> t_writer_event;   // [t*nkeys+k] gid of the writing event, or -1
  std::vector<uint64_t> t_keymask;   // per txn, bitmask words of written keys
  int keymask_words = 0;
  std::vector<int> reads;            // read event gids, canonical order
  std::vector<int> read_slot;        // gid -> index into `reads`, or -1
  std::vector<char> wr_into_txn;     // [t*n + src] some wr edge src -> (event of t)
  std::vector<char> wr_upto;         // [read_slot*n + src] edge src -> event <=po the read
  std::vector<char> sowr_adj;        // [a*n + b] so-or-wr edge, txn level (not closed)
  bool value_cycle = false;

  int gid(EventRef r) const { return ev_base[r.txn] + r.pos; }
  EventRef ref(int g) const { return {ev_txn[g], ev_pos[g]}; }
  int trans_of(int g) const { return ev_txn[g]; }
  bool so(int a, int b) const { return h->so(a, b); }

  RowValue value(int g, int k) const { return val[g * nkeys + k]; }
  int wr_source(int g, int k) const { return wr_inv[g * nkeys + k]; }
  bool reads_local(int g, int k) const { return local[g * nkeys + k] != 0; }
  bool writes(int t, int k) const { return t_writes[t * nkeys + k] != 0; }
  RowValue txn_value(int t, int k) const { return t_val[t * nkeys + k]; }
  int writer_event(int t, int k) const { return t_writer_event[t * nkeys + k]; }
  Iso iso_of(int t) const { return h->txns[t].iso; }

  bool share_written_key(int a, int b) const {
    for (int w = 0; w < keymask_words; ++w)
      if (t_keymask[a * keymask_words + w] & t_keymask[b * keymask_words + w]) return true;
    return false;
  }
};

namespace detail {

// value_wr recursion, iterative with cycle detection (0 fresh, 1 in
// progress, 2 done).
inline RowValue compute_value(HistoryIndex& x, std::vector<uint8_t>& mark, int g, int k);

inline RowValue value_step(HistoryIndex& x, std::vector<uint8_t>& mark, int g, int k) {
  const History& h = *x.h;
  const Event& e = h.event(x.ref(g));
  switch (e.kind) {
    case EventKind::insert: {
      for (const auto& [kk, v] : e.rows)
        if (kk == k) return v;
      return RowValue::undefined();
    }
    case EventKind::del:
    case EventKind::update: {
      int src = x.wr_source(g, k);
      if (src < 0) return RowValue::undefined();
      RowValue seen = compute_value(x, mark, src, k);
      if (!e.where.eval(h.keys[k], seen)) return RowValue::undefined();
      if (e.kind == EventKind::del) return RowValue::deleted();
      for (const auto& [kk, v] : e.rows)
        if (kk == k) return v;
      return RowValue::undefined();  // update set lacks the key; validate() flags this
    }
    default:
      return RowValue::undefined();
  }
}

inline RowValue compute_value(HistoryIndex& x, std::vector<uint8_t>& mark, int g, int k) {
  const int idx = g * x.nkeys + k;
  if (mark[idx] == 2) return x.val[idx];
  if (mark[idx] == 1) {  // wr cycle; validate() reports it separately
    x.value_cycle = true;
    return RowValue::undefined();
  }
  mark[idx] = 1;
  RowValue v = value_step(x, mark, g, k);
  x.val[idx] = v;
  mark[idx] = 2;
  return v;
}

}  // namespace detail

// The index aliases the history it was built from; the history must outlive
// it, so temporaries are rejected.
HistoryIndex analyze(History&&) = delete;

inline HistoryIndex analyze(const History& h) {
  HistoryIndex x;
  x.h = &h;
  x.n = int(h.txns.size());
  x.nkeys = int(h.keys.size());
  x.ev_base.resize(x.n);
  int g = 0;
  for (int t = 0; t < x.n; ++t) {
    x.ev_base[t] = g;
    g += int(h.txns[t].events.size());
  }
  x.n_events = g;
  x.ev_txn.resize(g);
  x.ev_pos.resize(g);
  x.ev_is_read.assign(g, 0);
  x.ev_is_write.assign(g, 0);
  for (int t = 0; t < x.n; ++t)
    for (int p = 0; p < int(h.txns[t].events.size()); ++p) {
      int id = x.ev_base[t] + p;
      x.ev_txn[id] = t;
      x.ev_pos[id] = p;
      x.ev_is_read[id] = is_read_kind(h.txns[t].events[p].kind);
      x.ev_is_write[id] = is_write_kind(h.txns[t].events[p].kind);
    }

  x.wr_inv.assign(size_t(g) * x.nkeys, -1);
  for (const WrEdge& e : h.wr) {
    if (e.key < 0 || e.key >= x.nkeys) continue;
    if (e.to.txn < 0 || e.to.txn >= x.n || e.from.txn < 0 || e.from.txn >= x.n) continue;
    if (e.to.pos < 0 || e.to.pos >= int(h.txns[e.to.txn].events.size())) continue;
    if (e.from.pos < 0 || e.from.pos >= int(h.txns[e.from.txn].events.size())) continue;
    int to = x.gid(e.to), from = x.gid(e.from);
    if (x.wr_inv[to * x.nkeys + e.key] < 0) x.wr_inv[to * x.nkeys + e.key] = from;
    // duplicate targets are a validation error; first edge wins here
  }

  x.val.assign(size_t(g) * x.nkeys, RowValue::undefined());
  {
    std::vector<uint8_t> mark(size_t(g) * x.nkeys, 0);
    for (int id = 0; id < g; ++id)
      if (x.ev_is_write[id])
        for (int k = 0; k < x.nkeys; ++k) detail::compute_value(x, mark, id, k);
  }

  // Locality: a read event reads k locally if an earlier event of the same
  // transaction has a defined value on k (abort status is ignored here; a
  // transaction sees its own writes while it runs).
  x.local.assign(size_t(g) * x.nkeys, 0);
  for (int t = 0; t < x.n; ++t) {
    std::vector<char> seen(x.nkeys, 0);
    for (int p = 0; p < int(h.txns[t].events.size()); ++p) {
      int id = x.ev_base[t] + p;
      if (x.ev_is_read[id])
        for (int k = 0; k < x.nkeys; ++k) x.local[id * x.nkeys + k] = seen[k];
      if (x.ev_is_write[id])
        for (int k = 0; k < x.nkeys; ++k)
          if (!x.value(id, k).is_undefined()) seen[k] = 1;
    }
  }

  // Transaction-level writes and values (aborted transactions write nothing;
  // the po-maximal writer of a key determines the transaction's value).
  x.t_writes.assign(size_t(x.n) * x.nkeys, 0);
  x.t_val.assign(size_t(x.n) * x.nkeys, RowValue::undefined());
  x.t_writer_event.assign(size_t(x.n) * x.nkeys, -1);
  x.keymask_words = (x.nkeys + 63) / 64;
  x.t_keymask.assign(size_t(x.n) * x.keymask_words, 0);
  for (int t = 0; t < x.n; ++t) {
    if (!h.txns[t].committed) continue;
    for (int p = 0; p < int(h.txns[t].events.size()); ++p) {
      int id = x.ev_base[t] + p;
      if (!x.ev_is_write[id]) continue;
      for (int k = 0; k < x.nkeys; ++k) {
        RowValue v = x.value(id, k);
        if (v.is_undefined()) continue;
        x.t_writes[t * x.nkeys + k] = 1;
        x.t_val[t * x.nkeys + k] = v;  // later events overwrite: po-maximal wins
        x.t_writer_event[t * x.nkeys + k] = id;
        x.t_keymask[t * x.keymask_words + k / 64] |= (uint64_t(1) << (k % 64));
      }
    }
  }

  // Read list plus wr source tables used by the visibility relations.
  x.read_slot.assign(g, -1);
  for (int id = 0; id < g; ++id)
    if (x.ev_is_read[id]) {
      x.read_slot[id] = int(x.reads.size());
      x.reads.push_back(id);
    }
  x.wr_into_txn.assign(size_t(x.n) * x.n, 0);
  x.wr_upto.assign(x.reads.size() * size_t(x.n), 0);
  for (int t = 0; t < x.n; ++t) {
    std::vector<char> so_far(x.n, 0);  // wr sources seen up to current po position
    for (int p = 0; p < int(h.txns[t].events.size()); ++p) {
      int id = x.ev_base[t] + p;
      for (int k = 0; k < x.nkeys; ++k) {
        int src = x.wr_source(id, k);
        if (src >= 0) {
          int st = x.trans_of(src);
          if (st != t) x.wr_into_txn[t * x.n + st] = 1;
        }
      }
      if (x.ev_is_read[id]) {
        // include edges into this very event
        for (int k = 0; k < x.nkeys; ++k) {
          int src = x.wr_source(id, k);
          if (src >= 0 && x.trans_of(src) != t) so_far[x.trans_of(src)] = 1;
        }
        int slot = x.read_slot[id];
        for (int s = 0; s < x.n; ++s) x.wr_upto[slot * size_t(x.n) + s] = so_far[s];
      } else {
        for (int k = 0; k < x.nkeys; ++k) {
          int src = x.wr_source(id, k);
          if (src >= 0 && x.trans_of(src) != t) so_far[x.trans_of(src)] = 1;
        }
      }
    }
  }

  // Transaction-level so/wr adjacency.
  x.sowr_adj.assign(size_t(x.n) * x.n, 0);
  for (int a = 0; a < x.n; ++a)
    for (int b = 0; b < x.n; ++b)
      if (a != b && h.so(a, b)) x.sowr_adj[a * x.n + b] = 1;
  for (const WrEdge& e : h.wr)
    if (e.from.txn != e.to.txn && e.from.txn >= 0 && e.to.txn >= 0 && e.from.txn < x.n &&
        e.to.txn < x.n)
      x.sowr_adj[e.from.txn * x.n + e.to.txn] = 1;

  return x;
}

// ---------------------------------------------------------------------------
// Semantic functions (thin wrappers over HistoryIndex for one-off queries)

inline RowValue value_wr(const History& h, EventRef w, const std::string& key) {
  HistoryIndex x = analyze(h);
  int k = h.key_index(key);
  return k < 0 ? RowValue::undefined() : x.value(x.gid(w), k);
}

inline bool writes(const History& h, const std::string& txn_id, const std::string& key) {
  HistoryIndex x = analyze(h);
  int t = h.txn_index(txn_id), k = h.key_index(key);
  return t >= 0 && k >= 0 && x.writes(t, k);
}

inline RowValue txn_value(const History& h, const std::string& txn_id, const std::string& key) {
  HistoryIndex x = analyze(h);
  int t = h.txn_index(txn_id), k = h.key_index(key);
  if (t < 0 || k < 0 || !x.writes(t, k)) return RowValue::undefined();
  return x.txn_value(t, k);
}

inline bool reads_locally(const History& h, EventRef r, const std::string& key) {
  HistoryIndex x = analyze(h);
  int k = h.key_index(key);
  return k >= 0 && x.reads_local(x.gid(r), k);
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationError {
  std::string code;     // stable identifier, e.g. "wr_cycle", "pending_transaction"
  std::string message;  // names the offending transaction/event/key
};

namespace detail {

// Cycle search over an adjacency matrix; returns the node cycle if any.
inline std::optional<std::vector<int>> find_cycle(const std::vector<char>& adj, int n) {
  std::vector<uint8_t> color(n, 0);
  std::vector<int> parent(n, -1);
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (color[s]) continue;
    stack.push_back(s);
    while (!stack.empty()) {
      int u = stack.back();
      if (color[u] == 0) {
        color[u] = 1;
        for (int v = 0; v < n; ++v) {
          if (!adj[u * n + v]) continue;
          if (color[v] == 1) {
            std::vector<int> cyc{v};
            for (int w = u; w != v && w != -1; w = parent[w]) cyc.push_back(w);
            std::reverse(cyc.begin(), cyc.end());
            return cyc;
          }
          if (color[v] == 0) {
            parent[v] = u;
            stack.push_back(v);
          }
        }
      } else {
        color[u] = 2;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Structural checks: event shape, wr well-formedness, so/wr acyclicity,
// the single-writer-per-key rule, and wr edges landing on defined values.
// Returns every violation found; never throws.
inline std::vector<ValidationError> validate(const History& h) {
  std::vector<ValidationError> errs;
  auto err = [&](std::string code, std::string msg) {
    errs.push_back({std::move(code), std::move(msg)});
  };

  const int n = int(h.txns.size());
  if (n == 0 || h.txns[0].id != "init" || h.txns[0].session != -1) {
    err("missing_init", "history lacks the synthetic init transaction at index 0");
    return errs;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (h.txns[i].id == h.txns[j].id)
        err("duplicate_txn", "duplicate transaction id '" + h.txns[i].id + "'");

  // init inserts exactly the declared key universe
  {
    const Transaction& t0 = h.txns[0];
    bool shape = t0.events.size() == 3 && t0.events[0].kind == EventKind::begin &&
                 t0.events[1].kind == EventKind::insert &&
                 t0.events[2].kind == EventKind::commit && t0.committed;
    if (!shape || t0.events[1].rows.size() != h.keys.size())
      err("bad_init", "init must be begin; insert of every declared key; commit");
  }

  for (int t = 0; t < n; ++t) {
    const Transaction& tx = h.txns[t];
    if (tx.events.empty() || tx.events.front().kind != EventKind::begin) {
      err("bad_shape", "transaction '" + tx.id + "' does not start with begin");
      continue;
    }
    EventKind last = tx.events.back().kind;
    if (last != EventKind::commit && last != EventKind::abort) {
      err("pending_transaction",
          "transaction '" + tx.id + "' has no commit or abort (pending logs are rejected)");
      continue;
    }
    if ((last == EventKind::commit) != tx.committed)
      err("bad_shape", "transaction '" + tx.id + "' status disagrees with its final event");
    for (int p = 1; p + 1 < int(tx.events.size()); ++p) {
      EventKind k = tx.events[p].kind;
      if (k == EventKind::begin || k == EventKind::commit || k == EventKind::abort)
        err("bad_shape", "transaction '" + tx.id + "' has a control event mid-log at position " +
                             std::to_string(p));
    }
    for (int p = 0; p < int(tx.events.size()); ++p) {
      const Event& e = tx.events[p];
      for (const auto& [k, v] : e.rows) {
        if (k < 0 || k >= int(h.keys.size()))
          err("unknown_key", "event " + h.event_label({t, p}) + " references an undeclared key");
        if (e.kind == EventKind::insert && v.is_deleted() && t != 0)
          err("deleted_insert", "only init may insert deleted rows (event " +
                                    h.event_label({t, p}) + ")");
        if (v.is_undefined())
          err("bad_row", "event " + h.event_label({t, p}) + " carries an undefined row value");
      }
    }
  }
  if (!errs.empty()) return errs;  // shape errors make the deeper checks unreliable

  // wr edge well-formedness
  {
    std::vector<WrEdge> seen_targets;
    for (const WrEdge& e : h.wr) {
      if (e.key < 0 || e.key >= int(h.keys.size())) {
        err("unknown_key", "wr edge references an undeclared key");
        continue;
      }
      auto in_range = [&](EventRef r) {
        return r.txn >= 0 && r.txn < n && r.pos >= 0 && r.pos < int(h.txns[r.txn].events.size());
      };
      if (!in_range(e.from) || !in_range(e.to)) {
        err("bad_event_ref", "wr edge references a nonexistent event");
        continue;
      }
      const std::string where = h.keys[e.key] + ": " + h.event_label(e.from) + " -> " +
                                h.event_label(e.to);
      if (!is_write_kind(h.event(e.from).kind))
        err("bad_wr_source", "wr source is not a write event (" + where + ")");
      if (!is_read_kind(h.event(e.to).kind))
        err("bad_wr_target", "wr target is not a read event (" + where + ")");
      if (e.from.txn == e.to.txn)
        err("wr_same_txn", "wr edge within one transaction (" + where + ")");
      if (!h.txns[e.from.txn].committed)
        err("wr_from_aborted", "wr edge from an aborted transaction (" + where + ")");
      for (const WrEdge& s : seen_targets)
        if (s.key == e.key && s.to == e.to)
          err("wr_not_function", "two wr sources for one (read, key) pair (" + where + ")");
      seen_targets.push_back(e);
    }
  }
  if (!errs.empty()) return errs;

  HistoryIndex x = analyze(h);

  if (auto cyc = detail::find_cycle(x.sowr_adj, n)) {
    std::string msg = "so/wr cycle:";
    for (int t : *cyc) msg += " " + h.txns[t].id;
    err("wr_cycle", msg);
    return errs;
  }
  if (x.value_cycle) {
    err("wr_cycle", "event-level wr recursion hits a cycle");
    return errs;
  }

  // Value-level checks
  for (const WrEdge& e : h.wr) {
    if (x.value(x.gid(e.from), e.key).is_undefined())
      err("dangling_write", "wr edge from a write with undefined value on key '" +
                                h.keys[e.key] + "' (" + h.event_label(e.from) + " -> " +
                                h.event_label(e.to) + ")");
    if (x.reads_local(x.gid(e.to), e.key))
      err("wr_local_read", "wr edge into a locally-satisfied read (" + h.event_label(e.to) +
                               ", key '" + h.keys[e.key] + "')");
  }
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < x.nkeys; ++k) {
      int writers = 0;
      for (int p = 0; p < int(h.txns[t].events.size()); ++p)
        if (x.ev_is_write[x.ev_base[t] + p] && !x.value(x.ev_base[t] + p, k).is_undefined())
          ++writers;
      if (writers > 1)
        err("multiple_writers", "transaction '" + h.txns[t].id + "' modifies key '" + h.keys[k] +
                                    "' more than once");
    }
    for (int p = 0; p < int(h.txns[t].events.size()); ++p) {
      const Event& e = h.txns[t].events[p];
      if (e.kind != EventKind::update) continue;
      int id = x.ev_base[t] + p;
      for (int k = 0; k < x.nkeys; ++k) {
        int src = x.wr_source(id, k);
        if (src < 0) continue;
        if (!e.where.eval(h.keys[k], x.value(src, k))) continue;
        bool in_set = false;
        for (const auto& [kk, v] : e.rows) in_set |= (kk == k);
        if (!in_set)
          err("update_missing_set", "update " + h.event_label({t, p}) +
                                        " matches key '" + h.keys[k] +
                                        "' but its set map lacks a replacement");
      }
    }
  }
  return errs;
}

// ---------------------------------------------------------------------------
// History classes

// Full: wr defined for every (read event, key) pair except local reads.
inline bool is_full(const History& h) {
  HistoryIndex x = analyze(h);
  for (int g : x.reads)
    for (int k = 0; k < x.nkeys; ++k)
      if (x.wr_source(g, k) < 0 && !x.reads_local(g, k)) return false;
  return true;
}

namespace detail {

inline bool same_skeleton(const History& a, const History& b) {
  if (a.keys != b.keys || a.txns.size() != b.txns.size()) return false;
  for (size_t i = 0; i < a.txns.size(); ++i) {
    const Transaction &ta = a.txns[i], &tb = b.txns[i];
    if (ta.id != tb.id || ta.iso != tb.iso || ta.session != tb.session ||
        ta.session_pos != tb.session_pos || ta.committed != tb.committed ||
        ta.events.size() != tb.events.size())
      return false;
    for (size_t p = 0; p < ta.events.size(); ++p)
      if (ta.events[p].kind != tb.events[p].kind) return false;
  }
  return true;
}

}  // namespace detail

// Same transactions and session order, write-read relation a superset.
inline bool extends(const History& base, const History& ext) {
  if (!detail::same_skeleton(base, ext)) return false;
  for (const WrEdge& e : base.wr)
    if (!std::binary_search(ext.wr.begin(), ext.wr.end(), e)) return false;
  return true;
}

// `full` witnesses `client`: it is a full extension and every edge it adds
// carries a value that falsifies the destination read's WHERE clause.
inline bool is_witness(const History& full, const History& client) {
  if (!extends(client, full) || !is_full(full)) return false;
  HistoryIndex xf = analyze(full);
  for (const WrEdge& e : full.wr) {
    if (std::binary_search(client.wr.begin(), client.wr.end(), e)) continue;
    const Event& r = full.event(e.to);
    if (r.where.eval(full.keys[e.key], xf.value(xf.gid(e.from), e.key))) return false;
  }
  return true;
}

// Partial observation: every unread non-local (read, key) pair admits a
// deleting writer in another committed transaction.
inline bool is_partial_observation(const History& h) {
  HistoryIndex x = analyze(h);
  for (int g : x.reads) {
    int tr = x.trans_of(g);
    for (int k = 0; k < x.nkeys; ++k) {
      if (x.wr_source(g, k) >= 0 || x.reads_local(g, k)) continue;
      bool found = false;
      for (int t = 0; t < x.n && !found; ++t) {
        if (t == tr || !h.txns[t].committed) continue;
        for (int p = 0; p < int(h.txns[t].events.size()) && !found; ++p)
          if (x.value(x.ev_base[t] + p, k).is_deleted()) found = true;
      }
      if (!found) return false;
    }
  }
  return true;
}

}  // namespace isocheck
