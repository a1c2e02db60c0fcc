#pragma once

// Reference interleaving semantics for transactional programs under SER, SI
// and RC. Every database access takes a fresh timestamp and reads from an
// isolation-dependent snapshot; commit (and explicit abort) validates the
// transaction against concurrently committed writers and blocks the run on
// failure. Completed runs yield full histories that are consistent by
// construction, which makes this the positive-test fuzzing source.

#include <optional>
#include <random>

#include "isocheck/model.hpp"

namespace isocheck {

// ---------------------------------------------------------------------------
// Programs

struct Instr {
  // `local` stands in for assignments and conditionals: they never touch the
  // database, so the engine treats them as history-preserving no-ops.
  enum class Op : uint8_t { select, insert, del, update, abort_txn, local } op = Op::select;
  Predicate where;                             // select / del / update
  std::vector<std::pair<int, RowValue>> rows;  // insert rows / update set
};

struct TxnBody {
  Iso iso = Iso::rc;
  std::vector<Instr> instrs;  // begin/commit are implicit
};

struct Program {
  std::vector<std::string> keys;
  std::vector<RowValue> initial;  // per key
  std::vector<std::string> session_ids;
  std::vector<std::vector<TxnBody>> sessions;
};

// ---------------------------------------------------------------------------
// Run state

struct RunState {
  const Program* prog = nullptr;
  History h;                            // history built so far
  std::vector<std::vector<long>> ts;    // per (txn, event) timestamp
  std::vector<std::vector<long>> snap;  // per (txn, event) snapshot
  std::vector<int> next_body;           // per session
  std::vector<int> next_instr;          // per session, -1 = no live txn
  std::vector<int> live_txn;            // per session, txn index or -1
  std::vector<char> dead;               // session blocked by failed validation
  bool freshest_snapshots = false;      // resolve every choice to the newest option
  long clock = 0;

  bool session_done(int j) const {
    return live_txn[j] < 0 && next_body[j] >= int(prog->sessions[j].size());
  }
  bool finished() const {
    for (int j = 0; j < int(prog->sessions.size()); ++j)
      if (!session_done(j)) return false;
    return true;
  }
};

enum class StepOutcome : uint8_t { ok, blocked, no_rule };

namespace opsem_detail {

inline long commit_ts(const RunState& st, int t) {
  const Transaction& tx = st.h.txns[t];
  if (!tx.committed || tx.events.back().kind != EventKind::commit) return -1;
  return st.ts[t][tx.events.size() - 1];
}

// The version of key k visible at `snapshot`: the writer event of the
// transaction with the latest commit timestamp at most `snapshot`. Version
// order is commit order. init (commit timestamp 0) always qualifies, so the
// result is defined for every key.
inline int read_from(const RunState& st, int k, long snapshot, const HistoryIndex& x,
                     int* out_txn) {
  long best_cts = -1;
  int best_gid = -1, best_txn = -1;
  for (int t = 0; t < int(st.h.txns.size()); ++t) {
    long cts = commit_ts(st, t);
    if (cts < 0 || cts > snapshot || cts <= best_cts) continue;
    for (int p = 0; p < int(st.h.txns[t].events.size()); ++p) {
      int gid = x.ev_base[t] + p;
      if (!x.ev_is_write[gid] || x.value(gid, k).is_undefined()) continue;
      best_cts = cts;
      best_gid = gid;
      best_txn = t;
    }
  }
  if (out_txn) *out_txn = best_txn;
  return best_gid;
}

// Does the live transaction already write k (a later read of k is local)?
inline bool local_write(const RunState& st, int t, int k, const HistoryIndex& x) {
  for (int p = 0; p < int(st.h.txns[t].events.size()); ++p)
    if (x.ev_is_write[x.ev_base[t] + p] && !x.value(x.ev_base[t] + p, k).is_undefined())
      return true;
  return false;
}

// Commit-time validation. SER forbids concurrently committed writers that
// intersect the read or write set; SI forbids write-write overlap measured
// from the transaction's snapshot; RC always passes.
inline bool validate_commit(const RunState& st, const HistoryIndex& x, int t, long end_ts) {
  const Iso iso = st.h.txns[t].iso;
  if (iso == Iso::rc) return true;
  const long begin_ts = st.ts[t][0];
  const long window_lo = iso == Iso::si ? st.snap[t][0] : begin_ts;
  const int nkeys = int(st.h.keys.size());
  for (int k = 0; k < nkeys; ++k) {
    bool t_writes_k = false, t_reads_k = false;
    for (int p = 0; p < int(st.h.txns[t].events.size()); ++p) {
      int gid = x.ev_base[t] + p;
      if (x.ev_is_write[gid] && !x.value(gid, k).is_undefined()) t_writes_k = true;
      if (x.ev_is_read[gid] && x.wr_source(gid, k) >= 0) t_reads_k = true;
    }
    const bool relevant = iso == Iso::ser ? (t_writes_k || t_reads_k) : t_writes_k;
    if (!relevant) continue;
    for (int u = 0; u < int(st.h.txns.size()); ++u) {
      if (u == t) continue;
      long cts = commit_ts(st, u);
      if (cts <= window_lo || cts >= end_ts) continue;
      if (x.writes(u, k)) return false;
    }
  }
  return true;
}

inline long max_commit_ts_below(const RunState& st, long below) {
  long best = 0;  // init commits at 0
  for (int t = 0; t < int(st.h.txns.size()); ++t) {
    long cts = commit_ts(st, t);
    if (cts >= 0 && cts < below) best = std::max(best, cts);
  }
  return best;
}

// Snapshot floor: never earlier than any program/session predecessor's
// snapshot, nor than the commit of any session predecessor. The floor keeps
// session-order visibility intact for SI and RC.
inline long snapshot_floor(const RunState& st, int j, int t) {
  long floor = 0;
  if (t < int(st.snap.size()))
    for (long s : st.snap[t]) floor = std::max(floor, s);
  for (int u = 1; u < int(st.h.txns.size()) && u < int(st.snap.size()); ++u) {
    if (u == t || st.h.txns[u].session != j) continue;
    if (st.h.txns[u].session_pos < st.h.txns[t].session_pos) {
      long cts = commit_ts(st, u);
      if (cts >= 0) floor = std::max(floor, cts);
      for (long s : st.snap[u]) floor = std::max(floor, s);
    }
  }
  return floor;
}

// Uniform choice among the committed timestamps in [floor, below); with
// freshest_snapshots set, always the newest one.
inline long choose_snapshot(const RunState& st, long floor, long below, std::mt19937_64& rng) {
  std::vector<long> options{0};
  if (0 < floor) options.clear();
  for (int t = 1; t < int(st.h.txns.size()); ++t) {
    long cts = commit_ts(st, t);
    if (cts >= floor && cts < below && cts > 0) options.push_back(cts);
  }
  if (options.empty()) return floor;  // floor is itself a commit timestamp (or 0)
  if (st.freshest_snapshots) return *std::max_element(options.begin(), options.end());
  return options[rng() % options.size()];
}

}  // namespace opsem_detail

// Applies one rule for the given session: begin when no transaction is live,
// otherwise the next instruction, otherwise commit. Returns `blocked` when
// commit/abort validation fails; the session can then never proceed.
inline StepOutcome step(RunState& st, int j, std::mt19937_64& rng) {
  using namespace opsem_detail;
  if (st.dead[j]) return StepOutcome::blocked;
  const Program& prog = *st.prog;

  if (st.live_txn[j] < 0) {
    if (st.next_body[j] >= int(prog.sessions[j].size())) return StepOutcome::no_rule;
    // begin
    const TxnBody& body = prog.sessions[j][st.next_body[j]];
    Transaction tx;
    tx.id = prog.session_ids[j] + "_t" + std::to_string(st.next_body[j] + 1);
    tx.iso = body.iso;
    tx.session = j;
    int pos = 0;
    for (const Transaction& other : st.h.txns)
      if (other.session == j) ++pos;
    tx.session_pos = pos;
    tx.committed = true;  // provisional; flipped on abort
    tx.events.push_back({EventKind::begin, {}, {}});
    st.h.txns.push_back(std::move(tx));
    int t = int(st.h.txns.size()) - 1;
    long tau = ++st.clock;
    long delta;
    if (body.iso == Iso::ser) {
      delta = max_commit_ts_below(st, tau);
    } else if (body.iso == Iso::si) {
      delta = choose_snapshot(st, snapshot_floor(st, j, t), tau, rng);
    } else {
      delta = choose_snapshot(st, snapshot_floor(st, j, t), tau, rng);
    }
    st.ts.push_back({tau});
    st.snap.push_back({delta});
    st.live_txn[j] = t;
    st.next_instr[j] = 0;
    return StepOutcome::ok;
  }

  const int t = st.live_txn[j];
  const TxnBody& body = prog.sessions[j][st.next_body[j]];
  if (st.next_instr[j] < int(body.instrs.size()) &&
      body.instrs[st.next_instr[j]].op == Instr::Op::local) {
    ++st.next_instr[j];  // no event, no timestamp
    return StepOutcome::ok;
  }
  const Iso iso = body.iso;
  long tau = ++st.clock;

  auto event_snapshot = [&](long at) -> long {
    if (iso == Iso::rc) return choose_snapshot(st, snapshot_floor(st, j, t), at, rng);
    return st.snap[t][0];  // SER and SI freeze the begin snapshot
  };

  if (st.next_instr[j] >= int(body.instrs.size())) {
    // commit
    long delta = event_snapshot(tau);
    st.h.txns[t].events.push_back({EventKind::commit, {}, {}});
    st.ts[t].push_back(tau);
    st.snap[t].push_back(delta);
    HistoryIndex x = analyze(st.h);
    if (!validate_commit(st, x, t, tau)) {
      st.h.txns[t].events.pop_back();
      st.ts[t].pop_back();
      st.snap[t].pop_back();
      --st.clock;
      st.dead[j] = 1;
      return StepOutcome::blocked;
    }
    st.live_txn[j] = -1;
    st.next_instr[j] = -1;
    ++st.next_body[j];
    return StepOutcome::ok;
  }

  const Instr& ins = body.instrs[st.next_instr[j]];
  if (ins.op == Instr::Op::abort_txn) {
    long delta = event_snapshot(tau);
    st.h.txns[t].events.push_back({EventKind::abort, {}, {}});
    st.ts[t].push_back(tau);
    st.snap[t].push_back(delta);
    st.h.txns[t].committed = false;
    HistoryIndex x = analyze(st.h);
    if (!validate_commit(st, x, t, tau)) {  // the abort rule validates too
      st.h.txns[t].events.pop_back();
      st.ts[t].pop_back();
      st.snap[t].pop_back();
      st.h.txns[t].committed = true;
      --st.clock;
      st.dead[j] = 1;
      return StepOutcome::blocked;
    }
    st.live_txn[j] = -1;
    st.next_instr[j] = -1;
    ++st.next_body[j];
    return StepOutcome::ok;
  }

  long delta = event_snapshot(tau);
  Event ev;
  switch (ins.op) {
    case Instr::Op::select: ev.kind = EventKind::select; ev.where = ins.where; break;
    case Instr::Op::insert: ev.kind = EventKind::insert; ev.rows = ins.rows; break;
    case Instr::Op::del: ev.kind = EventKind::del; ev.where = ins.where; break;
    case Instr::Op::update: ev.kind = EventKind::update; ev.where = ins.where; ev.rows = ins.rows; break;
    case Instr::Op::abort_txn:
    case Instr::Op::local: break;  // handled above
  }
  const bool reading = is_read_kind(ev.kind);
  st.h.txns[t].events.push_back(std::move(ev));
  st.ts[t].push_back(tau);
  st.snap[t].push_back(delta);
  if (reading) {
    HistoryIndex x = analyze(st.h);
    int pos = int(st.h.txns[t].events.size()) - 1;
    for (int k = 0; k < int(st.h.keys.size()); ++k) {
      if (local_write(st, t, k, x)) continue;  // local write shadows the snapshot
      int src = read_from(st, k, delta, x, nullptr);
      if (src < 0) continue;  // cannot happen: init always qualifies
      WrEdge e;
      e.key = k;
      e.from = x.ref(src);
      e.to = {t, pos};
      st.h.wr.push_back(e);
    }
  }
  ++st.next_instr[j];
  return StepOutcome::ok;
}

inline RunState make_run_state(const Program& p) {
  RunState st;
  st.prog = &p;
  st.h.keys = p.keys;
  st.h.session_ids = p.session_ids;
  st.h.txns.push_back(make_init_txn(p.keys, p.initial));
  st.ts.push_back({0, 0, 0});
  st.snap.push_back({0, 0, 0});
  const int ns = int(p.sessions.size());
  st.next_body.assign(ns, 0);
  st.next_instr.assign(ns, -1);
  st.live_txn.assign(ns, -1);
  st.dead.assign(ns, 0);
  return st;
}

// Drives the semantics with a seeded scheduler until every session finishes.
// Random schedules lean towards finishing the transaction they started, which
// keeps most commit validations clean; a blocked schedule is retried with
// perturbed seeds, and the final attempt runs the sessions serially, which
// never blocks. Only a degenerate program can yield nullopt.
inline std::optional<History> run_to_history(const Program& p, uint64_t seed,
                                             RunState* final_state = nullptr) {
  const uint64_t attempts = 32;
  for (uint64_t attempt = 0; attempt < attempts; ++attempt) {
    const bool serial = attempt + 1 == attempts;
    std::mt19937_64 rng(seed + attempt * 0x9e3779b97f4a7c15ull);
    RunState st = make_run_state(p);
    // Serial scheduling with fresh snapshots validates unconditionally, so
    // the last attempt always completes.
    st.freshest_snapshots = serial;
    for (;;) {
      std::vector<int> enabled, live;
      for (int j = 0; j < int(p.sessions.size()); ++j)
        if (!st.dead[j] && !st.session_done(j)) {
          enabled.push_back(j);
          if (st.live_txn[j] >= 0) live.push_back(j);
        }
      if (enabled.empty()) break;
      int j;
      if (serial) {
        j = live.empty() ? enabled.front() : live.front();
      } else if (!live.empty() && (rng() % 5) < 3) {
        j = live[rng() % live.size()];
      } else {
        j = enabled[rng() % enabled.size()];
      }
      step(st, j, rng);
    }
    if (st.finished()) {
      std::vector<int> old_to_new = canonicalize_transactions(st.h);
      std::vector<std::vector<long>> ts(st.ts.size()), snap(st.snap.size());
      for (size_t t = 0; t < st.ts.size(); ++t) {
        ts[old_to_new[t]] = std::move(st.ts[t]);
        snap[old_to_new[t]] = std::move(st.snap[t]);
      }
      st.ts = std::move(ts);
      st.snap = std::move(snap);
      if (final_state) *final_state = st;
      return st.h;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Random programs

struct ProgramParams {
  int sessions = 3;
  int txns_per_session = 3;
  int keys = 3;
  int min_ops = 1;
  int max_ops = 3;
  // instruction weights: select / insert / update / delete / abort
  int w_select = 4, w_insert = 3, w_update = 2, w_delete = 1, w_abort = 0;
  std::vector<std::pair<Iso, int>> iso_mix{{Iso::rc, 1}};  // SER/SI/RC only
};

namespace opsem_detail {

inline Predicate random_predicate(const std::vector<std::string>& keys, std::mt19937_64& rng) {
  auto rnd_cmp = [&]() -> Predicate {
    int64_t c = int64_t(rng() % 9) - 3;
    switch (rng() % 6) {
      case 0: return Predicate::lt(c);
      case 1: return Predicate::le(c);
      case 2: return Predicate::eq(c);
      case 3: return Predicate::ge(c);
      case 4: return Predicate::gt(c);
      default: return Predicate::ne(c);
    }
  };
  switch (rng() % 8) {
    case 0: return Predicate::lit(true);
    case 1: return Predicate::key_is(keys[rng() % keys.size()]);
    case 2: return Predicate::conj(Predicate::key_is(keys[rng() % keys.size()]), rnd_cmp());
    case 3: return Predicate::disj(rnd_cmp(), rnd_cmp());
    case 4: return Predicate::negate(rnd_cmp());
    default: return rnd_cmp();
  }
}

}  // namespace opsem_detail

// Deterministic in the seed. Bodies respect the one-writer-per-key shape: an
// insert never follows an update/delete and never repeats a key, so no
// transaction modifies a key twice.
inline Program random_program(const ProgramParams& pp, uint64_t seed) {
  if (pp.sessions < 1 || pp.txns_per_session < 1 || pp.keys < 1)
    throw std::invalid_argument("random_program: all counts must be >= 1");
  for (auto& [iso, w] : pp.iso_mix)
    if (iso == Iso::pc || iso == Iso::ra)
      throw std::invalid_argument("random_program: generator covers SER, SI and RC only");

  std::mt19937_64 rng(seed);
  Program p;
  for (int k = 0; k < pp.keys; ++k) {
    p.keys.push_back("x" + std::to_string(k + 1));
    p.initial.push_back(RowValue::present(0));
  }
  int total_w = 0;
  for (auto& [iso, w] : pp.iso_mix) total_w += w;
  if (total_w <= 0) throw std::invalid_argument("random_program: empty isolation mix");

  for (int s = 0; s < pp.sessions; ++s) {
    p.session_ids.push_back("s" + std::to_string(s + 1));
    std::vector<TxnBody> bodies;
    for (int b = 0; b < pp.txns_per_session; ++b) {
      TxnBody body;
      int roll = int(rng() % total_w);
      for (auto& [iso, w] : pp.iso_mix) {
        if (roll < w) {
          body.iso = iso;
          break;
        }
        roll -= w;
      }
      int ops = pp.min_ops + int(rng() % (pp.max_ops - pp.min_ops + 1));
      bool wrote_ranged = false;  // saw an update/delete already
      std::vector<char> inserted(pp.keys, 0);
      for (int i = 0; i < ops; ++i) {
        int w_ins = wrote_ranged ? 0 : pp.w_insert;
        int total = pp.w_select + w_ins + pp.w_update + pp.w_delete + pp.w_abort;
        int pickv = int(rng() % total);
        Instr ins;
        if (pickv < pp.w_select) {
          ins.op = Instr::Op::select;
          ins.where = opsem_detail::random_predicate(p.keys, rng);
        } else if (pickv < pp.w_select + w_ins) {
          ins.op = Instr::Op::insert;
          int count = 1 + int(rng() % 2);
          for (int c = 0; c < count; ++c) {
            int k = int(rng() % pp.keys);
            if (inserted[k]) continue;
            inserted[k] = 1;
            ins.rows.push_back({k, RowValue::present(int64_t(rng() % 9) - 3)});
          }
          if (ins.rows.empty()) {
            ins.op = Instr::Op::select;
            ins.where = opsem_detail::random_predicate(p.keys, rng);
          } else {
            std::sort(ins.rows.begin(), ins.rows.end(),
                      [](auto& a, auto& b) { return a.first < b.first; });
          }
        } else if (pickv < pp.w_select + w_ins + pp.w_update) {
          ins.op = Instr::Op::update;
          ins.where = opsem_detail::random_predicate(p.keys, rng);
          for (int k = 0; k < pp.keys; ++k)  // total set map: safe for any match
            ins.rows.push_back({k, RowValue::present(int64_t(rng() % 9) - 3)});
          wrote_ranged = true;
        } else if (pickv < pp.w_select + w_ins + pp.w_update + pp.w_delete) {
          ins.op = Instr::Op::del;
          ins.where = opsem_detail::random_predicate(p.keys, rng);
          wrote_ranged = true;
        } else {
          ins.op = Instr::Op::abort_txn;
          body.instrs.push_back(std::move(ins));
          break;  // abort ends the body
        }
        body.instrs.push_back(std::move(ins));
      }
      bodies.push_back(std::move(body));
    }
    p.sessions.push_back(std::move(bodies));
  }
  return p;
}

}  // namespace isocheck
