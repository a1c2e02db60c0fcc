#pragma once

// Shared test scaffolding: a fluent history builder, the worked examples used
// across suites, randomized history/program corpora, a minimal JSON schema
// checker, and a helper to drive the CLI binary.

#include <cstdio>
#include <random>
#include <string>

#include "isocheck/isocheck.hpp"

namespace test_support {

using namespace isocheck;

// ---------------------------------------------------------------------------
// History builder

class HB {
 public:
  HB(std::vector<std::string> keys, std::vector<std::pair<std::string, RowValue>> initial) {
    h_.keys = std::move(keys);
    std::vector<RowValue> init(h_.keys.size(), RowValue::present(0));
    for (auto& [k, v] : initial) init[h_.key_index(k)] = v;
    h_.txns.push_back(make_init_txn(h_.keys, init));
  }

  HB& session(const std::string& id) {
    close_txn();
    h_.session_ids.push_back(id);
    session_ = int(h_.session_ids.size()) - 1;
    pos_ = 0;
    return *this;
  }

  HB& txn(const std::string& id, Iso iso, bool committed = true) {
    close_txn();
    Transaction t;
    t.id = id;
    t.iso = iso;
    t.session = session_;
    t.session_pos = pos_++;
    t.committed = committed;
    t.events.push_back({EventKind::begin, {}, {}});
    h_.txns.push_back(std::move(t));
    open_ = true;
    return *this;
  }

  HB& select(Predicate p) {
    Event e;
    e.kind = EventKind::select;
    e.where = std::move(p);
    h_.txns.back().events.push_back(std::move(e));
    return *this;
  }
  HB& insert(std::vector<std::pair<std::string, int64_t>> rows) {
    Event e;
    e.kind = EventKind::insert;
    for (auto& [k, v] : rows) e.rows.push_back({h_.key_index(k), RowValue::present(v)});
    std::sort(e.rows.begin(), e.rows.end(), [](auto& a, auto& b) { return a.first < b.first; });
    h_.txns.back().events.push_back(std::move(e));
    return *this;
  }
  HB& del(Predicate p) {
    Event e;
    e.kind = EventKind::del;
    e.where = std::move(p);
    h_.txns.back().events.push_back(std::move(e));
    return *this;
  }
  HB& update(Predicate p, std::vector<std::pair<std::string, int64_t>> set) {
    Event e;
    e.kind = EventKind::update;
    e.where = std::move(p);
    for (auto& [k, v] : set) e.rows.push_back({h_.key_index(k), RowValue::present(v)});
    std::sort(e.rows.begin(), e.rows.end(), [](auto& a, auto& b) { return a.first < b.first; });
    h_.txns.back().events.push_back(std::move(e));
    return *this;
  }

  // Event positions are raw program-order indices: begin is 0, ops follow.
  HB& wr(const std::string& key, const std::string& from_txn, int from_pos,
         const std::string& to_txn, int to_pos) {
    pending_wr_.push_back({key, from_txn, from_pos, to_txn, to_pos});
    return *this;
  }

  History build() {
    close_txn();
    for (auto& [key, ft, fp, tt, tp] : pending_wr_) {
      WrEdge e;
      e.key = h_.key_index(key);
      e.from = {h_.txn_index(ft), fp};
      e.to = {h_.txn_index(tt), tp};
      h_.wr.push_back(e);
    }
    h_.canonicalize();
    return h_;
  }

 private:
  void close_txn() {
    if (!open_) return;
    Transaction& t = h_.txns.back();
    t.events.push_back({t.committed ? EventKind::commit : EventKind::abort, {}, {}});
    open_ = false;
  }

  History h_;
  int session_ = -1;
  int pos_ = 0;
  bool open_ = false;
  std::vector<std::tuple<std::string, std::string, int, std::string, int>> pending_wr_;
};

inline History with_uniform_level(History h, Iso iso) {
  for (size_t i = 1; i < h.txns.size(); ++i) h.txns[i].iso = iso;
  return h;
}

// ---------------------------------------------------------------------------
// The worked examples

// Two keys holding 0 and 1; one transaction deletes the non-positive row,
// the other bumps the row at least 1 down to -2.
inline History full_update_delete() {
  return HB({"x1", "x2"}, {{"x1", RowValue::present(0)}, {"x2", RowValue::present(1)}})
      .session("s1")
      .txn("t1", Iso::rc)
      .update(Predicate::ge(1), {{"x1", -2}, {"x2", -2}})
      .session("s2")
      .txn("t2", Iso::rc)
      .del(Predicate::le(0))
      .wr("x1", "init", 1, "t2", 1)
      .wr("x2", "init", 1, "t2", 1)
      .wr("x2", "init", 1, "t1", 1)
      .wr("x1", "t2", 1, "t1", 1)
      .build();
}

// The client variant: each query only observes the row it affected.
inline History client_update_delete(Iso t1 = Iso::ser, Iso t2 = Iso::ser) {
  return HB({"x1", "x2"}, {{"x1", RowValue::present(0)}, {"x2", RowValue::present(1)}})
      .session("s1")
      .txn("t1", t1)
      .update(Predicate::ge(1), {{"x1", -2}, {"x2", -2}})
      .session("s2")
      .txn("t2", t2)
      .del(Predicate::le(0))
      .wr("x2", "init", 1, "t1", 1)
      .wr("x1", "init", 1, "t2", 1)
      .build();
}

// Extension where the delete observes the update's -2: not a witness.
inline History bad_extension(Iso t1 = Iso::ser, Iso t2 = Iso::ser) {
  return HB({"x1", "x2"}, {{"x1", RowValue::present(0)}, {"x2", RowValue::present(1)}})
      .session("s1")
      .txn("t1", t1)
      .update(Predicate::ge(1), {{"x1", -2}, {"x2", -2}})
      .session("s2")
      .txn("t2", t2)
      .del(Predicate::le(0))
      .wr("x2", "init", 1, "t1", 1)
      .wr("x1", "init", 1, "t1", 1)
      .wr("x1", "init", 1, "t2", 1)
      .wr("x2", "t1", 1, "t2", 1)
      .build();
}

// Extension where both queries read the untouched rows from init: a witness.
inline History witness_extension(Iso t1 = Iso::ser, Iso t2 = Iso::ser) {
  return HB({"x1", "x2"}, {{"x1", RowValue::present(0)}, {"x2", RowValue::present(1)}})
      .session("s1")
      .txn("t1", t1)
      .update(Predicate::ge(1), {{"x1", -2}, {"x2", -2}})
      .session("s2")
      .txn("t2", t2)
      .del(Predicate::le(0))
      .wr("x2", "init", 1, "t1", 1)
      .wr("x1", "init", 1, "t1", 1)
      .wr("x1", "init", 1, "t2", 1)
      .wr("x2", "init", 1, "t2", 1)
      .build();
}

// Five transactions over four keys; t3 runs under PC and t5 under SER, and
// two (read, key) pairs are unobserved.
inline History search_client() {
  return HB({"x1", "x2", "x3", "x4"},
            {{"x1", RowValue::present(0)},
             {"x2", RowValue::present(0)},
             {"x3", RowValue::present(0)},
             {"x4", RowValue::present(0)}})
      .session("s1")
      .txn("t1", Iso::rc)
      .insert({{"x2", -1}, {"x3", 1}})
      .txn("t2", Iso::rc)
      .insert({{"x1", 2}, {"x4", -2}})
      .txn("t3", Iso::pc)
      .select(Predicate::lt(0))
      .insert({{"x2", -3}})
      .session("s2")
      .txn("t4", Iso::rc)
      .insert({{"x4", 4}})
      .txn("t5", Iso::ser)
      .select(Predicate::ge(0))
      .insert({{"x1", 5}, {"x3", -5}})
      .wr("x2", "t1", 1, "t3", 1)
      .wr("x4", "t2", 1, "t3", 1)
      .wr("x3", "t5", 2, "t3", 1)
      .wr("x1", "init", 1, "t5", 1)
      .wr("x3", "t1", 1, "t5", 1)
      .wr("x4", "t4", 1, "t5", 1)
      .build();
}

// The single conflict-free extension of search_client: t5 additionally reads x2 from
// t1, while (t3, x1) stays unobserved.
inline History search_conflict_free() {
  History h = search_client();
  WrEdge e;
  e.key = h.key_index("x2");
  e.from = {h.txn_index("t1"), 1};
  e.to = {h.txn_index("t5"), 1};
  h.wr.push_back(e);
  h.canonicalize();
  return h;
}

// ---------------------------------------------------------------------------
// Randomized histories

struct RandomHistoryParams {
  int min_txns = 1, max_txns = 5;  // user transactions
  int max_sessions = 3;
  int keys = 3;
  int max_ops = 2;
  double wr_prob = 0.75;  // chance an unread pair receives an edge
  bool full = false;
  int abort_percent = 5;
  std::vector<Iso> levels{Iso::ser, Iso::si, Iso::pc, Iso::ra, Iso::rc};
};

inline Predicate random_pred(const std::vector<std::string>& keys, std::mt19937_64& rng) {
  auto cmp = [&]() -> Predicate {
    int64_t c = int64_t(rng() % 7) - 3;
    switch (rng() % 6) {
      case 0: return Predicate::lt(c);
      case 1: return Predicate::le(c);
      case 2: return Predicate::eq(c);
      case 3: return Predicate::ge(c);
      case 4: return Predicate::gt(c);
      default: return Predicate::ne(c);
    }
  };
  switch (rng() % 7) {
    case 0: return Predicate::lit(true);
    case 1: return Predicate::lit(false);
    case 2: return Predicate::key_is(keys[rng() % keys.size()]);
    case 3: return Predicate::conj(Predicate::key_is(keys[rng() % keys.size()]), cmp());
    case 4: return Predicate::disj(cmp(), cmp());
    default: return cmp();
  }
}

// Random valid histories. Transactions get random bodies; wr edges are drawn
// backwards along a random interleaving so that so/wr stays acyclic and
// every edge lands on a defined value. With `full` set every non-local pair
// is read, producing a full history.
inline History random_history(const RandomHistoryParams& p, std::mt19937_64& rng) {
  std::vector<std::string> keys;
  for (int k = 0; k < p.keys; ++k) keys.push_back("k" + std::to_string(k + 1));

  const int n_user = p.min_txns + int(rng() % (p.max_txns - p.min_txns + 1));
  const int n_sessions = 1 + int(rng() % p.max_sessions);

  HB hb2(keys, {});
  std::vector<std::vector<int>> by_session(n_sessions);
  for (int t = 0; t < n_user; ++t) by_session[rng() % n_sessions].push_back(t);

  struct Op {
    int kind;  // 0 select, 1 insert, 2 update, 3 delete
    Predicate where;
    std::vector<std::pair<std::string, int64_t>> rows;
  };
  std::vector<std::vector<Op>> bodies(n_user);
  std::vector<bool> aborted(n_user, false);
  for (int t = 0; t < n_user; ++t) {
    aborted[t] = int(rng() % 100) < p.abort_percent;
    int ops = 1 + int(rng() % p.max_ops);
    bool ranged_write = false;
    std::vector<char> inserted(p.keys, 0);
    for (int i = 0; i < ops; ++i) {
      Op op;
      int roll = int(rng() % 8);
      if (roll < 3) {
        op.kind = 0;
        op.where = random_pred(keys, rng);
      } else if (roll < 5 && !ranged_write) {
        op.kind = 1;
        int k = int(rng() % p.keys);
        if (inserted[k]) {
          op.kind = 0;
          op.where = random_pred(keys, rng);
        } else {
          inserted[k] = 1;
          op.rows.push_back({keys[k], int64_t(rng() % 7) - 3});
        }
      } else if (roll < 7) {
        op.kind = 2;
        op.where = random_pred(keys, rng);
        for (int k = 0; k < p.keys; ++k) op.rows.push_back({keys[k], int64_t(rng() % 7) - 3});
        ranged_write = true;
      } else {
        op.kind = 3;
        op.where = random_pred(keys, rng);
        ranged_write = true;
      }
      bodies[t].push_back(std::move(op));
    }
  }

  int sidx = 0;
  for (const auto& txns : by_session) {
    hb2.session("s" + std::to_string(++sidx));
    for (int t : txns) {
      hb2.txn("t" + std::to_string(t + 1), p.levels[rng() % p.levels.size()], !aborted[t]);
      for (const Op& op : bodies[t]) {
        if (op.kind == 0) hb2.select(op.where);
        else if (op.kind == 1) hb2.insert(op.rows);
        else if (op.kind == 2) hb2.update(op.where, op.rows);
        else hb2.del(op.where);
      }
    }
  }
  History h = hb2.build();

  // Random interleaving respecting session order; init first.
  std::vector<int> order{0};
  {
    std::vector<int> next_pos(n_sessions + 1, 0);
    std::vector<std::vector<int>> per_session(n_sessions);
    for (int t = 1; t < int(h.txns.size()); ++t)
      per_session[h.txns[t].session].push_back(t);
    for (auto& v : per_session)
      std::sort(v.begin(), v.end(),
                [&](int a, int b) { return h.txns[a].session_pos < h.txns[b].session_pos; });
    std::vector<int> cursor(n_sessions, 0);
    int remaining = int(h.txns.size()) - 1;
    while (remaining > 0) {
      int s = int(rng() % n_sessions);
      if (cursor[s] >= int(per_session[s].size())) continue;
      order.push_back(per_session[s][cursor[s]++]);
      --remaining;
    }
  }
  std::vector<int> rank(h.txns.size(), 0);
  for (int i = 0; i < int(order.size()); ++i) rank[order[i]] = i;

  // Draw wr edges backwards along the interleaving, recomputing values
  // incrementally so every candidate is a defined write.
  for (int step = 1; step < int(order.size()); ++step) {
    const int t = order[step];
    HistoryIndex x = analyze(h);  // values of earlier transactions are stable
    for (int pos = 0; pos < int(h.txns[t].events.size()); ++pos) {
      if (!is_read_kind(h.txns[t].events[pos].kind)) continue;
      for (int k = 0; k < p.keys; ++k) {
        if (x.reads_local(x.ev_base[t] + pos, k)) continue;
        if (!p.full && (rng() % 1000) >= uint64_t(p.wr_prob * 1000)) continue;
        std::vector<EventRef> cands;
        for (int u : order) {
          if (rank[u] >= step) break;
          if (!h.txns[u].committed) continue;
          for (int q = 0; q < int(h.txns[u].events.size()); ++q)
            if (is_write_kind(h.txns[u].events[q].kind) &&
                !x.value(x.ev_base[u] + q, k).is_undefined())
              cands.push_back({u, q});
        }
        if (cands.empty()) continue;
        WrEdge e;
        e.key = k;
        e.from = cands[rng() % cands.size()];
        e.to = {t, pos};
        h.wr.push_back(e);
        // Only delete/update targets gain a value from a new edge; selects
        // never do, so the index stays accurate for them.
        if (h.txns[t].events[pos].kind != EventKind::select) x = analyze(h);
      }
    }
  }
  h.canonicalize();
  return h;
}

// ---------------------------------------------------------------------------
// Minimal JSON schema checker (type / enum / properties / required / items)

inline bool schema_valid(const ordered_json& schema, const ordered_json& doc, std::string& err) {
  if (schema.contains("type")) {
    const std::string ty = schema["type"].get<std::string>();
    bool ok = (ty == "object" && doc.is_object()) || (ty == "array" && doc.is_array()) ||
              (ty == "string" && doc.is_string()) || (ty == "boolean" && doc.is_boolean()) ||
              (ty == "integer" && doc.is_number_integer()) || (ty == "number" && doc.is_number());
    if (!ok) {
      err = "expected type " + ty + ", got " + std::string(doc.type_name());
      return false;
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& v : schema["enum"]) ok |= (v == doc);
    if (!ok) {
      err = "value " + doc.dump() + " not in enum";
      return false;
    }
  }
  if (schema.contains("required"))
    for (const auto& r : schema["required"])
      if (!doc.contains(r.get<std::string>())) {
        err = "missing required member '" + r.get<std::string>() + "'";
        return false;
      }
  if (schema.contains("properties") && doc.is_object())
    for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it)
      if (doc.contains(it.key()))
        if (!schema_valid(it.value(), doc[it.key()], err)) {
          err = "in '" + it.key() + "': " + err;
          return false;
        }
  if (schema.contains("items") && doc.is_array())
    for (const auto& item : doc)
      if (!schema_valid(schema["items"], item, err)) {
        err = "in array item: " + err;
        return false;
      }
  return true;
}

// ---------------------------------------------------------------------------
// CLI driver

struct CliResult {
  int exit_code = -1;
  std::string out;
};

inline CliResult run_cli(const std::string& args) {
  CliResult r;
  std::string cmd = std::string(ISOCHECK_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string data_path(const std::string& name) {
  return std::string(ISOCHECK_TEST_DATA_DIR) + "/" + name;
}

}  // namespace test_support
