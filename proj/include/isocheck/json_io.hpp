#pragma once

// JSON ingestion and serialization for histories, programs and check
// reports. Serialization is canonical (declared key order, declared session
// order, sorted wr edges, predicate trees emitted exactly as stored), so
// parsing a serialized document and serializing it again reproduces the
// bytes, and output files hash stably.

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "isocheck/checker.hpp"
#include "isocheck/opsem.hpp"
#include "isocheck/oracle.hpp"

namespace isocheck {

using ordered_json = nlohmann::ordered_json;

struct ParseResult {
  std::optional<History> history;
  std::optional<Program> program;
  std::string kind;  // "history" or "program"
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

namespace io_detail {

inline std::string line_col(const std::string& text, size_t byte) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// ---- predicates ----

inline bool parse_predicate(const ordered_json& j, Predicate& out, std::string& err);

inline bool parse_predicate_node(const ordered_json& j, Predicate& out, std::string& err) {
  if (j.is_boolean()) {
    out = Predicate::lit(j.get<bool>());
    return true;
  }
  if (!j.is_object()) {
    err = "predicate must be true, false or an object";
    return false;
  }
  if (j.contains("cmp")) {
    if (!j.contains("value") || !j["value"].is_number_integer()) {
      err = "cmp predicate needs an integer 'value'";
      return false;
    }
    const std::string op = j["cmp"].get<std::string>();
    const int64_t v = j["value"].get<int64_t>();
    if (op == "<") out = Predicate::lt(v);
    else if (op == "<=") out = Predicate::le(v);
    else if (op == "=") out = Predicate::eq(v);
    else if (op == ">=") out = Predicate::ge(v);
    else if (op == ">") out = Predicate::gt(v);
    else if (op == "!=") out = Predicate::ne(v);
    else {
      err = "unknown comparison operator '" + op + "'";
      return false;
    }
    return true;
  }
  if (j.contains("key_eq")) {
    if (!j["key_eq"].is_string()) {
      err = "key_eq needs a key name";
      return false;
    }
    out = Predicate::key_is(j["key_eq"].get<std::string>());
    return true;
  }
  if (j.contains("and") || j.contains("or")) {
    const bool is_and = j.contains("and");
    const ordered_json& arr = is_and ? j["and"] : j["or"];
    if (!arr.is_array() || arr.size() < 2) {
      err = "and/or need at least two operands";
      return false;
    }
    Predicate acc;
    if (!parse_predicate(arr[0], acc, err)) return false;
    for (size_t i = 1; i < arr.size(); ++i) {
      Predicate rhs;
      if (!parse_predicate(arr[i], rhs, err)) return false;
      acc = is_and ? Predicate::conj(acc, rhs) : Predicate::disj(acc, rhs);
    }
    out = acc;
    return true;
  }
  if (j.contains("not")) {
    Predicate inner;
    if (!parse_predicate(j["not"], inner, err)) return false;
    out = Predicate::negate(inner);
    return true;
  }
  err = "unrecognized predicate object";
  return false;
}

inline bool parse_predicate(const ordered_json& j, Predicate& out, std::string& err) {
  return parse_predicate_node(j, out, err);
}

inline ordered_json predicate_json_node(const Predicate& p, int i) {
  const Predicate::Node& n = p.nodes[i];
  using Op = Predicate::Op;
  switch (n.op) {
    case Op::lit_true: return true;
    case Op::lit_false: return false;
    case Op::cmp_lt: return {{"cmp", "<"}, {"value", n.rhs}};
    case Op::cmp_le: return {{"cmp", "<="}, {"value", n.rhs}};
    case Op::cmp_eq: return {{"cmp", "="}, {"value", n.rhs}};
    case Op::cmp_ge: return {{"cmp", ">="}, {"value", n.rhs}};
    case Op::cmp_gt: return {{"cmp", ">"}, {"value", n.rhs}};
    case Op::cmp_ne: return {{"cmp", "!="}, {"value", n.rhs}};
    case Op::key_eq: return {{"key_eq", n.key}};
    case Op::n_and: {
      ordered_json arr = ordered_json::array();
      arr.push_back(predicate_json_node(p, n.a));
      arr.push_back(predicate_json_node(p, n.b));
      return {{"and", arr}};
    }
    case Op::n_or: {
      ordered_json arr = ordered_json::array();
      arr.push_back(predicate_json_node(p, n.a));
      arr.push_back(predicate_json_node(p, n.b));
      return {{"or", arr}};
    }
    case Op::n_not: {
      ordered_json o;
      o["not"] = predicate_json_node(p, n.a);
      return o;
    }
  }
  return false;
}

inline ordered_json predicate_to_json(const Predicate& p) {
  if (p.empty()) return true;
  return predicate_json_node(p, p.root);
}

// ---- shared pieces ----

inline bool parse_rows(const ordered_json& j, const std::vector<std::string>& keys, bool allow_absent,
                       std::vector<std::pair<int, RowValue>>& rows, std::string& err) {
  if (!j.is_object()) {
    err = "row map must be an object";
    return false;
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    int k = -1;
    for (int i = 0; i < int(keys.size()); ++i)
      if (keys[i] == it.key()) k = i;
    if (k < 0) {
      err = "unknown key '" + it.key() + "'";
      return false;
    }
    if (it.value().is_number_integer()) {
      rows.push_back({k, RowValue::present(it.value().get<int64_t>())});
    } else if (allow_absent && it.value().is_string() && it.value().get<std::string>() == "absent") {
      rows.push_back({k, RowValue::deleted()});
    } else {
      err = "value for key '" + it.key() + "' must be an integer" +
            (allow_absent ? " or \"absent\"" : "");
      return false;
    }
  }
  std::sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.first < b.first; });
  return true;
}

inline bool parse_event_ref(const std::string& s, const History& h, EventRef& out, std::string& err) {
  size_t colon = s.rfind(':');
  if (colon == std::string::npos) {
    err = "event id '" + s + "' must look like txn:pos";
    return false;
  }
  const std::string txn = s.substr(0, colon);
  int t = h.txn_index(txn);
  if (t < 0) {
    err = "event id '" + s + "' names an unknown transaction";
    return false;
  }
  int pos = -1;
  try {
    pos = std::stoi(s.substr(colon + 1));
  } catch (...) {
    err = "event id '" + s + "' has a malformed position";
    return false;
  }
  if (pos < 0 || pos >= int(h.txns[t].events.size())) {
    err = "event id '" + s + "' is out of range";
    return false;
  }
  out = {t, pos};
  return true;
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// History files

inline ParseResult parse_history_json(const ordered_json& doc) {
  using namespace io_detail;
  ParseResult res;
  auto fail = [&](const std::string& m) {
    res.errors.push_back(m);
    return res;
  };
  if (!doc.is_object() || !doc.contains("kind")) return fail("top level must be an object with 'kind'");
  res.kind = doc["kind"].is_string() ? doc["kind"].get<std::string>() : "";
  if (res.kind != "history") return fail("expected kind 'history'");
  if (!doc.contains("keys") || !doc["keys"].is_array() || doc["keys"].empty())
    return fail("'keys' must be a non-empty array");
  History h;
  for (const auto& k : doc["keys"]) {
    if (!k.is_string()) return fail("'keys' entries must be strings");
    h.keys.push_back(k.get<std::string>());
  }
  if (!doc.contains("initial_state") || !doc["initial_state"].is_object())
    return fail("'initial_state' must be an object");
  std::vector<RowValue> initial(h.keys.size(), RowValue::undefined());
  {
    std::vector<std::pair<int, RowValue>> rows;
    std::string err;
    if (!parse_rows(doc["initial_state"], h.keys, true, rows, err)) return fail("initial_state: " + err);
    for (auto& [k, v] : rows) initial[k] = v;
    for (int k = 0; k < int(h.keys.size()); ++k)
      if (initial[k].is_undefined())
        return fail("initial_state: key '" + h.keys[k] + "' missing (use an integer or \"absent\")");
  }
  h.txns.push_back(make_init_txn(h.keys, initial));

  if (!doc.contains("sessions") || !doc["sessions"].is_array())
    return fail("'sessions' must be an array");
  int session_idx = 0;
  for (const auto& sj : doc["sessions"]) {
    if (!sj.is_object() || !sj.contains("id") || !sj.contains("transactions"))
      return fail("each session needs 'id' and 'transactions'");
    h.session_ids.push_back(sj["id"].get<std::string>());
    int pos = 0;
    for (const auto& tj : sj["transactions"]) {
      Transaction t;
      t.session = session_idx;
      t.session_pos = pos++;
      if (!tj.contains("id") || !tj["id"].is_string()) return fail("transaction needs an 'id'");
      t.id = tj["id"].get<std::string>();
      auto iso = tj.contains("iso") && tj["iso"].is_string()
                     ? iso_from_string(tj["iso"].get<std::string>())
                     : std::nullopt;
      if (!iso) return fail("transaction '" + t.id + "': iso must be one of SER SI PC RA RC");
      t.iso = *iso;
      const std::string status =
          tj.contains("status") && tj["status"].is_string() ? tj["status"].get<std::string>() : "";
      if (status != "committed" && status != "aborted")
        return fail("transaction '" + t.id + "': status must be committed or aborted");
      t.committed = status == "committed";
      if (!tj.contains("events") || !tj["events"].is_array())
        return fail("transaction '" + t.id + "' needs an 'events' array");
      for (const auto& ej : tj["events"]) {
        if (!ej.is_object() || !ej.contains("op"))
          return fail("transaction '" + t.id + "': each event needs an 'op'");
        const std::string op = ej["op"].get<std::string>();
        Event e;
        std::string err;
        if (op == "begin") {
          e.kind = EventKind::begin;
        } else if (op == "commit") {
          e.kind = EventKind::commit;
        } else if (op == "abort") {
          e.kind = EventKind::abort;
        } else if (op == "select" || op == "delete") {
          e.kind = op == "select" ? EventKind::select : EventKind::del;
          if (!ej.contains("where") || !parse_predicate(ej["where"], e.where, err))
            return fail("transaction '" + t.id + "': " + op + " needs a 'where' (" + err + ")");
        } else if (op == "insert") {
          e.kind = EventKind::insert;
          if (!ej.contains("rows") || !parse_rows(ej["rows"], h.keys, false, e.rows, err))
            return fail("transaction '" + t.id + "': insert rows: " + err);
        } else if (op == "update") {
          e.kind = EventKind::update;
          if (!ej.contains("where") || !parse_predicate(ej["where"], e.where, err))
            return fail("transaction '" + t.id + "': update needs a 'where' (" + err + ")");
          if (!ej.contains("set") || !parse_rows(ej["set"], h.keys, false, e.rows, err))
            return fail("transaction '" + t.id + "': update set: " + err);
        } else {
          return fail("transaction '" + t.id + "': unknown op '" + op + "'");
        }
        t.events.push_back(std::move(e));
      }
      h.txns.push_back(std::move(t));
    }
    ++session_idx;
  }

  if (doc.contains("wr")) {
    if (!doc["wr"].is_array()) return fail("'wr' must be an array");
    for (const auto& ej : doc["wr"]) {
      if (!ej.is_object() || !ej.contains("key") || !ej.contains("from_event") ||
          !ej.contains("to_event"))
        return fail("each wr entry needs key, from_event, to_event");
      WrEdge e;
      e.key = h.key_index(ej["key"].get<std::string>());
      if (e.key < 0)
        return fail("wr entry references unknown key '" + ej["key"].get<std::string>() + "'");
      std::string err;
      if (!parse_event_ref(ej["from_event"].get<std::string>(), h, e.from, err))
        return fail("wr: " + err);
      if (!parse_event_ref(ej["to_event"].get<std::string>(), h, e.to, err))
        return fail("wr: " + err);
      h.wr.push_back(e);
    }
  }
  h.canonicalize();
  res.history = std::move(h);
  return res;
}

inline ordered_json history_to_json(const History& h) {
  using namespace io_detail;
  ordered_json doc;
  doc["kind"] = "history";
  doc["keys"] = h.keys;
  ordered_json init = ordered_json::object();
  for (const auto& [k, v] : h.txns[0].events[1].rows)
    init[h.keys[k]] = v.is_deleted() ? ordered_json("absent") : ordered_json(v.value);
  doc["initial_state"] = init;
  ordered_json sessions = ordered_json::array();
  for (int s = 0; s < int(h.session_ids.size()); ++s) {
    ordered_json sj;
    sj["id"] = h.session_ids[s];
    ordered_json txns = ordered_json::array();
    for (const Transaction& t : h.txns) {
      if (t.session != s) continue;
      ordered_json tj;
      tj["id"] = t.id;
      tj["iso"] = to_string(t.iso);
      tj["status"] = t.committed ? "committed" : "aborted";
      ordered_json evs = ordered_json::array();
      for (const Event& e : t.events) {
        ordered_json ej;
        switch (e.kind) {
          case EventKind::begin: ej["op"] = "begin"; break;
          case EventKind::commit: ej["op"] = "commit"; break;
          case EventKind::abort: ej["op"] = "abort"; break;
          case EventKind::select:
            ej["op"] = "select";
            ej["where"] = predicate_to_json(e.where);
            break;
          case EventKind::del:
            ej["op"] = "delete";
            ej["where"] = predicate_to_json(e.where);
            break;
          case EventKind::insert: {
            ej["op"] = "insert";
            ordered_json rows = ordered_json::object();
            for (const auto& [k, v] : e.rows)
              rows[h.keys[k]] = v.is_deleted() ? ordered_json("absent") : ordered_json(v.value);
            ej["rows"] = rows;
            break;
          }
          case EventKind::update: {
            ej["op"] = "update";
            ej["where"] = predicate_to_json(e.where);
            ordered_json rows = ordered_json::object();
            for (const auto& [k, v] : e.rows) rows[h.keys[k]] = v.value;
            ej["set"] = rows;
            break;
          }
        }
        evs.push_back(std::move(ej));
      }
      tj["events"] = std::move(evs);
      txns.push_back(std::move(tj));
    }
    sj["transactions"] = std::move(txns);
    sessions.push_back(std::move(sj));
  }
  doc["sessions"] = std::move(sessions);
  ordered_json wr = ordered_json::array();
  std::vector<WrEdge> edges = h.wr;
  std::sort(edges.begin(), edges.end());
  for (const WrEdge& e : edges) {
    ordered_json ej;
    ej["key"] = h.keys[e.key];
    ej["from_event"] = h.event_label(e.from);
    ej["to_event"] = h.event_label(e.to);
    wr.push_back(std::move(ej));
  }
  doc["wr"] = std::move(wr);
  return doc;
}

// ---------------------------------------------------------------------------
// Program files (same container, distinct kind tag)

inline ordered_json program_to_json(const Program& p) {
  using namespace io_detail;
  ordered_json doc;
  doc["kind"] = "program";
  doc["keys"] = p.keys;
  ordered_json init = ordered_json::object();
  for (int k = 0; k < int(p.keys.size()); ++k)
    init[p.keys[k]] =
        p.initial[k].is_deleted() ? ordered_json("absent") : ordered_json(p.initial[k].value);
  doc["initial_state"] = init;
  ordered_json sessions = ordered_json::array();
  for (int s = 0; s < int(p.sessions.size()); ++s) {
    ordered_json sj;
    sj["id"] = p.session_ids[s];
    ordered_json txns = ordered_json::array();
    for (const TxnBody& b : p.sessions[s]) {
      ordered_json tj;
      tj["iso"] = to_string(b.iso);
      ordered_json instrs = ordered_json::array();
      for (const Instr& ins : b.instrs) {
        ordered_json ij;
        switch (ins.op) {
          case Instr::Op::select:
            ij["op"] = "select";
            ij["where"] = predicate_to_json(ins.where);
            break;
          case Instr::Op::del:
            ij["op"] = "delete";
            ij["where"] = predicate_to_json(ins.where);
            break;
          case Instr::Op::insert: {
            ij["op"] = "insert";
            ordered_json rows = ordered_json::object();
            for (const auto& [k, v] : ins.rows) rows[p.keys[k]] = v.value;
            ij["rows"] = rows;
            break;
          }
          case Instr::Op::update: {
            ij["op"] = "update";
            ij["where"] = predicate_to_json(ins.where);
            ordered_json rows = ordered_json::object();
            for (const auto& [k, v] : ins.rows) rows[p.keys[k]] = v.value;
            ij["set"] = rows;
            break;
          }
          case Instr::Op::abort_txn: ij["op"] = "abort"; break;
          case Instr::Op::local: ij["op"] = "local"; break;
        }
        instrs.push_back(std::move(ij));
      }
      tj["instructions"] = std::move(instrs);
      txns.push_back(std::move(tj));
    }
    sj["transactions"] = std::move(txns);
    sessions.push_back(std::move(sj));
  }
  doc["sessions"] = std::move(sessions);
  return doc;
}

inline ParseResult parse_program_json(const ordered_json& doc) {
  using namespace io_detail;
  ParseResult res;
  auto fail = [&](const std::string& m) {
    res.errors.push_back(m);
    return res;
  };
  if (!doc.is_object() || !doc.contains("kind") || doc["kind"] != "program")
    return fail("expected kind 'program'");
  Program p;
  if (!doc.contains("keys") || !doc["keys"].is_array() || doc["keys"].empty())
    return fail("'keys' must be a non-empty array");
  for (const auto& k : doc["keys"]) {
    if (!k.is_string()) return fail("'keys' entries must be strings");
    p.keys.push_back(k.get<std::string>());
  }
  p.initial.assign(p.keys.size(), RowValue::undefined());
  {
    std::vector<std::pair<int, RowValue>> rows;
    std::string err;
    if (!doc.contains("initial_state") ||
        !parse_rows(doc["initial_state"], p.keys, true, rows, err))
      return fail("initial_state: " + err);
    for (auto& [k, v] : rows) p.initial[k] = v;
    for (auto& v : p.initial)
      if (v.is_undefined()) return fail("initial_state must cover every key");
  }
  if (!doc.contains("sessions") || !doc["sessions"].is_array())
    return fail("'sessions' must be an array");
  for (const auto& sj : doc["sessions"]) {
    if (!sj.is_object() || !sj.contains("id") || !sj["id"].is_string() ||
        !sj.contains("transactions") || !sj["transactions"].is_array())
      return fail("each program session needs an 'id' and a 'transactions' array");
    p.session_ids.push_back(sj["id"].get<std::string>());
    std::vector<TxnBody> bodies;
    for (const auto& tj : sj["transactions"]) {
      TxnBody b;
      if (!tj.is_object() || !tj.contains("iso") || !tj["iso"].is_string() ||
          !tj.contains("instructions") || !tj["instructions"].is_array())
        return fail("each program transaction needs 'iso' and 'instructions'");
      auto iso = iso_from_string(tj["iso"].get<std::string>());
      if (!iso) return fail("program iso must be one of SER SI PC RA RC");
      b.iso = *iso;
      for (const auto& ij : tj["instructions"]) {
        Instr ins;
        if (!ij.is_object() || !ij.contains("op") || !ij["op"].is_string())
          return fail("each program instruction needs an 'op'");
        const std::string op = ij["op"].get<std::string>();
        std::string err;
        if (op == "select" || op == "delete") {
          ins.op = op == "select" ? Instr::Op::select : Instr::Op::del;
          if (!ij.contains("where") || !parse_predicate(ij["where"], ins.where, err))
            return fail("program " + op + ": " + err);
        } else if (op == "insert") {
          ins.op = Instr::Op::insert;
          if (!ij.contains("rows") || !parse_rows(ij["rows"], p.keys, false, ins.rows, err))
            return fail("program insert: " + err);
        } else if (op == "update") {
          ins.op = Instr::Op::update;
          if (!ij.contains("where") || !parse_predicate(ij["where"], ins.where, err))
            return fail("program update: " + err);
          if (!ij.contains("set") || !parse_rows(ij["set"], p.keys, false, ins.rows, err))
            return fail("program update set: " + err);
        } else if (op == "abort") {
          ins.op = Instr::Op::abort_txn;
        } else if (op == "local") {
          ins.op = Instr::Op::local;
        } else {
          return fail("program: unknown op '" + op + "'");
        }
        b.instrs.push_back(std::move(ins));
      }
      bodies.push_back(std::move(b));
    }
    p.sessions.push_back(std::move(bodies));
  }
  res.kind = "program";
  res.program = std::move(p);
  return res;
}

// ---------------------------------------------------------------------------
// Entry points

inline ParseResult parse_document(const std::string& text) {
  ParseResult res;
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    res.errors.push_back("JSON parse error at " + io_detail::line_col(text, e.byte) + ": " +
                         e.what());
    return res;
  }
  try {
    if (doc.is_object() && doc.contains("kind") && doc["kind"] == "program")
      return parse_program_json(doc);
    return parse_history_json(doc);
  } catch (const nlohmann::json::exception& e) {  // unexpected member types
    res.history.reset();
    res.program.reset();
    res.errors.assign(1, std::string("malformed document: ") + e.what());
    return res;
  }
}

inline ParseResult parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ParseResult res;
    res.errors.push_back("cannot open '" + path + "'");
    return res;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str());
}

// ---------------------------------------------------------------------------
// Reports

// Report for one checked history. `elapsed_ms` is emitted only when stats
// are requested, so default reports are bit-stable across runs and job
// counts.
inline ordered_json report_to_json(const Verdict& v, const History& input,
                                   bool with_timing = false, double elapsed_ms = 0.0) {
  ordered_json rep;
  rep["status"] = to_string(v.status);
  if (v.status == Status::consistent && v.witness) {
    ordered_json w;
    ordered_json added = ordered_json::array();
    for (const WrEdge& e : v.witness->wr) {
      if (std::binary_search(input.wr.begin(), input.wr.end(), e)) continue;
      ordered_json ej;
      ej["key"] = input.keys[e.key];
      ej["from_event"] = input.event_label(e.from);
      ej["to_event"] = input.event_label(e.to);
      added.push_back(std::move(ej));
    }
    w["wr_added"] = std::move(added);
    w["commit_order"] = v.commit_order;
    rep["witness"] = std::move(w);
  }
  if (v.status == Status::inconsistent) {
    ordered_json viol;
    switch (v.violation.kind) {
      case Violation::Kind::cycle:
        viol["kind"] = "cycle";
        viol["cycle"] = v.violation.cycle;
        break;
      case Violation::Kind::empty_zero_set:
        viol["kind"] = "empty_zero_set";
        viol["read"] = v.violation.read;
        viol["key"] = v.violation.key;
        break;
      default:
        viol["kind"] = "exhausted";
        break;
    }
    rep["violation"] = std::move(viol);
  }
  ordered_json stats;
  stats["prefixes_explored"] = v.prefixes_explored;
  stats["extensions_tried"] = v.extensions_tried;
  if (with_timing) stats["elapsed_ms"] = elapsed_ms;
  rep["stats"] = std::move(stats);
  if (!v.note.empty()) rep["note"] = v.note;
  return rep;
}

inline ordered_json error_report(const std::vector<std::string>& errors) {
  ordered_json rep;
  rep["status"] = "error";
  rep["errors"] = errors;
  return rep;
}

}  // namespace isocheck
