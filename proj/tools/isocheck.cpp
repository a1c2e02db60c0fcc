// isocheck: check transactional histories for consistency against per-
// transaction isolation levels, generate consistent histories from the
// reference semantics, or run the brute-force oracle.
//
// Exit codes: 0 all consistent, 1 some history inconsistent, 2 input or
// usage error, 3 some verdict unknown (budget / oracle too large).

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "isocheck/isocheck.hpp"

namespace fs = std::filesystem;
using namespace isocheck;

namespace {

int log_level() {
  const char* v = std::getenv("ISOCHECK_LOG");
  if (!v) return 0;
  std::string s(v);
  if (s == "debug") return 2;
  if (s == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "isocheck: " << msg << "\n";
}

void write_file_atomic(const fs::path& path, const std::string& data) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << data;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct FileOutcome {
  std::string text;  // rendered report
  Status status = Status::unknown;
  bool error = false;
};

std::string render_text_report(const std::string& path, const Verdict& v) {
  std::string line = path + ": " + to_string(v.status);
  if (v.status == Status::consistent) {
    line += " (commit order:";
    for (const std::string& t : v.commit_order) line += " " + t;
    line += ")";
  } else if (v.status == Status::inconsistent) {
    switch (v.violation.kind) {
      case Violation::Kind::cycle: {
        line += " (ordering cycle:";
        for (const std::string& t : v.violation.cycle) line += " " + t;
        line += ")";
        break;
      }
      case Violation::Kind::empty_zero_set:
        line += " (no admissible writer for " + v.violation.read + " on key " + v.violation.key + ")";
        break;
      default:
        line += " (all extensions and orders exhausted)";
        break;
    }
  } else if (!v.note.empty()) {
    line += " (" + v.note + ")";
  }
  return line;
}

FileOutcome check_one_inner(const std::string& path, const std::string& format, bool with_oracle,
                            long max_extensions, bool with_stats);

// Worker-thread entry: nothing may escape, a throwing file becomes an error
// report rather than taking the process down.
FileOutcome check_one(const std::string& path, const std::string& format, bool with_oracle,
                      long max_extensions, bool with_stats) {
  try {
    return check_one_inner(path, format, with_oracle, max_extensions, with_stats);
  } catch (const std::exception& e) {
    FileOutcome out;
    out.error = true;
    ordered_json rep = error_report({e.what()});
    rep["file"] = path;
    out.text = format == "json" ? rep.dump() : path + ": error: " + e.what();
    return out;
  }
}

FileOutcome check_one_inner(const std::string& path, const std::string& format, bool with_oracle,
                            long max_extensions, bool with_stats) {
  FileOutcome out;
  ParseResult pr = parse_file(path);
  if (!pr.ok() || !pr.history) {
    if (pr.ok()) pr.errors.push_back("file is not a history document");
    out.error = true;
    ordered_json rep = error_report(pr.errors);
    rep["file"] = path;
    out.text = format == "json" ? rep.dump() : path + ": error: " + pr.errors.front();
    return out;
  }
  const History& h = *pr.history;
  auto errs = validate(h);
  if (!errs.empty()) {
    out.error = true;
    std::vector<std::string> msgs;
    for (const auto& e : errs) msgs.push_back(e.code + ": " + e.message);
    ordered_json rep = error_report(msgs);
    rep["file"] = path;
    out.text = format == "json" ? rep.dump() : path + ": error: " + msgs.front();
    return out;
  }

  CheckOptions opts;
  opts.max_extensions = max_extensions;
  auto t0 = std::chrono::steady_clock::now();
  Verdict v = check_consistency(h, opts);
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  out.status = v.status;

  if (with_oracle) {
    OracleResult ov = brute_force_check(h);
    if (ov.too_large) {
      v.note += (v.note.empty() ? "" : "; ") + std::string("oracle skipped: history too large");
    } else if (ov.status != v.status) {
      out.error = true;
      ordered_json rep = error_report({"checker/oracle disagreement: checker says " +
                                       std::string(to_string(v.status)) + ", oracle says " +
                                       to_string(ov.status)});
      rep["file"] = path;
      out.text = format == "json" ? rep.dump() : path + ": error: checker/oracle disagreement";
      return out;
    }
  }

  if (format == "json") {
    ordered_json rep = report_to_json(v, h, with_stats, ms);
    rep["file"] = path;
    out.text = rep.dump();
  } else {
    out.text = render_text_report(path, v);
    if (with_stats)
      out.text += " [prefixes=" + std::to_string(v.prefixes_explored) +
                  " extensions=" + std::to_string(v.extensions_tried) + "]";
  }
  return out;
}

int cmd_check(const std::vector<std::string>& paths, const std::string& format, bool with_oracle,
              long max_extensions, int jobs, bool with_stats) {
  std::vector<FileOutcome> results(paths.size());
  if (jobs < 1) jobs = 1;
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= paths.size()) return;
      results[i] = check_one(paths[i], format, with_oracle, max_extensions, with_stats);
    }
  };
  if (jobs == 1 || paths.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  bool any_error = false, any_inconsistent = false, any_unknown = false;
  for (size_t i = 0; i < paths.size(); ++i) {
    std::cout << results[i].text << "\n";
    any_error |= results[i].error;
    if (!results[i].error) {
      any_inconsistent |= results[i].status == Status::inconsistent;
      any_unknown |= results[i].status == Status::unknown;
    }
  }
  if (any_error) return 2;
  if (any_inconsistent) return 1;
  if (any_unknown) return 3;
  return 0;
}

std::vector<std::pair<Iso, int>> parse_iso_mix(const std::string& mix_text, std::string& err) {
  std::vector<std::pair<Iso, int>> mix;
  std::stringstream ss(mix_text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    int weight = 1;
    std::string name = tok;
    size_t colon = tok.find(':');
    if (colon != std::string::npos) {
      name = tok.substr(0, colon);
      try {
        weight = std::stoi(tok.substr(colon + 1));
      } catch (...) {
        err = "bad weight in --iso token '" + tok + "'";
        return {};
      }
    }
    auto iso = iso_from_string(name);
    if (!iso) {
      err = "unknown isolation level '" + name + "' (use SER, SI or RC)";
      return {};
    }
    if (*iso == Iso::pc || *iso == Iso::ra) {
      err = "the generator covers SER, SI and RC only";
      return {};
    }
    mix.push_back({*iso, weight});
  }
  if (mix.empty()) err = "empty --iso mix";
  return mix;
}

int cmd_generate(int sessions, int txns, int keys, const std::string& iso_spec, uint64_t seed,
                 int count, const std::string& outdir, bool emit_programs) {
  std::string err;
  auto mix = parse_iso_mix(iso_spec, err);
  if (!err.empty()) {
    std::cerr << "isocheck generate: " << err << "\n";
    return 2;
  }
  if (sessions < 1 || txns < 1 || keys < 1 || count < 1) {
    std::cerr << "isocheck generate: counts must be >= 1\n";
    return 2;
  }
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (!fs::is_directory(outdir)) {
    std::cerr << "isocheck generate: cannot create output directory '" << outdir << "'\n";
    return 2;
  }
  ProgramParams pp;
  pp.sessions = sessions;
  pp.txns_per_session = txns;
  pp.keys = keys;
  pp.iso_mix = mix;
  for (int i = 0; i < count; ++i) {
    const uint64_t s = seed + uint64_t(i);
    Program prog = random_program(pp, s);
    auto h = run_to_history(prog, s);
    if (!h) {
      std::cerr << "isocheck generate: no completing schedule for seed " << s << "\n";
      return 2;
    }
    fs::path out = fs::path(outdir) / ("history_" + std::to_string(s) + ".json");
    try {
      write_file_atomic(out, history_to_json(*h).dump(2) + "\n");
      if (emit_programs) {
        fs::path pout = fs::path(outdir) / ("program_" + std::to_string(s) + ".json");
        write_file_atomic(pout, program_to_json(prog).dump(2) + "\n");
      }
    } catch (const std::exception& e) {
      std::cerr << "isocheck generate: " << e.what() << "\n";
      return 2;
    }
    log_info("wrote " + out.string());
  }
  return 0;
}

int cmd_oracle(const std::string& path) {
  ParseResult pr = parse_file(path);
  if (!pr.ok() || !pr.history) {
    std::cerr << "isocheck oracle: " << (pr.errors.empty() ? "not a history" : pr.errors.front())
              << "\n";
    return 2;
  }
  auto errs = validate(*pr.history);
  if (!errs.empty()) {
    std::cerr << "isocheck oracle: " << errs.front().message << "\n";
    return 2;
  }
  OracleResult r = brute_force_check(*pr.history);
  if (r.too_large) {
    std::cout << path << ": too large for the oracle budget\n";
    return 3;
  }
  if (r.status == Status::consistent) {
    std::cout << path << ": consistent\n";
    std::cout << "  commit order:";
    for (const std::string& t : r.commit_order) std::cout << " " << t;
    std::cout << "\n  witness wr edges added:";
    bool any = false;
    for (const WrEdge& e : r.witness->wr) {
      if (std::binary_search(pr.history->wr.begin(), pr.history->wr.end(), e)) continue;
      std::cout << " [" << pr.history->keys[e.key] << ": " << pr.history->event_label(e.from)
                << " -> " << pr.history->event_label(e.to) << "]";
      any = true;
    }
    if (!any) std::cout << " none";
    std::cout << "\n";
    return 0;
  }
  std::cout << path << ": inconsistent\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consistency checker for SQL-like transactional histories"};
  app.require_subcommand(1);

  // check
  auto* check = app.add_subcommand("check", "check history files for consistency");
  std::vector<std::string> paths;
  std::string format = "text";
  bool with_oracle = false, with_stats = false;
  long max_extensions = -1;
  int jobs = 1;
  check->add_option("paths", paths, "history files")->required()->check(CLI::ExistingFile);
  check->add_option("--format", format, "output format")->check(CLI::IsMember({"text", "json"}));
  check->add_flag("--oracle", with_oracle, "cross-check against the brute-force oracle");
  check->add_option("--max-extensions", max_extensions, "cap on enumerated extensions (<0 = unbounded)");
  check->add_option("--jobs", jobs, "parallel workers across files")->check(CLI::PositiveNumber);
  check->add_flag("--stats", with_stats, "include timing in reports");

  // generate
  auto* gen = app.add_subcommand("generate", "emit consistent histories from random programs");
  int g_sessions = 3, g_txns = 5, g_keys = 4, g_count = 1;
  uint64_t g_seed = 1;
  std::string g_iso = "RC", g_out;
  bool g_programs = false;
  gen->add_option("--sessions", g_sessions, "sessions per program");
  gen->add_option("--txns", g_txns, "transactions per session");
  gen->add_option("--keys", g_keys, "size of the key universe");
  gen->add_option("--iso", g_iso, "isolation mix, e.g. RC or SER:1,RC:8");
  gen->add_option("--seed", g_seed, "base seed");
  gen->add_option("--count", g_count, "number of histories");
  gen->add_option("-o,--out", g_out, "output directory")->required();
  gen->add_flag("--emit-programs", g_programs, "also write the generating programs");

  // oracle
  auto* orc = app.add_subcommand("oracle", "run the brute-force oracle on one history");
  std::string o_path;
  orc->add_option("path", o_path, "history file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (check->parsed())
      return cmd_check(paths, format, with_oracle, max_extensions, jobs, with_stats);
    if (gen->parsed())
      return cmd_generate(g_sessions, g_txns, g_keys, g_iso, g_seed, g_count, g_out, g_programs);
    if (orc->parsed()) return cmd_oracle(o_path);
  } catch (const std::exception& e) {
    std::cerr << "isocheck: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
