// Acceptance suite: one test case per criterion, each printing a single
// PASS/FAIL line. Run via ctest or directly; the whole binary is the
// project's exit gate.

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>

#include "support.hpp"

using namespace isocheck;
using namespace test_support;

namespace {

void report_line(int num, const std::string& text, bool ok) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", num, text.c_str());
  std::fflush(stdout);
}

#define ACC(expr)            \
  do {                       \
    bool acc_v = !!(expr);   \
    CHECK(acc_v);            \
    ok = ok && acc_v;        \
  } while (0)

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool witness_revalidates(const History& input, const Verdict& v) {
  if (v.status != Status::consistent || !v.witness) return false;
  if (!is_witness(*v.witness, input)) return false;
  HistoryIndex x = analyze(*v.witness);
  std::vector<int> order;
  for (const std::string& id : v.commit_order) order.push_back(v.witness->txn_index(id));
  if (int(order.size()) != x.n) return false;
  CommitRelation co = order_relation(x.n, order);
  for (int a = 0; a < x.n; ++a)
    for (int b = 0; b < x.n; ++b)
      if (x.sowr_adj[a * x.n + b] && !co.at(a, b)) return false;
  return execution_consistent(x, co);
}

int hardware_jobs() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 2 : int(std::min(n, 8u));
}

}  // namespace

TEST_CASE("criterion 1: bundled worked examples") {
  bool ok = true;
  auto t0 = std::chrono::steady_clock::now();

  auto load = [&](const char* f) {
    ParseResult pr = parse_file(data_path(f));
    REQUIRE_MESSAGE(pr.ok(), f);
    return *pr.history;
  };
  History f1 = load("full_update_delete.json");
  History f3a = load("client_update_delete.json");
  History f3b = load("bad_extension.json");
  History f3c_ser = load("witness_ser.json");
  History f3c_rc = load("witness_rc.json");
  History f4 = load("search_client.json");
  History f5 = load("search_conflict_free.json");

  for (const History* h : {&f1, &f3a, &f3b, &f3c_ser, &f3c_rc, &f4, &f5})
    ACC(validate(*h).empty());
  ACC(is_full(f1));

  // witness relationships between the bundled extensions
  ACC(is_witness(f3c_ser, f3a));
  ACC(!is_witness(f3b, f3a));

  // both-SER witness is inconsistent; weakening t2 to RC repairs it with
  // the order init < t1 < t2
  ACC(check_consistency(f3c_ser).status == Status::inconsistent);
  Verdict v_rc = check_consistency(f3c_rc);
  ACC(v_rc.status == Status::consistent);
  ACC(v_rc.commit_order == std::vector<std::string>({"init", "t1", "t2"}));

  // search_client: the conflict set is exactly (t5's read, x2) with one-set {init}
  // and zero-set {t1}; there is a single conflict-free extension (bundled too);
  // the checker accepts with the documented commit order
  {
    HistoryIndex x = analyze(f4);
    SaturationResult fix = saturate_fixpoint(x);
    ACC(fix.acyclic);
    auto cs = conflicts(x, fix.pco);
    ACC(cs.size() == 1);
    if (cs.size() == 1) {
      ACC(x.trans_of(cs[0].read) == f4.txn_index("t5"));
      ACC(f4.keys[cs[0].key] == "x2");
      WriterSets s = zero_one_sets(x, fix.pco, cs[0].read, cs[0].key);
      ACC(s.one.size() == 1 && s.one[0] == f4.txn_index("init"));
      ACC(s.zero.size() == 1 && s.zero[0] == f4.txn_index("t1"));
      std::vector<std::vector<int>> zs{s.zero};
      ExtensionStream stream(f4, x, cs, zs);
      History ext;
      ACC(stream.next(ext));
      ACC(history_to_json(ext).dump() == history_to_json(f5).dump());
      ACC(!stream.next(ext));
    }
    Verdict v4 = check_consistency(f4);
    ACC(v4.status == Status::consistent);
    ACC(v4.commit_order ==
        std::vector<std::string>({"init", "t1", "t4", "t5", "t2", "t3"}));
    ACC(witness_revalidates(f4, v4));
  }

  double el = seconds_since(t0);
  ACC(el < 1.0);
  report_line(1, "bundled worked examples reproduce exactly (" + std::to_string(el) + "s)", ok);
}

TEST_CASE("criterion 2: checker equals oracle on 5000 randomized histories") {
  bool ok = true;
  auto t0 = std::chrono::steady_clock::now();

  const int jobs = hardware_jobs();
  const int per_job = (5000 + jobs - 1) / jobs;
  std::atomic<long> compared{0}, disagreements{0}, consistent{0};

  auto work = [&](int job) {
    std::mt19937_64 rng(0xC0FFEE + uint64_t(job) * 977);
    int done = 0;
    long iter = 0;
    while (done < per_job && iter < per_job * 40L) {
      ++iter;
      RandomHistoryParams p;
      p.keys = 2 + int(iter % 3);  // 2..4 keys
      p.min_txns = 1;
      p.max_txns = 5;  // plus init: at most 6 transactions
      switch (iter % 3) {  // rotate corpus flavors
        case 0: break;     // all five levels, client histories
        case 1:
          p.levels = {Iso::ser, Iso::si, Iso::pc};
          p.full = true;   // strong levels, fully observed: pure search load
          break;
        default:
          p.levels = {Iso::si, Iso::pc, Iso::ra};
          p.wr_prob = 0.5;  // sparser observations: more extension choices
          break;
      }
      History h = random_history(p, rng);
      OracleResult o = brute_force_check(h);
      if (o.too_large) continue;
      Verdict v = check_consistency(h);
      if (v.status != o.status) {
        disagreements.fetch_add(1);
        std::fprintf(stderr, "disagreement (checker %s, oracle %s):\n%s\n",
                     to_string(v.status), to_string(o.status),
                     history_to_json(h).dump(2).c_str());
      }
      if (v.status == Status::consistent) consistent.fetch_add(1);
      ++done;
    }
    compared.fetch_add(done);
  };
  std::vector<std::future<void>> fs;
  for (int j = 0; j < jobs; ++j) fs.push_back(std::async(std::launch::async, work, j));
  for (auto& f : fs) f.get();

  ACC(compared.load() >= 5000);
  ACC(disagreements.load() == 0);
  ACC(consistent.load() > 500);          // the corpus exercises both verdicts
  ACC(compared.load() - consistent.load() > 500);
  double el = seconds_since(t0);
  ACC(el < 300.0);
  report_line(2,
              "oracle equivalence on " + std::to_string(compared.load()) + " histories, " +
                  std::to_string(disagreements.load()) + " disagreements (" +
                  std::to_string(el) + "s)",
              ok);
}

TEST_CASE("criterion 3: saturable fast path agrees with the oracle and scales polynomially") {
  bool ok = true;
  auto t0 = std::chrono::steady_clock::now();

  // agreement with the oracle on full RA/RC histories
  {
    std::mt19937_64 rng(314159);
    RandomHistoryParams p;
    p.full = true;
    p.levels = {Iso::ra, Iso::rc};
    int compared = 0, bad = 0;
    for (int i = 0; i < 1200 && compared < 800; ++i) {
      p.keys = 2 + (i % 3);
      History h = random_history(p, rng);
      OracleResult o = brute_force_check(h);
      if (o.too_large) continue;
      ++compared;
      if (check_saturable(h) != (o.status == Status::consistent)) ++bad;
    }
    ACC(compared >= 800);
    ACC(bad == 0);
  }

  // empirical growth: one saturation check on full RC histories of
  // increasing size; log-log slope bounded by 3.5
  {
    const int sizes[] = {10, 20, 40, 80};
    double times[4] = {0, 0, 0, 0};
    std::mt19937_64 rng(2718);
    for (int si = 0; si < 4; ++si) {
      RandomHistoryParams p;
      p.full = true;
      p.levels = {Iso::rc};
      p.min_txns = p.max_txns = sizes[si];
      p.keys = 4;
      p.max_sessions = 3;
      double total = 0;
      const int n_hist = 3;
      for (int hi = 0; hi < n_hist; ++hi) {
        History h = random_history(p, rng);
        double best = 1e9;
        for (int rep = 0; rep < 5; ++rep) {
          auto c0 = std::chrono::steady_clock::now();
          volatile bool r = check_saturable(h);
          (void)r;
          best = std::min(best, seconds_since(c0));
        }
        total += std::max(best, 1e-6);
      }
      times[si] = total / n_hist;
    }
    double slope = std::log(times[3] / times[0]) / std::log(8.0);
    std::printf("  saturable timings: T=10 %.3fms, T=20 %.3fms, T=40 %.3fms, T=80 %.3fms, slope %.2f\n",
                times[0] * 1e3, times[1] * 1e3, times[2] * 1e3, times[3] * 1e3, slope);
    ACC(slope <= 3.5);
  }

  double el = seconds_since(t0);
  report_line(3, "saturable fast path: oracle agreement and log-log slope <= 3.5 (" +
                     std::to_string(el) + "s)",
              ok);
}

TEST_CASE("criterion 4: 1000 generated runs all yield full consistent histories") {
  bool ok = true;
  auto t0 = std::chrono::steady_clock::now();

  const int jobs = hardware_jobs();
  const int total = 1000;
  std::atomic<int> done{0}, failures{0}, no_schedule{0};

  auto work = [&](int job) {
    const int per = (total + jobs - 1) / jobs;
    for (int i = 0; i < per; ++i) {
      const uint64_t seed = uint64_t(job) * 100000 + i + 1;
      ProgramParams pp;
      pp.sessions = 1 + int(seed % 3);
      pp.txns_per_session = 1 + int((seed / 3) % 4);
      pp.keys = 2 + int(seed % 3);
      switch (seed % 4) {
        case 0: pp.iso_mix = {{Iso::rc, 1}}; break;
        case 1: pp.iso_mix = {{Iso::ser, 1}}; break;
        case 2: pp.iso_mix = {{Iso::si, 1}}; break;
        default: pp.iso_mix = {{Iso::ser, 1}, {Iso::si, 1}, {Iso::rc, 2}}; break;
      }
      pp.w_abort = 1;
      Program prog = random_program(pp, seed);
      auto h = run_to_history(prog, seed);
      if (!h) {
        no_schedule.fetch_add(1);
        continue;
      }
      bool good = validate(*h).empty() && is_full(*h) &&
                  check_consistency(*h).status == Status::consistent;
      if (!good) {
        failures.fetch_add(1);
        std::fprintf(stderr, "generator soundness failure, seed %llu:\n%s\n",
                     (unsigned long long)seed, history_to_json(*h).dump(2).c_str());
      }
      done.fetch_add(1);
    }
  };
  std::vector<std::future<void>> fs;
  for (int j = 0; j < jobs; ++j) fs.push_back(std::async(std::launch::async, work, j));
  for (auto& f : fs) f.get();

  ACC(done.load() == 1000);
  ACC(failures.load() == 0);
  double el = seconds_since(t0);
  ACC(el < 120.0);
  report_line(4,
              std::to_string(done.load()) + " runs, " + std::to_string(failures.load()) +
                  " soundness failures (" + std::to_string(el) + "s)",
              ok);
}

TEST_CASE("criterion 5: low-conflict histories of growing size finish well under timeout") {
  bool ok = true;
  auto t0 = std::chrono::steady_clock::now();

  int timeouts = 0;
  for (int txns : {5, 10, 15, 20}) {
    for (uint64_t seed : {1ull, 2ull}) {
      ProgramParams pp;
      pp.sessions = 3;
      pp.txns_per_session = txns;
      pp.keys = 8;
      pp.w_select = 8;  // read-heavy workload, writes are rare
      pp.w_insert = 1;
      pp.w_update = 1;
      pp.w_delete = 0;
      pp.iso_mix = {{Iso::ser, 1}, {Iso::rc, 9}};
      Program prog = random_program(pp, seed * 31 + txns);
      auto h = run_to_history(prog, seed * 31 + txns);
      REQUIRE(h.has_value());
      auto c0 = std::chrono::steady_clock::now();
      Verdict v = check_consistency(*h);
      double el = seconds_since(c0);
      if (el >= 60.0) ++timeouts;
      ACC(v.status == Status::consistent);
      std::printf("  3x%d transactions: %.3fs\n", txns, el);
    }
  }
  ACC(timeouts == 0);
  double el = seconds_since(t0);
  report_line(5, "scaling smoke test, zero timeouts (" + std::to_string(el) + "s)", ok);
}

TEST_CASE("criterion 6: property suites") {
  bool ok = true;
  auto t0 = std::chrono::steady_clock::now();

  // saturation monotonicity and idempotence
  {
    std::mt19937_64 rng(61);
    RandomHistoryParams p;
    for (int i = 0; i < 150; ++i) {
      History h = random_history(p, rng);
      HistoryIndex x = analyze(h);
      SaturationResult fix = saturate_fixpoint(x);
      ACC(saturate(x, fix.pco) == fix.pco);
      CommitRelation small = sowr_closure(x);
      if (small.cyclic()) continue;
      CommitRelation big = small;
      for (int a = 0; a < x.n; ++a)
        for (int b = a + 1; b < x.n; ++b)
          if (!big.at(b, a) && (rng() % 3) == 0) big.add(a, b);
      big.close();
      ACC(saturate(x, small).subset_of(saturate(x, big)));
    }
  }

  // visibility monotonicity and SER dominance under total orders
  {
    std::mt19937_64 rng(62);
    RandomHistoryParams p;
    p.wr_prob = 0.85;
    for (int i = 0; i < 120; ++i) {
      History h = random_history(p, rng);
      HistoryIndex x = analyze(h);
      CommitRelation small = sowr_closure(x);
      if (small.cyclic()) continue;
      // a total order extending so/wr
      std::vector<int> order;
      std::vector<char> used(x.n, 0);
      for (int step = 0; step < x.n; ++step)
        for (int t = 0; t < x.n; ++t) {
          if (used[t]) continue;
          bool ready = true;
          for (int u = 0; u < x.n; ++u)
            if (!used[u] && small.at(u, t)) ready = false;
          if (ready) {
            used[t] = 1;
            order.push_back(t);
            break;
          }
        }
      CommitRelation co = order_relation(x.n, order);
      for (int r : x.reads) {
        int tr = x.trans_of(r);
        for (int k = 0; k < x.nkeys; ++k)
          for (int t2 = 0; t2 < x.n; ++t2) {
            if (t2 == tr || !x.writes(t2, k)) continue;
            for (Vis v : {Vis::rc, Vis::ra, Vis::ser, Vis::prefix, Vis::conflict}) {
              if (vis_holds(x, small, v, t2, r, k)) ACC(vis_holds(x, co, v, t2, r, k));
              if (vis_holds(x, co, v, t2, r, k)) {
                ACC(co.at(t2, tr));
                ACC(vis_holds(x, co, Vis::ser, t2, r, k));
              }
            }
          }
      }
    }
  }

  // isolation-weakening monotonicity of verdicts
  {
    auto weaken = [](Iso i) {
      switch (i) {
        case Iso::ser: return Iso::si;
        case Iso::si: return Iso::pc;
        case Iso::pc: return Iso::ra;
        default: return Iso::rc;
      }
    };
    std::mt19937_64 rng(63);
    RandomHistoryParams p;
    int flips = 0;
    for (int i = 0; i < 3000 && flips < 120; ++i) {
      History h = random_history(p, rng);
      if (check_consistency(h).status != Status::consistent) continue;
      History weak = h;
      int t = 1 + int(rng() % (h.txns.size() - 1));
      weak.txns[t].iso = weaken(weak.txns[t].iso);
      ACC(check_consistency(weak).status == Status::consistent);
      ++flips;
    }
    ACC(flips >= 100);
  }

  // every consistent verdict re-validates its witness
  {
    std::mt19937_64 rng(64);
    RandomHistoryParams p;
    int validated = 0;
    for (int i = 0; i < 3000 && validated < 150; ++i) {
      History h = random_history(p, rng);
      Verdict v = check_consistency(h);
      if (v.status != Status::consistent) continue;
      ACC(witness_revalidates(h, v));
      ++validated;
    }
    ACC(validated > 100);
  }

  // per-order equivalence of the axiom route and the saturation route on
  // every witness extension of small client histories
  {
    std::mt19937_64 rng(65);
    RandomHistoryParams p;
    p.max_txns = 4;  // with init: at most 5 transactions
    p.wr_prob = 0.85;
    long pairs = 0;
    for (int i = 0; i < 3000 && pairs <= 2000; ++i) {
      p.full = (i % 2 == 0);  // half full histories, half clients with gaps
      History h = random_history(p, rng);
      HistoryIndex x = analyze(h);
      // enumerate witness extensions exactly like the oracle does
      std::vector<std::pair<int, int>> missing;
      std::vector<std::vector<int>> cands;
      bool dead = false;
      for (int r : x.reads)
        for (int k = 0; k < x.nkeys; ++k) {
          if (x.wr_source(r, k) >= 0 || x.reads_local(r, k)) continue;
          std::vector<int> cc;
          const Predicate& where = h.event(x.ref(r)).where;
          for (int t = 0; t < x.n; ++t)
            if (t != x.trans_of(r) && x.writes(t, k) &&
                !where.eval(h.keys[k], x.txn_value(t, k)))
              cc.push_back(t);
          if (cc.empty()) dead = true;
          missing.push_back({r, k});
          cands.push_back(cc);
        }
      if (dead || missing.size() > 4) continue;
      std::vector<size_t> pick(missing.size(), 0);
      for (;;) {
        History ext = h;
        for (size_t m = 0; m < missing.size(); ++m) {
          WrEdge e;
          e.key = missing[m].second;
          e.from = x.ref(x.writer_event(cands[m][pick[m]], missing[m].second));
          e.to = x.ref(missing[m].first);
          ext.wr.push_back(e);
        }
        ext.canonicalize();
        HistoryIndex ex = analyze(ext);
        if (!detail::find_cycle(ex.sowr_adj, ex.n)) {
          long steps = 0;
          bool over = false;
          detail::for_each_topological_order(
              ex.sowr_adj, ex.n,
              [&](const std::vector<int>& o) {
                CommitRelation co = order_relation(ex.n, o);
                bool via_axioms = execution_consistent(ex, co);
                bool via_saturation = !saturate(ex, co).cyclic();
                if (via_axioms != via_saturation) ok = false;
                CHECK(via_axioms == via_saturation);
                ++pairs;
                return false;
              },
              steps, 200000, over);
        }
        bool done = true;
        for (size_t m = missing.size(); m-- > 0;) {
          if (++pick[m] < cands[m].size()) {
            done = false;
            break;
          }
          pick[m] = 0;
        }
        if (done || missing.empty()) break;
      }
    }
    ACC(pairs > 2000);
  }

  double el = seconds_since(t0);
  ACC(el < 180.0);
  report_line(6, "property suites green (" + std::to_string(el) + "s)", ok);
}

TEST_CASE("criterion 7: anomaly catalog matches the oracle's verdict matrix") {
  bool ok = true;

  auto write_skew = [] {
    return HB({"x", "y"}, {{"x", RowValue::present(0)}, {"y", RowValue::present(0)}})
        .session("s1")
        .txn("t1", Iso::si)
        .select(Predicate::lit(true))
        .insert({{"x", 1}})
        .session("s2")
        .txn("t2", Iso::si)
        .select(Predicate::lit(true))
        .insert({{"y", 1}})
        .wr("x", "init", 1, "t1", 1)
        .wr("y", "init", 1, "t1", 1)
        .wr("x", "init", 1, "t2", 1)
        .wr("y", "init", 1, "t2", 1)
        .build();
  };
  auto fractured_read = [] {
    return HB({"x", "y"}, {{"x", RowValue::present(0)}, {"y", RowValue::present(0)}})
        .session("s1")
        .txn("t1", Iso::ra)
        .insert({{"x", 1}, {"y", 1}})
        .session("s2")
        .txn("t2", Iso::ra)
        .select(Predicate::lit(true))
        .select(Predicate::lit(true))
        .wr("x", "init", 1, "t2", 1)
        .wr("y", "init", 1, "t2", 1)
        .wr("x", "t1", 1, "t2", 2)
        .wr("y", "t1", 1, "t2", 2)
        .build();
  };
  auto long_fork = [] {
    return HB({"x", "y"}, {{"x", RowValue::present(0)}, {"y", RowValue::present(0)}})
        .session("s1")
        .txn("t1", Iso::pc)
        .insert({{"x", 1}})
        .session("s2")
        .txn("t2", Iso::pc)
        .insert({{"y", 1}})
        .session("s3")
        .txn("t3", Iso::pc)
        .select(Predicate::lit(true))
        .session("s4")
        .txn("t4", Iso::pc)
        .select(Predicate::lit(true))
        .wr("x", "t1", 1, "t3", 1)
        .wr("y", "init", 1, "t3", 1)
        .wr("x", "init", 1, "t4", 1)
        .wr("y", "t2", 1, "t4", 1)
        .build();
  };

  struct Row {
    const char* name;
    History h;
    Iso consistent_at;
    Iso inconsistent_at;
  };
  std::vector<Row> rows;
  rows.push_back({"write skew", write_skew(), Iso::si, Iso::ser});
  rows.push_back({"fractured read", fractured_read(), Iso::rc, Iso::ra});
  rows.push_back({"long fork", long_fork(), Iso::ra, Iso::pc});

  for (auto& row : rows) {
    REQUIRE(validate(row.h).empty());
    ACC(is_full(row.h));
    for (Iso iso : {Iso::ser, Iso::si, Iso::pc, Iso::ra, Iso::rc}) {
      History h = with_uniform_level(row.h, iso);
      OracleResult o = brute_force_check(h);
      REQUIRE_FALSE(o.too_large);
      Verdict v = check_consistency(h);
      bool match = v.status == o.status;
      if (!match)
        std::fprintf(stderr, "%s under %s: checker %s oracle %s\n", row.name, to_string(iso),
                     to_string(v.status), to_string(o.status));
      ACC(match);
      if (iso == row.consistent_at) ACC(o.status == Status::consistent);
      if (iso == row.inconsistent_at) ACC(o.status == Status::inconsistent);
    }
  }
  report_line(7, "anomaly catalog (write skew, fractured read, long fork)", ok);
}
