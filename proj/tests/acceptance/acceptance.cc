// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if any check fails.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "experiment.h"
#include "reweave/failure.h"
#include "reweave/learn.h"
#include "reweave/lp_oracle.h"
#include "reweave/metrics.h"
#include "reweave/pathing.h"
#include "reweave/te.h"
#include "testing/fixtures.h"
#include "testing/oracles.h"

namespace reweave {
namespace {

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict = Verdict::kFail;
  std::string detail;
};

Outcome Check(bool ok, std::string detail) {
  return {ok ? Verdict::kPass : Verdict::kFail, std::move(detail)};
}

std::string Fmt(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

double Elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

Outcome GoldenExample() {
  auto start = std::chrono::steady_clock::now();
  testing::GoldenCase g = testing::MakeGoldenCase();
  FailureScenario sc{{g.failed}, 1.0};
  const double reroute =
      ComputeMlu(SourceReroute(g.topology, g.paths, g.demand, g.ratios, sc).load,
                 g.topology)
          .mlu;
  WovenLoad woven = Weave(g.topology, g.paths, g.demand, g.ratios, sc);
  const double weave = ComputeMlu(woven.load, g.topology).mlu;
  // Detours S7-S10-S6 and S7-S11-S6.
  const double d1 = woven.load.flow[*g.topology.FindEdge(6, 9)];
  const double d2 = woven.load.flow[*g.topology.FindEdge(6, 10)];
  const double secs = Elapsed(start);
  const bool ok = std::abs(reroute - 1.2) <= 1e-9 && weave <= 1.0 &&
                  std::abs(d1 - 0.15) <= 1e-9 && std::abs(d2 - 0.15) <= 1e-9 &&
                  secs < 1.0;
  return Check(ok, Fmt("source_reroute MLU %.6f (want 1.2), weave MLU %.6f "
                       "(want <= 1), detours %.4f/%.4f (want 0.15), %.3f s",
                       reroute, weave, d1, d2, secs));
}

Outcome LpOracle() {
  auto start = std::chrono::steady_clock::now();
  double worst_gap = 0;
  double worst_violation = 0;
  int bad = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Topology t = testing::RandomSmall(seed + 1000, 6);
    PathSetOptions opts;
    opts.k = 3;
    opts.routing = seed % 2 ? PathStrategy::kKsp : PathStrategy::kEdksp;
    PathSet ps = BuildPathSet(t, opts);
    DemandMatrix dm =
        testing::RandomSparseDemand(t.num_nodes(), 1 + seed % 2, seed * 13);
    LpSolution sol = SolveMinMlu(t, ps, dm);
    const double grid = testing::GridSearchMinMlu(t, ps, dm, 0.01);
    worst_gap = std::max(worst_gap, std::abs(sol.report.mlu - grid));
    if (std::abs(sol.report.mlu - grid) > 0.02 ||
        sol.report.mlu > grid + 1e-9) {
      ++bad;
    }
    // Constraint verification: simplex rows, capacity rows, certificate.
    try {
      ValidateRatios(ps, sol.ratios, 1e-6);
    } catch (const std::exception&) {
      ++bad;
    }
    LinkLoad load = ComputeLoads(t, ps, dm, sol.ratios);
    for (EdgeId e = 0; e < t.num_edges(); ++e) {
      worst_violation = std::max(
          worst_violation, load.flow[e] - sol.report.mlu * t.edge(e).capacity);
    }
    if (sol.duality_gap > 1e-6) ++bad;
  }
  const double secs = Elapsed(start);
  return Check(bad == 0 && worst_violation <= 1e-6 && secs < 60,
               Fmt("50 instances, max |lp - grid| %.4f (tol 0.02), max "
                   "capacity violation %.1e, %d bad, %.2f s",
                   worst_gap, worst_violation, bad, secs));
}

Outcome EdkspRiskLaw() {
  long lists = 0;
  long bad = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Topology t = GenerateRandomTopology(8 + seed % 8, 3.0 + 0.1 * seed, seed);
    for (NodeId s = 0; s < t.num_nodes(); ++s) {
      for (NodeId d = 0; d < t.num_nodes(); ++d) {
        if (s == d) continue;
        auto paths = Edksp(t, s, d, 8);
        ++lists;
        if (EdgeRisk(paths) != 1.0 / static_cast<double>(paths.size())) ++bad;
      }
    }
  }
  return Check(bad == 0, Fmt("%ld pair lists on 20 topologies, %ld violate "
                             "risk == 1/m",
                             lists, bad));
}

Outcome WeaveOracle() {
  int cases = 0;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Topology t = testing::RandomSmall(seed + 500, 6);
    PathSetOptions opts;
    opts.k = 3;
    opts.backup_k = 1 + seed % 3;
    opts.routing = seed % 2 ? PathStrategy::kKsp : PathStrategy::kEdksp;
    PathSet ps = BuildPathSet(t, opts);
    DemandMatrix dm = testing::RandomSparseDemand(
        t.num_nodes(), std::min(6, t.num_nodes()), seed);
    RatioConfig r = testing::RandomRatios(ps, seed);
    const int m = t.num_edges();
    for (int a = 0; a < m; ++a) {
      for (int b = a; b < m; ++b) {
        FailureScenario sc;
        sc.failed_edges =
            a == b ? std::vector<EdgeId>{a} : std::vector<EdgeId>{a, b};
        WovenLoad w = Weave(t, ps, dm, r, sc);
        testing::OracleRecovery o =
            testing::ExpandWeave(t, ps, dm, r, sc.failed_edges);
        for (EdgeId e = 0; e < m; ++e) {
          worst = std::max(worst, std::abs(w.load.flow[e] - o.load[e]));
        }
        worst = std::max({worst, std::abs(w.planned - o.planned),
                          std::abs(w.weaved - o.weaved),
                          std::abs(w.rerouted - o.rerouted),
                          std::abs(w.dropped - o.dropped)});
        ++cases;
      }
    }
  }
  return Check(cases >= 200 && worst <= 1e-12,
               Fmt("%d cases, max deviation %.1e", cases, worst));
}

Outcome GradientCheck() {
  double worst = 0;
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Topology t = GenerateRandomTopology(7, 3.0, seed);
    PathSetOptions opts;
    opts.k = 4;
    PathSet ps = BuildPathSet(t, opts);
    GravityOptions g;
    g.count = 4;
    g.seed = seed;
    DemandSeries series = GravitySeries(7, g);
    PredictorModel m =
        PredictorModel::Create(7, ps.num_routing_paths(), 1, seed);
    std::span<const DemandMatrix> history(series.matrices.data(), 1);
    GradientCheckResult r = reweave::GradientCheck(
        m, t, ps, history, series.matrices[1], 100, seed);
    worst = std::max(worst, r.max_relative_error);
    checked += r.checked;
  }
  return Check(worst < 1e-4 && checked >= 300,
               Fmt("%d parameters on 3 fresh models, max relative error %.2e",
                   checked, worst));
}

struct DeskRun {
  tools::RunResult result;
  std::vector<tools::NoiseRow> noise;
  double seconds = 0;
  std::string error;
};

DeskRun RunDesk() {
  DeskRun out;
  try {
    tools::ExperimentConfig c = tools::LoadConfigFile(REWEAVE_DESK_CONFIG);
    c.out_dir = REWEAVE_ACCEPTANCE_OUT;
    std::filesystem::remove_all(c.out_dir);
    auto start = std::chrono::steady_clock::now();
    tools::Experiment e(c);
    out.result = e.Run();
    out.seconds = Elapsed(start);
    out.noise = e.Noise();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

const tools::RegimeSummary* Find(const tools::RunResult& r, Regime regime) {
  for (const auto& s : r.regimes) {
    if (s.regime == regime) return &s;
  }
  return nullptr;
}

Outcome DirectionalMlu(const DeskRun& run) {
  if (!run.error.empty()) return Check(false, "desk run failed: " + run.error);
  const auto* w = Find(run.result, Regime::kWeave);
  const auto* s = Find(run.result, Regime::kSourceReroute);
  if (!w || !s || !run.result.weave_vs_source) {
    return Check(false, "desk config lacks weave/source_reroute");
  }
  const auto& c = *run.result.weave_vs_source;
  const bool ok = run.result.scenarios == 50 && w->mlu.mean <= s->mlu.mean &&
                  c.win_fraction() >= 0.6 && run.seconds < 600;
  return Check(ok, Fmt("%d scenarios: mean MLU weave %.4f vs source_reroute "
                       "%.4f, weave wins %d/%d (%.0f%%, want >= 60%%), %.1f s",
                       run.result.scenarios, w->mlu.mean, s->mlu.mean, c.wins,
                       c.wins + c.losses, 100.0 * c.win_fraction(),
                       run.seconds));
}

Outcome Conservation(const DeskRun& run) {
  if (!run.error.empty()) return Check(false, "desk run failed");
  double worst = 0;
  double failed_load = 0;
  for (const auto& row : run.result.rows) {
    worst = std::max(worst, row.conservation_error);
    failed_load = std::max(failed_load, row.failed_edge_load);
  }
  return Check(!run.result.rows.empty() && worst <= 1e-9 && failed_load == 0.0,
               Fmt("%zu evaluations, max bookkeeping error %.1e, max load on "
                   "a failed link %.1e",
                   run.result.rows.size(), worst, failed_load));
}

Outcome PercLossOrdering(const DeskRun& run) {
  if (!run.error.empty()) return Check(false, "desk run failed");
  const auto* w = Find(run.result, Regime::kWeave);
  const auto* s = Find(run.result, Regime::kSourceReroute);
  if (!w || !s || !w->perc_loss.count(0.9) || !s->perc_loss.count(0.9)) {
    return Check(false, "PercLoss(0.9) missing");
  }
  // Congestion-free scenarios must carry zero loss everywhere.
  int free = 0;
  bool zero = true;
  std::vector<LossRecord> free_records;
  for (const auto* regime : {w, s}) {
    for (const LossRecord& rec : regime->loss_records) {
      if (rec.mlu > 1.0) continue;
      ++free;
      for (double l : rec.flow_loss) zero = zero && l == 0.0;
      LossRecord copy = rec;
      free_records.push_back(copy);
    }
  }
  for (LossRecord& r : free_records) r.weight = 1.0 / free_records.size();
  const double free_perc =
      free_records.empty() ? 0.0 : PercLoss(free_records, 0.9);
  for (const auto& row : run.result.rows) {
    if (row.mlu <= 1.0 && row.loss != 0.0) zero = false;
  }
  const double pw = w->perc_loss.at(0.9);
  const double ps = s->perc_loss.at(0.9);
  return Check(pw <= ps && zero && free_perc == 0.0,
               Fmt("PercLoss(0.9) weave %.4f vs source_reroute %.4f; %d "
                   "congestion-free evaluations, all zero loss: %s",
                   pw, ps, free, zero && free_perc == 0.0 ? "yes" : "no"));
}

Outcome NoiseRobustness(const DeskRun& run) {
  if (!run.error.empty()) return Check(false, "desk run failed");
  if (run.noise.size() != 3) return Check(false, "expected three noise rows");
  bool ascending = run.noise[0].alpha == 0.1 && run.noise[1].alpha == 0.2 &&
                   run.noise[2].alpha == 0.3;
  const double change = run.noise[0].mean_change;
  return Check(ascending && std::abs(change) <= 0.05,
               Fmt("mean change %+.2f%% / %+.2f%% / %+.2f%% at alpha "
                   "0.1/0.2/0.3, p99 change at 0.3 %+.2f%%",
                   100 * run.noise[0].mean_change,
                   100 * run.noise[1].mean_change,
                   100 * run.noise[2].mean_change,
                   100 * run.noise[2].p99_change));
}

Outcome ViatelTables() {
  const char* file = std::getenv("REWEAVE_VIATEL");
  if (!file || !std::filesystem::exists(file)) {
    std::fprintf(stderr,
                 "warning: Viatel topology unavailable; set REWEAVE_VIATEL "
                 "to its graphml file\n");
    return {Verdict::kSkip, "Viatel graphml not available"};
  }
  try {
    Topology t =
        PruneDegreeOne(LoadTopologyFile(file, TopologyFormat::kGraphmlLite))
            .topology;
    PathSetOptions opts;
    opts.k = 8;
    PathSet ps = BuildPathSet(t, opts);
    const long backups = ps.directed_backup_count();
    const double risk = RiskProfile(t, ps, RiskKind::kBackup).mean;
    const bool ok = std::abs(backups - 1240.0) <= 0.05 * 1240 &&
                    std::abs(risk - 0.4698) <= 0.05;
    return Check(ok, Fmt("%d nodes, %d links: %ld backup paths (want 1240 "
                         "+-5%%), mean backup risk %.4f (want 0.4698 +-0.05)",
                         t.num_nodes(), t.num_edges(), backups, risk));
  } catch (const std::exception& e) {
    return Check(false, std::string("cannot evaluate: ") + e.what());
  }
}

int Main() {
  int failures = 0;
  auto report = [&](int id, const char* title, const Outcome& o) {
    const char* tag = o.verdict == Verdict::kPass   ? "PASS"
                      : o.verdict == Verdict::kSkip ? "SKIP"
                                                    : "FAIL";
    if (o.verdict == Verdict::kFail) ++failures;
    std::printf("%s %2d %s: %s\n", tag, id, title, o.detail.c_str());
    std::fflush(stdout);
  };
  auto guarded = [](const std::function<Outcome()>& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return Check(false, std::string("exception: ") + e.what());
    }
  };
  report(1, "golden example", guarded(GoldenExample));
  report(2, "LP oracle", guarded(LpOracle));
  report(3, "EDKSP risk law", guarded(EdkspRiskLaw));
  report(4, "weave oracle", guarded(WeaveOracle));
  report(5, "gradient check", guarded(GradientCheck));
  const DeskRun desk = RunDesk();
  report(6, "directional MLU", guarded([&] { return DirectionalMlu(desk); }));
  report(7, "conservation", guarded([&] { return Conservation(desk); }));
  report(8, "PercLoss", guarded([&] { return PercLossOrdering(desk); }));
  report(9, "noise robustness", guarded([&] { return NoiseRobustness(desk); }));
  report(10, "Viatel tables", guarded(ViatelTables));
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace reweave

int main() { return reweave::Main(); }
