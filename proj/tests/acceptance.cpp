// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include <sys/wait.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "pedghmm/cost_map.hpp"
#include "pedghmm/delaunay.hpp"
#include "pedghmm/error.hpp"
#include "pedghmm/eval.hpp"
#include "pedghmm/inference.hpp"
#include "pedghmm/model_io.hpp"
#include "pedghmm/stats.hpp"
#include "pedghmm/synthetic.hpp"
#include "pedghmm/text.hpp"
#include "stats_reference.hpp"
#include "support.hpp"

#ifndef PEDGHMM_CLI
#error "PEDGHMM_CLI must name the command-line binary"
#endif

using namespace pedghmm;
namespace tst = pedghmm::testing;
namespace fs = std::filesystem;
using text::format_double;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome inference_oracle() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  int models = 0;
  bool goal_ok = true;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  for (; models < 200; ++models) {
    const GhmmModel m = tst::random_small_model(rng, 4);
    const tst::Dense d(m);
    const auto obs = tst::random_observations(rng, tst::pick(rng, 1, 5));
    Belief b = initial_belief(m);
    for (std::size_t t = 0; t < obs.size(); ++t) {
      b = filter_update(m, b, obs[t]);
      const std::vector<Vec2> prefix(obs.begin(), obs.begin() + static_cast<long>(t) + 1);
      const auto ref = tst::brute_filter(d, prefix);
      for (std::size_t i = 0; i < d.n; ++i) track(b.weights[i], ref[i]);
    }
    for (std::size_t h = 0; h <= 2; ++h) {
      const auto ref = tst::brute_filter(d, obs, h);
      const PredictionResult r = predict(m, b, static_cast<std::int64_t>(h));
      for (std::size_t i = 0; i < d.n; ++i) track(r.state_belief.weights[i], ref[i]);
      std::map<NodeId, double> pos;
      std::map<GoalId, double> goal;
      Vec2 mean{0, 0};
      for (std::size_t i = 0; i < d.n; ++i) {
        pos[d.node[i]] += ref[i];
        goal[d.goal[i]] += ref[i];
        mean = mean + ref[i] * d.mean[i];
      }
      for (const auto& [n, w] : position_marginal(m, r.state_belief)) track(w, pos.at(n));
      for (const auto& [g, w] : goal_marginal(m, r.state_belief)) track(w, goal.at(g));
      track(r.expected_position.x, mean.x);
      track(r.expected_position.y, mean.y);
      auto best = goal.begin();
      for (auto it = goal.begin(); it != goal.end(); ++it) {
        if (it->second > best->second + 1e-12) best = it;
      }
      if (best->first != r.map_goal && std::abs(goal.at(r.map_goal) - best->second) > 1e-12) goal_ok = false;
    }
  }
  return {worst <= 1e-9 && goal_ok, std::to_string(models) + " models, max deviation " + fmt(worst) +
                                        (goal_ok ? "" : ", MAP goal mismatch")};
}

Outcome em_oracle() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  bool identity = true;
  int models = 0;
  for (; models < 200; ++models) {
    const GhmmModel m = tst::random_small_model(rng, 4);
    const auto obs = tst::random_observations(rng, tst::pick(rng, 2, 5));
    const ObservationSequence seq{obs, std::nullopt};
    const GhmmModel out = incremental_baum_welch(m, seq, 1.0);
    const tst::EmStep ref = tst::brute_em(tst::Dense(m), obs);
    for (StateIndex i = 0; i < m.state_count(); ++i) {
      worst = std::max(worst, std::abs(out.prior()[i] - ref.pi[i]));
      for (StateIndex j = 0; j < m.state_count(); ++j) {
        worst = std::max(worst, std::abs(out.transition(i, j) - ref.a[i][j]));
      }
    }
    if (model_bytes(incremental_baum_welch(m, seq, 0.0)) != model_bytes(m)) identity = false;
  }
  return {worst <= 1e-9 && identity, std::to_string(models) + " models, rate 1 max deviation " + fmt(worst) +
                                         ", rate 0 " + (identity ? "bit-identical" : "CHANGED the model")};
}

Outcome corridor_fit() {
  const double tau = 2.5;
  const SceneDescription scene = synthetic::corridor_scene();
  const PotentialCostMap map = compute_potential_map(scene, 0.5, 0);
  LearningConfig cfg;
  cfg.sigma_obs = tau / 2.0;
  ModelSetup setup = make_proposed(map, list_destinations(scene), tau, 0.05, cfg);
  synthetic::WalkConfig walk;
  walk.noise_sigma = tau / 4.0;
  const auto corpus = synthetic::corridor_trajectories(50, true, walk, 1);
  const auto held_out = synthetic::corridor_trajectories(20, false, walk, 2, 1000);
  auto total = [&](const GhmmModel& m) {
    double s = 0.0;
    for (const Trajectory& t : held_out) s += sequence_loglik(m, {t.positions(), std::nullopt});
    return s;
  };
  const double before = total(setup.model);
  const TrainReport r = train(setup, corpus, map);
  const double after = total(setup.model);
  return {after - before >= 5.0 && r.skipped() == 0,
          "held-out log-likelihood " + fmt(before, 8) + " -> " + fmt(after, 8) + " (gain " + fmt(after - before, 6) +
              " nats, " + std::to_string(r.skipped()) + " skipped)"};
}

Outcome seed_conformance() {
  PotentialCostMap map;
  map.resolution = 0.5;
  map.width = 60;
  map.height = 20;
  for (std::size_t j = 0; j < map.height; ++j) {
    for (std::size_t i = 0; i < map.width; ++i) {
      map.values.push_back(0.05 + 0.95 * static_cast<double>(i) / static_cast<double>(map.width - 1));
    }
  }
  const TopologicalMap topo = build_prior_topology(map, std::vector<Vec2>{{0, 5}, {30, 5}}, 2.0);
  LearningConfig cfg;
  const GhmmModel m = init_model_from_topology(topo, map, goals_from_pinned(topo), cfg);
  std::size_t checked = 0, bad = 0;
  std::map<double, std::size_t> seen;
  for (StateIndex i = 0; i < m.state_count(); ++i) {
    const TransitionRow& row = m.rows()[i];
    double total = 0.0;
    for (const Transition& t : row.entries) total += t.seed;
    for (const Transition& t : row.entries) {
      ++checked;
      ++seen[t.seed];
      const bool self = t.to == i;
      const double beta = sample_cost(map, m.nodes().at(m.states()[i].node).centroid);
      const double alpha = sample_cost(map, m.nodes().at(m.states()[t.to].node).centroid);
      double expected = 0.5;
      if (self) {
        expected = 0.05;
      } else if (beta - alpha > 0 && std::abs(beta - alpha) > cfg.epsilon) {
        expected = 0.8;
      } else if (beta - alpha < 0 && std::abs(beta - alpha) > cfg.epsilon) {
        expected = 0.2;
      }
      if (t.seed != expected || std::abs(t.p - t.seed / total) > 1e-15) ++bad;
    }
  }
  std::string dist;
  for (const auto& [v, n] : seen) dist += " " + format_double(v) + "x" + std::to_string(n);
  const bool all_cases = seen.size() == 4;
  return {bad == 0 && all_cases, std::to_string(checked) + " seeded weights," + dist + ", " + std::to_string(bad) +
                                     " mismatches"};
}

Outcome fuzz() {
  PotentialCostMap map;
  map.resolution = 0.5;
  map.width = 32;
  map.height = 20;
  for (std::size_t j = 0; j < map.height; ++j) {
    for (std::size_t i = 0; i < map.width; ++i) {
      map.values.push_back(0.05 + 0.9 * std::abs(std::sin(0.2 * static_cast<double>(i) + 0.3 * static_cast<double>(j))));
    }
  }
  const Rect ext = map.extent();
  TopologicalMap topo = build_prior_topology(map, std::vector<Vec2>{{0, 5}, {16, 8}}, 2.0, 0.2);
  TopologicalMap mirror = topo;
  LearningConfig cfg;
  cfg.dwell_threshold = 12;
  cfg.sigma_obs = 1.0;
  GhmmModel model = init_model_from_topology(topo, map, goals_from_pinned(topo), cfg);

  std::mt19937_64 rng(505);
  Vec2 walker{8, 5};
  std::size_t counts[5] = {0, 0, 0, 0, 0};
  std::size_t numerical = 0;
  std::string failure;
  auto clamp = [&](Vec2 p) {
    return Vec2{std::clamp(p.x, ext.min.x, ext.max.x), std::clamp(p.y, ext.min.y, ext.max.y)};
  };
  auto check = [&](int op) -> bool {
    try {
      model.check_invariants(1e-9);
    } catch (const Error& e) {
      failure = "op " + std::to_string(op) + ": " + e.what();
      return false;
    }
    double prior = 0.0;
    for (double v : model.prior()) prior += v;
    if (std::abs(prior - 1.0) > 1e-9) {
      failure = "op " + std::to_string(op) + ": prior sums to " + fmt(prior, 17);
      return false;
    }
    for (StateIndex i = 0; i < model.state_count(); ++i) {
      double row = 0.0;
      for (const Transition& t : model.rows()[i].entries) {
        row += t.p;
        const GhmmState& a = model.states()[i];
        const GhmmState& b = model.states()[t.to];
        const bool allowed = t.to == i || (a.goal == b.goal && topo.has_edge(a.node, b.node));
        if (t.p > 0.0 && !allowed) {
          failure = "op " + std::to_string(op) + ": transition outside the topology";
          return false;
        }
      }
      if (std::abs(row - 1.0) > 1e-9) {
        failure = "op " + std::to_string(op) + ": row sums to " + fmt(row, 17);
        return false;
      }
    }
    if (model.nodes().size() != topo.node_count() || !(mirror == topo)) {
      failure = "op " + std::to_string(op) + ": model, topology and replayed topology diverge";
      return false;
    }
    return true;
  };

  const int kOps = 10000;
  for (int op = 0; op < kOps; ++op) {
    const double r = tst::uniform(rng, 0, 1);
    if (r < 0.55) {
      ++counts[0];
      if (tst::uniform(rng, 0, 1) < 0.05) walker = {tst::uniform(rng, 0, 16), tst::uniform(rng, 0, 10)};
      walker = clamp(walker + Vec2{tst::uniform(rng, -0.3, 0.3), tst::uniform(rng, -0.3, 0.3)});
      const TopologyDelta d = itm_update(topo, walker);
      model.apply_delta(d, &map);
      apply_delta(mirror, d);
    } else if (r < 0.65) {
      ++counts[1];
      topo.begin_track();
      mirror.begin_track();
    } else if (r < 0.75) {
      ++counts[2];
      const std::size_t known = model.goals().size();
      model.discover_goals(topo);
      for (std::size_t k = known; k < model.goals().size(); ++k) {
        topo.set_pinned(model.goals().goals[k].node);
        mirror.set_pinned(model.goals().goals[k].node);
      }
    } else {
      ++counts[3];
      ObservationSequence seq;
      Vec2 p{tst::uniform(rng, 0, 16), tst::uniform(rng, 0, 10)};
      const std::size_t len = tst::pick(rng, 2, 8);
      for (std::size_t k = 0; k < len; ++k) {
        seq.positions.push_back(p);
        p = clamp(p + Vec2{tst::uniform(rng, -0.5, 0.5), tst::uniform(rng, -0.5, 0.5)});
      }
      if (tst::uniform(rng, 0, 1) < 0.5) {
        seq.goal = model.goals().goals[tst::pick(rng, 0, model.goals().size() - 1)].id;
      }
      try {
        model.learn(seq, tst::uniform(rng, 0.01, 1.0));
      } catch (const NumericalError&) {
        ++numerical;
      }
    }
    if (!check(op)) return {false, failure};
  }
  return {true, std::to_string(kOps) + " ops (" + std::to_string(counts[0]) + " ITM+delta, " +
                    std::to_string(counts[1]) + " track resets, " + std::to_string(counts[2]) + " goal discovery, " +
                    std::to_string(counts[3]) + " BW), final " + std::to_string(model.state_count()) + " states / " +
                    std::to_string(model.goals().size()) + " goals, " + std::to_string(numerical) +
                    " BW calls rejected as numerically impossible"};
}

Outcome geometry() {
  std::mt19937_64 rng(606);
  int mismatched = 0;
  for (int set = 0; set < 50; ++set) {
    const auto pts = tst::random_lattice_points(rng, 20, 100.0);
    const auto edges = delaunay_edges(pts);
    if (std::set<IndexEdge>(edges.begin(), edges.end()) != tst::brute_delaunay_edges(pts)) ++mismatched;
  }
  PotentialCostMap map;
  map.resolution = 0.5;
  map.width = 60;
  map.height = 40;
  map.values.assign(map.width * map.height, 0.5);
  const double tau = 2.0;
  TopologicalMap topo = build_prior_topology(map, std::vector<Vec2>{{0, 10}, {30, 7}, {13.3, 20}}, tau, 0.3);
  double min_gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 5000; ++k) {
    itm_update(topo, {tst::uniform(rng, 0, 30), tst::uniform(rng, 0, 20)});
    if (k % 250 == 0) topo.begin_track();
  }
  for (auto a = topo.nodes().begin(); a != topo.nodes().end(); ++a) {
    for (auto b = std::next(a); b != topo.nodes().end(); ++b) {
      min_gap = std::min(min_gap, distance(a->second.centroid, b->second.centroid));
    }
  }
  return {mismatched == 0 && min_gap >= tau / 2.0,
          "Delaunay: " + std::to_string(50 - mismatched) + "/50 point sets match the brute-force triangulation; ITM: " +
              std::to_string(topo.node_count()) + " nodes after 5000 observations, min spacing " + fmt(min_gap) +
              " (tau/2 = " + fmt(tau / 2.0) + ")"};
}

Outcome protocol() {
  const double tau = 2.5;
  const SceneDescription scene = synthetic::street_scene();
  const PotentialCostMap map = compute_potential_map(scene, 0.5, 0);
  LearningConfig cfg;
  cfg.sigma_obs = tau / 2.0;
  synthetic::WalkConfig walk;
  walk.noise_sigma = tau / 4.0;
  const auto corpus = synthetic::legal_trajectories(250, true, walk, 1);
  auto test = synthetic::legal_trajectories(12, false, walk, 2, 1000);
  const auto ill = synthetic::illegal_trajectories(12, walk, 3, 2000);
  test.insert(test.end(), ill.begin(), ill.end());
  const auto dest = list_destinations(scene);
  ComparisonOptions opt;
  opt.horizon = 75;
  opt.training_sizes = {50};
  const ComparisonReport r = run_comparison(make_proposed(map, dest, tau, 0.05, cfg),
                                            make_baseline_setup(map, dest, tau, 0.05, cfg), corpus, test, map, opt);
  bool pass = true;
  std::string detail = "street scene 40x24 m, 250 partial training, 12+12 test, H=75;";
  auto report = [&](const char* preset, TrajectoryClass cls, double alpha, bool need_lower) {
    const ClassResult* c = r.find(preset, cls);
    const bool lower = c->mean_error_proposed < c->mean_error_baseline;
    const bool ok = c->combined_p < alpha && (!need_lower || lower);
    pass = pass && ok;
    detail += std::string(" [") + preset + " " + to_string(cls) + ": proposed " + fmt(c->mean_error_proposed) +
              " m vs baseline " + fmt(c->mean_error_baseline) + " m, p=" + fmt(c->combined_p) +
              (ok ? " ok]" : " NOT MET]");
  };
  report("50", TrajectoryClass::kLegal, 0.01, true);
  report("50", TrajectoryClass::kIllegal, 0.01, true);
  report("0-full", TrajectoryClass::kIllegal, 0.05, false);
  return {pass, detail};
}

Outcome statistics() {
  double worst_t = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto [a, b] = tst::reference_sample(k);
    worst_t = std::max(worst_t, std::abs(paired_test(a, b) - tst::kReferencePValues[k]));
  }
  std::mt19937_64 rng(808);
  double worst_f = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> ps(1 + static_cast<std::size_t>(rep % 25));
    double stat = 0.0;
    for (double& p : ps) {
      p = tst::uniform(rng, 1e-8, 1.0);
      stat -= 2.0 * std::log(p);
    }
    const boost::math::chi_squared dist(2.0 * static_cast<double>(ps.size()));
    worst_f = std::max(worst_f, std::abs(combine_pvalues(ps) - boost::math::cdf(boost::math::complement(dist, stat))));
  }
  return {worst_t <= 1e-4 && worst_f <= 1e-6, "paired t-test max deviation " + fmt(worst_t) +
                                                  " over 20 reference samples; Fisher max deviation " + fmt(worst_f) +
                                                  " over 200 lists"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PEDGHMM_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "pedghmm_acceptance_determinism";
  fs::remove_all(root);
  if (run_cli("synth --output-dir " + (root / "data").string()) != 0) return {false, "synth failed"};
  const std::string args = "compare --scene " + (root / "data" / "scene.txt").string() + " --trajectories " +
                           (root / "data" / "train.csv").string() + " --test " + (root / "data" / "test.csv").string() +
                           " --output-dir ";
  const int c1 = run_cli(args + (root / "run1").string());
  const int c2 = run_cli(args + (root / "run2").string());
  if (c1 != 0 || c2 != 0) return {false, "compare exited with " + std::to_string(c1) + "/" + std::to_string(c2)};
  std::size_t bytes = 0;
  for (const char* f : {"pvalues.csv", "trajectory_pvalues.csv", "curves.csv"}) {
    const std::string a = slurp(root / "run1" / f);
    if (a.empty() || a != slurp(root / "run2" / f)) return {false, std::string(f) + " differs between runs"};
    bytes += a.size();
  }
  fs::remove_all(root);
  return {true, "3 report files, " + std::to_string(bytes) + " bytes, identical across two runs"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "inference matches path enumeration", 10, inference_oracle},
      {2, "Baum-Welch rate 1 is batch EM, rate 0 is identity", 0, em_oracle},
      {3, "learning improves held-out fit", 30, corridor_fit},
      {4, "transition seeds follow the cost rule", 0, seed_conformance},
      {5, "stochasticity invariants under fuzzing", 60, fuzz},
      {6, "Delaunay and ITM spacing", 0, geometry},
      {7, "street protocol analogue", 300, protocol},
      {8, "statistics oracles", 0, statistics},
      {9, "compare is deterministic", 0, determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.budget_s) + " s budget";
    }
    if (!o.pass) ++failed;
    std::printf("criterion %d: %s - %s - %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
