#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pedghmm/cost_map.hpp"
#include "pedghmm/error.hpp"
#include "pedghmm/eval.hpp"
#include "pedghmm/synthetic.hpp"
#include "support.hpp"

using namespace pedghmm;
namespace tst = pedghmm::testing;
namespace fs = std::filesystem;

namespace {

Trajectory make_track(const std::string& id, const std::vector<Vec2>& pts) {
  Trajectory t;
  t.id = id;
  for (std::size_t k = 0; k < pts.size(); ++k) t.samples.push_back({static_cast<std::int64_t>(k), pts[k], std::nullopt});
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

struct Street {
  SceneDescription scene = synthetic::street_scene();
  PotentialCostMap map = compute_potential_map(scene, 0.5, 0);
  LearningConfig cfg = [] {
    LearningConfig c;
    c.sigma_obs = 1.25;
    return c;
  }();
  ModelSetup proposed() const { return make_proposed(map, list_destinations(scene), 2.5, 0.05, cfg); }
  ModelSetup baseline() const { return make_baseline_setup(map, list_destinations(scene), 2.5, 0.05, cfg); }
};

}  // namespace

TEST(Evaluate, HorizonBeyondLengthIsEmpty) {
  const GhmmModel m = tst::chain_model({{0.5, 0.5}, {0.5, 0.5}}, {0.5, 0.5});
  const Trajectory t = make_track("a", {{1, 5}, {2, 5}, {2, 5}});
  EXPECT_TRUE(evaluate_one(m, t, 3).errors.empty());
  EXPECT_TRUE(evaluate_one(m, t, 10).errors.empty());
  EXPECT_EQ(evaluate_one(m, t, 2).errors.size(), 1u);
  EXPECT_THROW(evaluate_one(m, t, 0), InputError);
}

TEST(Evaluate, StationaryPedestrian) {
  const GhmmModel m = tst::chain_model({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.3);
  const Trajectory t = make_track("s", std::vector<Vec2>(12, Vec2{2, 5}));
  const ErrorSeries s = evaluate_one(m, t, 3);
  ASSERT_EQ(s.errors.size(), 9u);
  for (double e : s.errors) EXPECT_LT(e, 0.01);
  EXPECT_LT(s.errors.back(), 1e-9);
}

TEST(Evaluate, CorridorFirstStepByHand) {
  const GhmmModel m = tst::chain_model({{0.5, 0.5, 0}, {0, 0.5, 0.5}, {0, 0, 1}}, {1, 0, 0});
  const Trajectory t = make_track("c", {{1, 5}, {2, 5}, {3, 5}});
  const ErrorSeries s = evaluate_one(m, t, 1);
  ASSERT_EQ(s.errors.size(), 2u);
  const double w0 = 1.0 / (1.0 + std::exp(-0.5));
  const double w1 = 1.0 - w0;
  EXPECT_NEAR(s.errors[0], std::abs(1.5 * w0 + 2.5 * w1 - 2.0), 1e-12);
  EXPECT_EQ(s.timesteps[0], 0);
}

TEST(Evaluate, DegenerateBeliefRestarts) {
  // Absorbing chain that cannot move back: an observation behind the belief
  // leaves no mass.
  const GhmmModel m = tst::chain_model({{0, 1, 0}, {0, 0, 1}, {0, 0, 1}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.001);
  const Trajectory t = make_track("d", {{3, 5}, {3, 5}, {1, 5}, {1, 5}, {3, 5}});
  const ErrorSeries s = evaluate_one(m, t, 1);
  EXPECT_GE(s.reinitializations, 1u);
  EXPECT_EQ(s.errors.size(), 4u);
}

TEST(Evaluate, GapsAreBridged) {
  const GhmmModel m = tst::chain_model({{0.5, 0.5}, {0.5, 0.5}}, {0.5, 0.5});
  Trajectory t = make_track("g", {{1, 5}, {2, 5}, {2, 5}});
  t.samples[1].t = 4;
  t.samples[2].t = 6;
  const ErrorSeries s = evaluate_one(m, t, 2);
  ASSERT_EQ(s.timesteps, (std::vector<std::int64_t>{4}));
}

TEST(Train, StationaryTrajectoryOnlyDwells) {
  const Street st;
  ModelSetup s = st.proposed();
  const auto nodes = s.topology.nodes();
  const auto edges = s.topology.edges();
  const Vec2 at{10, 10};
  const auto it = std::find_if(nodes.begin(), nodes.end(), [&](const auto& kv) { return kv.second.centroid == at; });
  ASSERT_NE(it, nodes.end());
  const TrainReport r = train(s, std::vector<Trajectory>{make_track("still", std::vector<Vec2>(15, at))}, st.map);
  EXPECT_EQ(r.skipped(), 0u);
  EXPECT_EQ(s.topology.node_count(), nodes.size());
  EXPECT_EQ(s.topology.edges(), edges);
  EXPECT_EQ(s.topology.node(it->first).dwell_accumulator, 15u);
}

TEST(Train, InvariantsAfterEveryTrajectory) {
  const Street st;
  ModelSetup s = st.proposed();
  const auto corpus = synthetic::legal_trajectories(50, true, {}, 31);
  for (const Trajectory& t : corpus) {
    const TrainReport r = train(s, std::span(&t, 1), st.map);
    ASSERT_EQ(r.skipped(), 0u) << r.records[0].message;
    ASSERT_NO_THROW(s.model.check_invariants(1e-9));
    ASSERT_EQ(s.model.topology_revision(), s.topology.revision());
    ASSERT_EQ(s.model.state_count(), s.topology.node_count() * s.model.goals().size());
  }
}

TEST(Train, CoversWalkedRegion) {
  const Street st;
  ModelSetup s = st.proposed();
  const auto corpus = synthetic::legal_trajectories(250, true, {}, 32);
  const TrainReport r = train(s, corpus, st.map);
  EXPECT_EQ(r.trained(), 250u);
  // Insertion is skipped for samples inside the Thales circle of the two
  // nearest nodes, so a few samples sit slightly beyond tau.
  std::size_t samples = 0, far = 0;
  double worst = 0.0;
  for (const Trajectory& t : corpus) {
    for (const TrajectorySample& x : t.samples) {
      double best = 1e9;
      for (const auto& [id, n] : s.topology.nodes()) best = std::min(best, distance(n.centroid, x.position));
      ++samples;
      if (best > 2.5) ++far;
      worst = std::max(worst, best);
    }
  }
  EXPECT_LT(static_cast<double>(far), 0.01 * static_cast<double>(samples));
  EXPECT_LT(worst, 2.5 * std::sqrt(2.0));
}

TEST(Train, FailedTrajectoryLeavesSetupUntouched) {
  const Street st;
  ModelSetup s = st.proposed();
  const ModelSetup before = s;
  Trajectory bad = make_track("bad", {{1, 1}, {2, 2}, {100, 100}});
  const TrainReport r = train(s, std::vector<Trajectory>{bad}, st.map);
  EXPECT_EQ(r.skipped(), 1u);
  EXPECT_FALSE(r.records[0].message.empty());
  EXPECT_EQ(s.model, before.model);
  EXPECT_EQ(s.topology, before.topology);
}

TEST(Train, LabelGoal) {
  const Street st;
  const ModelSetup s = st.proposed();
  const std::vector<Vec2> to_east{{20, 18}, {30, 19}, {39, 20}};
  const std::vector<Vec2> heading_west{{30, 3}, {25, 3.5}, {20, 4}};
  const auto find = [&](Vec2 p) {
    for (const Goal& g : s.model.goals().goals) {
      if (g.point == p) return g.id;
    }
    return GoalId{999};
  };
  EXPECT_EQ(label_goal(s.model, to_east, 2.5), find({40, 20}));
  EXPECT_EQ(label_goal(s.model, heading_west, 2.5), find({0, 4}));
  EXPECT_FALSE(label_goal(s.model, std::vector<Vec2>{{5, 5}, {5, 5}}, 2.5).has_value());
}

TEST(Compare, PresetsAndExport) {
  const Street st;
  const auto corpus = synthetic::legal_trajectories(6, true, {}, 41);
  auto test = synthetic::legal_trajectories(2, false, {}, 42, 100);
  const auto ill = synthetic::illegal_trajectories(2, {}, 43, 200);
  test.insert(test.end(), ill.begin(), ill.end());
  ComparisonOptions opt;
  opt.horizon = 20;
  opt.training_sizes = {0, 3, 50};
  const ComparisonReport r = run_comparison(st.proposed(), st.baseline(), corpus, test, st.map, opt);
  EXPECT_EQ(r.results.size(), 8u);
  for (const char* preset : {"0", "3", "6", "0-full"}) {
    for (TrajectoryClass c : {TrajectoryClass::kLegal, TrajectoryClass::kIllegal}) {
      const ClassResult* cr = r.find(preset, c);
      ASSERT_NE(cr, nullptr) << preset;
      EXPECT_EQ(cr->pvalues.size(), 2u);
      EXPECT_GE(cr->combined_p, 0.0);
      EXPECT_LE(cr->combined_p, 1.0);
    }
  }
  const ClassResult* zf = r.find("0-full", TrajectoryClass::kLegal);
  EXPECT_EQ(zf->proposed_training, 0u);
  EXPECT_EQ(zf->baseline_training, 6u);
  EXPECT_EQ(zf->mean_error_proposed, r.find("0", TrajectoryClass::kLegal)->mean_error_proposed);
  EXPECT_EQ(zf->mean_error_baseline, r.find("6", TrajectoryClass::kLegal)->mean_error_baseline);

  const fs::path a = fs::temp_directory_path() / "pedghmm_eval_a";
  const fs::path b = fs::temp_directory_path() / "pedghmm_eval_b";
  export_report(r, a);
  export_report(run_comparison(st.proposed(), st.baseline(), corpus, test, st.map, opt), b);
  std::size_t rows = 0;
  for (const CurveSet& c : r.curves) {
    for (const ErrorSeries& s : c.series) rows += s.errors.size();
  }
  EXPECT_EQ(line_count(a / "curves.csv"), rows + 1);
  EXPECT_EQ(line_count(a / "pvalues.csv"), 9u);
  for (const char* f : {"pvalues.csv", "trajectory_pvalues.csv", "curves.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Compare, EmptyReportHasHeadersOnly) {
  const fs::path dir = fs::temp_directory_path() / "pedghmm_eval_empty";
  export_report(ComparisonReport{}, dir);
  EXPECT_EQ(slurp(dir / "pvalues.csv"),
            "preset,class,proposed_training,baseline_training,horizon,trajectories,mean_error_proposed,"
            "mean_error_baseline,combined_p\n");
  EXPECT_EQ(slurp(dir / "trajectory_pvalues.csv"), "preset,class,trajectory,p\n");
  EXPECT_EQ(slurp(dir / "curves.csv"), "preset,model,training,class,trajectory,t,error\n");
  fs::remove_all(dir);
}
