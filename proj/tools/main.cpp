// pedghmm command-line front end.
//
// Exit codes: 0 success, 1 input/usage error, 2 numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pedghmm/cost_map.hpp"
#include "pedghmm/error.hpp"
#include "pedghmm/eval.hpp"
#include "pedghmm/inference.hpp"
#include "pedghmm/model_io.hpp"
#include "pedghmm/scene.hpp"
#include "pedghmm/synthetic.hpp"
#include "pedghmm/text.hpp"
#include "pedghmm/trajectory.hpp"

namespace fs = std::filesystem;
using namespace pedghmm;

namespace {

struct RunConfig {
  std::string scene;
  std::string cost_map;
  std::string trajectories;
  std::string test;
  std::string model;
  std::string output_dir;
  std::string trajectory_id;
  std::string kind = "proposed";
  double resolution = 0.5;
  std::int64_t time = 0;
  double tau = 2.5;
  double epsilon_itm = 0.05;
  double epsilon = 0.05;
  std::optional<double> sigma_obs;
  double bw_learning_rate = 0.1;
  std::uint64_t dwell_threshold = 40;
  std::int64_t horizon = 75;
  double pi0 = 0.5;
  double a0 = 0.5;
  std::vector<std::size_t> sizes{0, 50, 100, 250};
  bool no_zero_full = false;
  bool no_goal_labels = false;
  // synth
  std::string synth_kind = "street";
  std::size_t train_count = 50;
  std::size_t test_count = 12;
  std::uint64_t seed = 1;
};

LearningConfig learning_config(const RunConfig& c) {
  LearningConfig lc;
  lc.epsilon = c.epsilon;
  lc.sigma_obs = c.sigma_obs.value_or(c.tau / 2.0);
  lc.bw_learning_rate = c.bw_learning_rate;
  lc.dwell_threshold = c.dwell_threshold;
  lc.pi0 = c.pi0;
  lc.a0 = c.a0;
  return lc;
}

void validate_common(const RunConfig& c) {
  if (!(c.resolution > 0.0)) throw InputError("--resolution must be > 0");
  if (!(c.tau > 0.0)) throw InputError("--tau must be > 0");
  if (!(c.epsilon_itm >= 0.0 && c.epsilon_itm <= 1.0)) throw InputError("--epsilon-itm must lie in [0, 1]");
  if (c.horizon < 1) throw InputError("--horizon must be >= 1");
  if (c.kind != "proposed" && c.kind != "baseline") throw InputError("--kind must be proposed or baseline");
  learning_config(c).validate();
}

fs::path require_output_dir(const RunConfig& c) {
  if (c.output_dir.empty()) throw InputError("--output-dir is required");
  fs::create_directories(c.output_dir);
  return c.output_dir;
}

std::string fmt(double v) { return text::format_double(v); }

PotentialCostMap cost_map_for(const RunConfig& c, const SceneDescription& scene) {
  if (!c.cost_map.empty()) return read_cost_map_binary(c.cost_map, scene.bounds.min);
  return compute_potential_map(scene, c.resolution, c.time);
}

ModelSetup setup_for(const RunConfig& c, const SceneDescription& scene, const PotentialCostMap& map) {
  const std::vector<Vec2> dests = list_destinations(scene);
  const LearningConfig lc = learning_config(c);
  return c.kind == "baseline" ? make_baseline_setup(map, dests, c.tau, c.epsilon_itm, lc)
                              : make_proposed(map, dests, c.tau, c.epsilon_itm, lc);
}

int cmd_build_map(const RunConfig& c) {
  validate_common(c);
  const SceneDescription scene = load_scene(c.scene);
  const fs::path out = require_output_dir(c);
  const PotentialCostMap map = compute_potential_map(scene, c.resolution, c.time);
  write_cost_map_binary(map, out / "cost_map.bin");
  write_cost_map_csv(map, out / "cost_map.csv");
  std::cout << "cost map " << map.width << " x " << map.height << " cells at " << fmt(map.resolution) << " m -> "
            << (out / "cost_map.bin").string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& c) {
  validate_common(c);
  const SceneDescription scene = load_scene(c.scene);
  std::vector<Trajectory> corpus;
  if (!c.trajectories.empty()) corpus = load_trajectories(c.trajectories);
  const fs::path out = require_output_dir(c);
  const PotentialCostMap map = cost_map_for(c, scene);
  ModelSetup setup = setup_for(c, scene, map);
  std::cout << "initial " << c.kind << " model: " << setup.topology.node_count() << " nodes, "
            << setup.model.goals().size() << " goals, " << setup.model.state_count() << " states\n";
  TrainOptions opts;
  opts.label_goals = !c.no_goal_labels;
  std::size_t k = 0;
  const TrainReport report = train(setup, corpus, map, opts, [&](const TrainRecord& r) {
    ++k;
    std::cout << '[' << k << '/' << corpus.size() << "] " << r.trajectory_id;
    if (r.ok) {
      std::cout << " nodes=" << r.nodes << " states=" << r.states << " loglik=" << fmt(r.loglik);
      if (r.goal) std::cout << " goal=" << *r.goal;
      if (r.goals_added > 0) std::cout << " new_goals=" << r.goals_added;
    } else {
      std::cout << " SKIPPED: " << r.message;
    }
    std::cout << '\n';
  });
  double total = 0.0;
  for (const Trajectory& tr : corpus) total += sequence_loglik(setup.model, {tr.positions(), std::nullopt});
  save_bundle(out / "model.ghmm", setup.model, &setup.topology);
  export_topology(setup.topology, out / "topology.txt");
  std::cout << "trained " << report.trained() << ", skipped " << report.skipped() << "; final log-likelihood "
            << fmt(total) << "\nmodel -> " << (out / "model.ghmm").string() << '\n';
  return report.skipped() > 0 ? 1 : 0;
}

int cmd_predict(const RunConfig& c) {
  validate_common(c);
  const ModelBundle bundle = load_bundle(c.model);
  const std::vector<Trajectory> all = load_trajectories(c.trajectories);
  const Trajectory* tr = nullptr;
  for (const Trajectory& t : all) {
    if (t.id == c.trajectory_id) tr = &t;
  }
  if (tr == nullptr) throw InputError("unknown trajectory id '" + c.trajectory_id + "'");
  const fs::path out = require_output_dir(c);
  const GhmmModel& model = bundle.model;

  std::map<std::int64_t, Vec2> truth;
  for (const TrajectorySample& s : tr->samples) truth.emplace(s.t, s.position);
  const fs::path file = out / ("predict_" + tr->id + ".csv");
  std::ofstream csv(file, std::ios::binary);
  if (!csv) throw InputError("cannot write " + file.string());
  csv << "t,obs_x,obs_y,mode_node,mode_x,mode_y,map_goal,map_goal_p,pred_t,pred_x,pred_y,truth_x,truth_y,error\n";
  Belief belief = initial_belief(model);
  for (std::size_t k = 0; k < tr->samples.size(); ++k) {
    const TrajectorySample& s = tr->samples[k];
    if (k > 0) {
      for (std::int64_t g = tr->samples[k - 1].t + 1; g < s.t; ++g) belief = propagate(model, belief);
    }
    belief = filter_update(model, belief, s.position);
    belief.timestep = s.t;
    const auto nodes = position_marginal(model, belief);
    auto mode = nodes.front();
    for (const auto& e : nodes) {
      if (e.second > mode.second) mode = e;
    }
    const Vec2 mode_pos = model.nodes().at(mode.first).centroid;
    const PredictionResult pred = predict(model, belief, c.horizon);
    double goal_p = 0.0;
    for (const auto& [g, w] : goal_marginal(model, pred.state_belief)) {
      if (g == pred.map_goal) goal_p = w;
    }
    csv << s.t << ',' << fmt(s.position.x) << ',' << fmt(s.position.y) << ',' << mode.first << ','
        << fmt(mode_pos.x) << ',' << fmt(mode_pos.y) << ',' << pred.map_goal << ',' << fmt(goal_p) << ','
        << s.t + c.horizon << ',' << fmt(pred.expected_position.x) << ',' << fmt(pred.expected_position.y) << ',';
    auto it = truth.find(s.t + c.horizon);
    if (it != truth.end()) {
      csv << fmt(it->second.x) << ',' << fmt(it->second.y) << ','
          << fmt(prediction_error(pred.expected_position, it->second));
    } else {
      csv << ",,";
    }
    csv << '\n';
  }
  std::cout << "trace -> " << file.string() << '\n';
  return 0;
}

int cmd_evaluate(const RunConfig& c) {
  validate_common(c);
  const ModelBundle bundle = load_bundle(c.model);
  const std::vector<Trajectory> test = load_trajectories(c.trajectories);
  const fs::path out = require_output_dir(c);
  const std::vector<ErrorSeries> series = evaluate(bundle.model, test, c.horizon);
  std::ofstream errors(out / "errors.csv", std::ios::binary);
  std::ofstream summary(out / "summary.csv", std::ios::binary);
  if (!errors || !summary) throw InputError("cannot write to " + out.string());
  errors << "trajectory,class,t,error\n";
  summary << "trajectory,class,horizon,predictions,mean_error,reinitializations\n";
  std::map<TrajectoryClass, std::pair<double, std::size_t>> per_class;
  for (const ErrorSeries& s : series) {
    for (std::size_t i = 0; i < s.errors.size(); ++i) {
      errors << s.trajectory_id << ',' << to_string(s.cls) << ',' << s.timesteps[i] << ',' << fmt(s.errors[i]) << '\n';
      per_class[s.cls].first += s.errors[i];
      ++per_class[s.cls].second;
    }
    summary << s.trajectory_id << ',' << to_string(s.cls) << ',' << s.horizon << ',' << s.errors.size() << ','
            << fmt(s.mean()) << ',' << s.reinitializations << '\n';
  }
  for (const auto& [cls, acc] : per_class) {
    std::cout << to_string(cls) << ": mean error " << fmt(acc.second ? acc.first / static_cast<double>(acc.second) : 0.0)
              << " m over " << acc.second << " predictions\n";
  }
  return 0;
}

int cmd_compare(const RunConfig& c) {
  validate_common(c);
  const SceneDescription scene = load_scene(c.scene);
  const std::vector<Trajectory> corpus = load_trajectories(c.trajectories);
  const std::vector<Trajectory> test = load_trajectories(c.test);
  const fs::path out = require_output_dir(c);
  fs::remove(out / "FAILED");
  const PotentialCostMap map = cost_map_for(c, scene);
  const std::vector<Vec2> dests = list_destinations(scene);
  const LearningConfig lc = learning_config(c);
  const ModelSetup proposed = make_proposed(map, dests, c.tau, c.epsilon_itm, lc);
  const ModelSetup baseline = make_baseline_setup(map, dests, c.tau, c.epsilon_itm, lc);
  ComparisonOptions opts;
  opts.horizon = c.horizon;
  opts.training_sizes = c.sizes;
  opts.zero_vs_full = !c.no_zero_full;
  opts.train.label_goals = !c.no_goal_labels;
  ComparisonReport report;
  try {
    run_comparison(report, proposed, baseline, corpus, test, map, opts,
                   [](const std::string& m) { std::cout << m << '\n'; });
  } catch (const std::exception& e) {
    export_report(report, out);
    std::ofstream(out / "FAILED") << e.what() << '\n';
    throw;
  }
  export_report(report, out);
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << '\n';
  for (const ClassResult& r : report.results) {
    std::cout << r.preset << ' ' << to_string(r.cls) << ": proposed " << fmt(r.mean_error_proposed) << " m, baseline "
              << fmt(r.mean_error_baseline) << " m, combined p " << fmt(r.combined_p) << '\n';
  }
  std::cout << "report -> " << out.string() << '\n';
  return 0;
}

int cmd_synth(const RunConfig& c) {
  if (c.synth_kind != "street" && c.synth_kind != "corridor") throw InputError("--kind must be street or corridor");
  if (!(c.tau > 0.0)) throw InputError("--tau must be > 0");
  const fs::path out = require_output_dir(c);
  synthetic::WalkConfig wc;
  wc.noise_sigma = c.tau / 4.0;
  std::vector<Trajectory> train, test;
  SceneDescription scene;
  if (c.synth_kind == "street") {
    scene = synthetic::street_scene();
    train = synthetic::legal_trajectories(c.train_count, true, wc, c.seed);
    test = synthetic::legal_trajectories(c.test_count, false, wc, c.seed + 1, 1000);
    const auto ill = synthetic::illegal_trajectories(c.test_count, wc, c.seed + 2, 2000);
    test.insert(test.end(), ill.begin(), ill.end());
  } else {
    scene = synthetic::corridor_scene();
    train = synthetic::corridor_trajectories(c.train_count, true, wc, c.seed);
    test = synthetic::corridor_trajectories(c.test_count, false, wc, c.seed + 1, 1000);
  }
  save_scene(scene, out / "scene.txt");
  save_trajectories(train, out / "train.csv");
  save_trajectories(test, out / "test.csv");
  std::cout << "wrote scene.txt, train.csv (" << train.size() << "), test.csv (" << test.size() << ") to "
            << out.string() << '\n';
  return 0;
}

void add_params(CLI::App* sub, RunConfig& c) {
  sub->add_option("--tau", c.tau, "ITM insertion threshold and prior grid spacing (m)");
  sub->add_option("--epsilon-itm", c.epsilon_itm, "ITM winner adaptation rate");
  sub->add_option("--epsilon", c.epsilon, "cost-difference threshold of the transition seed");
  sub->add_option("--sigma-obs", c.sigma_obs, "observation std-dev (m), default tau/2");
  sub->add_option("--bw-learning-rate", c.bw_learning_rate, "incremental Baum-Welch rate in (0, 1]");
  sub->add_option("--dwell-threshold", c.dwell_threshold, "timesteps at one node that make it a goal");
  sub->add_option("--pi0", c.pi0, "baseline prior seed");
  sub->add_option("--a0", c.a0, "baseline transition seed");
  sub->add_option("--resolution", c.resolution, "cost map cell size (m)");
  sub->add_option("--time", c.time, "timestep selecting active obstacles");
  sub->add_option("--cost-map", c.cost_map, "precomputed cost map (binary); default: computed from the scene");
  sub->add_flag("--no-goal-labels", c.no_goal_labels, "train every goal's states on every sequence");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growing HMM pedestrian prediction"};
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
  app.require_subcommand(1);
  RunConfig c;

  auto* build = app.add_subcommand("build-map", "compute the potential cost map of a scene");
  build->add_option("--scene", c.scene, "scene file")->required();
  build->add_option("--resolution", c.resolution, "cell size (m)");
  build->add_option("--time", c.time, "timestep selecting active obstacles");
  build->add_option("--output-dir", c.output_dir, "output directory")->required();

  auto* trn = app.add_subcommand("train", "build the prior topology and train on a trajectory corpus");
  trn->add_option("--scene", c.scene, "scene file")->required();
  trn->add_option("--trajectories", c.trajectories, "training CSV (omit for an untrained model)");
  trn->add_option("--kind", c.kind, "proposed or baseline");
  trn->add_option("--output-dir", c.output_dir, "output directory")->required();
  add_params(trn, c);

  auto* pred = app.add_subcommand("predict", "write the filtering and prediction trace of one trajectory");
  pred->add_option("--model", c.model, "model file")->required();
  pred->add_option("--trajectories", c.trajectories, "trajectory CSV")->required();
  pred->add_option("--id", c.trajectory_id, "trajectory id")->required();
  pred->add_option("--horizon", c.horizon, "prediction horizon (timesteps)");
  pred->add_option("--output-dir", c.output_dir, "output directory")->required();

  auto* ev = app.add_subcommand("evaluate", "prediction errors of a model on a test set");
  ev->add_option("--model", c.model, "model file")->required();
  ev->add_option("--trajectories", c.trajectories, "test CSV")->required();
  ev->add_option("--horizon", c.horizon, "prediction horizon (timesteps)");
  ev->add_option("--output-dir", c.output_dir, "output directory")->required();

  auto* cmp = app.add_subcommand("compare", "train proposed and baseline models and compare them");
  cmp->add_option("--scene", c.scene, "scene file")->required();
  cmp->add_option("--trajectories", c.trajectories, "training CSV")->required();
  cmp->add_option("--test", c.test, "test CSV")->required();
  cmp->add_option("--horizon", c.horizon, "prediction horizon (timesteps)");
  cmp->add_option("--sizes", c.sizes, "training-set sizes")->delimiter(',');
  cmp->add_flag("--no-zero-full", c.no_zero_full, "skip the untrained-vs-fully-trained preset");
  cmp->add_option("--output-dir", c.output_dir, "output directory")->required();
  add_params(cmp, c);

  auto* syn = app.add_subcommand("synth", "generate a synthetic scene with training and test trajectories");
  syn->add_option("--kind", c.synth_kind, "street or corridor");
  syn->add_option("--train-count", c.train_count, "training trajectories");
  syn->add_option("--test-count", c.test_count, "test trajectories per class");
  syn->add_option("--seed", c.seed, "generator seed");
  syn->add_option("--tau", c.tau, "noise is tau/4");
  syn->add_option("--output-dir", c.output_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*build) return cmd_build_map(c);
    if (*trn) return cmd_train(c);
    if (*pred) return cmd_predict(c);
    if (*ev) return cmd_evaluate(c);
    if (*cmp) return cmd_compare(c);
    if (*syn) return cmd_synth(c);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
