#include "pedghmm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "pedghmm/delaunay.hpp"
#include "pedghmm/error.hpp"
#include "pedghmm/stats.hpp"
#include "pedghmm/text.hpp"

namespace pedghmm {

ModelSetup make_proposed(const PotentialCostMap& map, std::span<const Vec2> destinations, double tau,
                         double epsilon_itm, const LearningConfig& config) {
  TopologicalMap topo = build_prior_topology(map, destinations, tau, epsilon_itm);
  GhmmModel model = init_model_from_topology(topo, map, goals_from_pinned(topo), config);
  return {std::move(model), std::move(topo)};
}

GhmmModel make_baseline(const TopologicalMap& topo, const GoalSet& goals, double pi0, double a0,
                        const LearningConfig& config) {
  LearningConfig c = config;
  c.pi0 = pi0;
  c.a0 = a0;
  return init_preset_model(topo, goals, c);
}

ModelSetup make_baseline_setup(const PotentialCostMap& map, std::span<const Vec2> destinations, double tau,
                               double epsilon_itm, const LearningConfig& config) {
  TopologicalMap topo(map.extent(), tau, epsilon_itm);
  std::vector<Vec2> points;
  for (const Vec2& d : destinations) {
    if (!map.contains(d)) throw OutOfBoundsError("destination outside the cost map extent");
    const bool merged = std::any_of(points.begin(), points.end(), [&](Vec2 p) { return distance(p, d) < tau / 2.0; });
    if (!merged) points.push_back(d);
  }
  if (points.empty()) throw InputError("baseline needs at least one destination");
  std::vector<NodeId> ids;
  for (const Vec2& p : points) ids.push_back(topo.add_node(p, true));
  if (points.size() >= 2) {
    for (const auto& [a, b] : delaunay_edges(points)) topo.add_edge(ids[a], ids[b]);
  }
  GhmmModel model = make_baseline(topo, goals_from_pinned(topo), config.pi0, config.a0, config);
  return {std::move(model), std::move(topo)};
}

std::size_t TrainReport::trained() const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.ok; }));
}

std::size_t TrainReport::skipped() const { return records.size() - trained(); }

std::optional<GoalId> label_goal(const GhmmModel& model, std::span<const Vec2> positions, double tau) {
  if (positions.empty() || model.goals().empty()) return std::nullopt;
  const Vec2 last = positions.back();
  std::optional<GoalId> best;
  double best_d = tau;
  for (const Goal& g : model.goals().goals) {
    const double d = distance(g.point, last);
    if (d <= best_d) {
      best_d = d;
      best = g.id;
    }
  }
  if (best) return best;

  // Heading over the second half of the sequence.
  const Vec2 from = positions[positions.size() / 2 == positions.size() - 1 ? 0 : positions.size() / 2];
  const Vec2 heading = last - from;
  const double hn = norm(heading);
  if (!(hn > 1e-9)) return std::nullopt;
  double best_cos = -2.0;
  for (const Goal& g : model.goals().goals) {
    const Vec2 to = g.point - last;
    const double tn = norm(to);
    if (!(tn > 0.0)) continue;
    const double c = dot(heading, to) / (hn * tn);
    if (c > best_cos) {
      best_cos = c;
      best = g.id;
    }
  }
  return best;
}

TrainReport train(ModelSetup& setup, std::span<const Trajectory> corpus, const PotentialCostMap& map,
                  const TrainOptions& options, const std::function<void(const TrainRecord&)>& progress) {
  TrainReport report;
  const double rate = options.rate.value_or(setup.model.config().bw_learning_rate);
  for (const Trajectory& tr : corpus) {
    TrainRecord rec;
    rec.trajectory_id = tr.id;
    try {
      validate(tr);
      ModelSetup work = setup;
      work.topology.begin_track();
      const std::vector<Vec2> positions = tr.positions();
      for (const Vec2& p : positions) {
        const TopologyDelta delta = itm_update(work.topology, p);
        work.model.apply_delta(delta, &map);
      }
      const std::size_t known = work.model.goals().size();
      rec.goals_added = work.model.discover_goals(work.topology);
      for (std::size_t k = known; k < work.model.goals().size(); ++k) {
        work.topology.set_pinned(work.model.goals().goals[k].node);
      }
      ObservationSequence seq{positions, std::nullopt};
      if (options.label_goals) seq.goal = label_goal(work.model, positions, work.topology.tau());
      rec.goal = seq.goal;
      work.model.learn(seq, rate);
      work.model.check_invariants(1e-9);
      rec.loglik = sequence_loglik(work.model, {positions, std::nullopt});
      rec.nodes = work.topology.node_count();
      rec.states = work.model.state_count();
      setup = std::move(work);
    } catch (const Error& e) {
      rec.ok = false;
      rec.message = e.what();
      rec.nodes = setup.topology.node_count();
      rec.states = setup.model.state_count();
    }
    if (progress) progress(rec);
    report.records.push_back(std::move(rec));
  }
  return report;
}

double ErrorSeries::mean() const {
  if (errors.empty()) return 0.0;
  double s = 0.0;
  for (double e : errors) s += e;
  return s / static_cast<double>(errors.size());
}

ErrorSeries evaluate_one(const GhmmModel& model, const Trajectory& tr, std::int64_t horizon) {
  if (horizon < 1) throw InputError("evaluation horizon must be >= 1");
  validate(tr);
  ErrorSeries out;
  out.trajectory_id = tr.id;
  out.cls = tr.cls;
  out.horizon = horizon;
  std::map<std::int64_t, Vec2> truth;
  for (const TrajectorySample& s : tr.samples) truth.emplace(s.t, s.position);

  const Belief prior = initial_belief(model);
  Belief belief = prior;
  for (std::size_t k = 0; k < tr.samples.size(); ++k) {
    const TrajectorySample& s = tr.samples[k];
    if (k > 0) {
      for (std::int64_t g = tr.samples[k - 1].t + 1; g < s.t; ++g) belief = propagate(model, belief);
    }
    try {
      belief = filter_update(model, belief, s.position);
    } catch (const DegenerateBeliefError&) {
      ++out.reinitializations;
      try {
        belief = filter_update(model, prior, s.position);
      } catch (const DegenerateBeliefError&) {
        belief = prior;
      }
    }
    belief.timestep = s.t;
    auto it = truth.find(s.t + horizon);
    if (it == truth.end()) continue;
    const PredictionResult r = predict(model, belief, horizon);
    out.timesteps.push_back(s.t);
    out.errors.push_back(prediction_error(r.expected_position, it->second));
  }
  return out;
}

std::vector<ErrorSeries> evaluate(const GhmmModel& model, std::span<const Trajectory> test, std::int64_t horizon) {
  if (horizon < 1) throw InputError("evaluation horizon must be >= 1");
  std::vector<ErrorSeries> out;
  out.reserve(test.size());
  for (const Trajectory& tr : test) out.push_back(evaluate_one(model, tr, horizon));
  return out;
}

const ClassResult* ComparisonReport::find(const std::string& preset, TrajectoryClass cls) const {
  for (const ClassResult& r : results) {
    if (r.preset == preset && r.cls == cls) return &r;
  }
  return nullptr;
}

namespace {

void compare_series(const std::string& preset, std::size_t proposed_n, std::size_t baseline_n,
                    const std::vector<ErrorSeries>& proposed, const std::vector<ErrorSeries>& baseline,
                    ComparisonReport& report) {
  for (TrajectoryClass cls : {TrajectoryClass::kLegal, TrajectoryClass::kIllegal}) {
    ClassResult r;
    r.preset = preset;
    r.proposed_training = proposed_n;
    r.baseline_training = baseline_n;
    r.cls = cls;
    double sum_p = 0.0, sum_b = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < proposed.size(); ++k) {
      const ErrorSeries& a = proposed[k];
      const ErrorSeries& b = baseline[k];
      if (a.cls != cls) continue;
      for (std::size_t i = 0; i < a.errors.size(); ++i) {
        sum_p += a.errors[i];
        sum_b += b.errors[i];
      }
      count += a.errors.size();
      if (a.errors.size() < 2) {
        report.warnings.push_back(preset + ": trajectory " + a.trajectory_id + " has fewer than 2 predictions");
        continue;
      }
      r.pvalues.emplace_back(a.trajectory_id, paired_test(a.errors, b.errors));
    }
    if (count > 0) {
      r.mean_error_proposed = sum_p / static_cast<double>(count);
      r.mean_error_baseline = sum_b / static_cast<double>(count);
    }
    if (r.pvalues.empty()) {
      if (count > 0) report.warnings.push_back(preset + ": no testable " + std::string(to_string(cls)) + " trajectory");
      r.combined_p = 1.0;
    } else {
      std::vector<double> ps;
      for (const auto& [id, p] : r.pvalues) ps.push_back(p);
      r.combined_p = combine_pvalues(ps, &report.warnings);
    }
    report.results.push_back(std::move(r));
  }
}

}  // namespace

ComparisonReport run_comparison(const ModelSetup& proposed, const ModelSetup& baseline,
                                std::span<const Trajectory> corpus, std::span<const Trajectory> test,
                                const PotentialCostMap& map, const ComparisonOptions& options,
                                const std::function<void(const std::string&)>& log) {
  ComparisonReport report;
  run_comparison(report, proposed, baseline, corpus, test, map, options, log);
  return report;
}

void run_comparison(ComparisonReport& report, const ModelSetup& proposed, const ModelSetup& baseline,
                    std::span<const Trajectory> corpus, std::span<const Trajectory> test, const PotentialCostMap& map,
                    const ComparisonOptions& options, const std::function<void(const std::string&)>& log) {
  if (options.horizon < 1) throw InputError("comparison horizon must be >= 1");
  auto say = [&](const std::string& m) {
    if (log) log(m);
  };
  report = ComparisonReport{};
  report.horizon = options.horizon;

  std::vector<std::size_t> sizes;
  for (std::size_t s : options.training_sizes) sizes.push_back(std::min(s, corpus.size()));
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  const std::size_t full = corpus.size();

  ModelSetup prop = proposed;
  ModelSetup base = baseline;
  std::size_t trained = 0;
  std::map<std::size_t, std::vector<ErrorSeries>> prop_eval, base_eval;
  auto advance_to = [&](std::size_t n) {
    if (n > trained) {
      const auto chunk = corpus.subspan(trained, n - trained);
      const TrainReport rp = train(prop, chunk, map, options.train);
      const TrainReport rb = train(base, chunk, map, options.train);
      for (const TrainReport* r : {&rp, &rb}) {
        for (const TrainRecord& rec : r->records) {
          if (!rec.ok) report.warnings.push_back("training skipped trajectory " + rec.trajectory_id + ": " + rec.message);
        }
      }
      trained = n;
      say("trained on " + std::to_string(n) + " trajectories: proposed " + std::to_string(prop.topology.node_count()) +
          " nodes, baseline " + std::to_string(base.topology.node_count()) + " nodes");
    }
  };
  auto eval_at = [&](std::size_t n, bool want_prop, bool want_base) {
    if (n < trained) throw InvariantError("comparison presets must be evaluated in training order");
    advance_to(n);
    if (want_prop && !prop_eval.contains(n)) prop_eval[n] = evaluate(prop.model, test, options.horizon);
    if (want_base && !base_eval.contains(n)) base_eval[n] = evaluate(base.model, test, options.horizon);
  };

  // Untrained snapshot first: training below is sequential and in place.
  if (options.zero_vs_full) eval_at(0, true, false);
  for (std::size_t n : sizes) {
    eval_at(n, true, true);
    const std::string preset = std::to_string(n);
    compare_series(preset, n, n, prop_eval[n], base_eval[n], report);
    report.curves.push_back({preset, "proposed", n, prop_eval[n]});
    report.curves.push_back({preset, "baseline", n, base_eval[n]});
    say("preset " + preset + " evaluated");
  }
  if (options.zero_vs_full) {
    const std::vector<ErrorSeries> untrained = prop_eval.at(0);
    eval_at(full, false, true);
    compare_series("0-full", 0, full, untrained, base_eval[full], report);
    report.curves.push_back({"0-full", "proposed", 0, untrained});
    report.curves.push_back({"0-full", "baseline", full, base_eval[full]});
    say("preset 0-full evaluated");
  }
}

void export_report(const ComparisonReport& report, const std::filesystem::path& dir) {
  using text::format_double;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw InputError("cannot write " + (dir / name).string());
    return out;
  };
  {
    std::ofstream out = open("pvalues.csv");
    out << "preset,class,proposed_training,baseline_training,horizon,trajectories,mean_error_proposed,"
           "mean_error_baseline,combined_p\n";
    for (const ClassResult& r : report.results) {
      out << r.preset << ',' << to_string(r.cls) << ',' << r.proposed_training << ',' << r.baseline_training << ','
          << report.horizon << ',' << r.pvalues.size() << ',' << format_double(r.mean_error_proposed) << ','
          << format_double(r.mean_error_baseline) << ',' << format_double(r.combined_p) << '\n';
    }
  }
  {
    std::ofstream out = open("trajectory_pvalues.csv");
    out << "preset,class,trajectory,p\n";
    for (const ClassResult& r : report.results) {
      for (const auto& [id, p] : r.pvalues) {
        out << r.preset << ',' << to_string(r.cls) << ',' << id << ',' << format_double(p) << '\n';
      }
    }
  }
  {
    std::ofstream out = open("curves.csv");
    out << "preset,model,training,class,trajectory,t,error\n";
    for (const CurveSet& c : report.curves) {
      for (const ErrorSeries& s : c.series) {
        for (std::size_t i = 0; i < s.errors.size(); ++i) {
          out << c.preset << ',' << c.model << ',' << c.training << ',' << to_string(s.cls) << ','
              << s.trajectory_id << ',' << s.timesteps[i] << ',' << format_double(s.errors[i]) << '\n';
        }
      }
    }
  }
}

}  // namespace pedghmm
