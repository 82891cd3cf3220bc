#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedghmm/cost_map.hpp"
#include "pedghmm/ghmm.hpp"
#include "pedghmm/inference.hpp"
#include "pedghmm/topology.hpp"
#include "pedghmm/trajectory.hpp"

namespace pedghmm {

/// A model and the topology it mirrors.
struct ModelSetup {
  GhmmModel model;
  TopologicalMap topology;
};

/// Prior topology over the cost map, cost-seeded model, one goal per
/// destination.
ModelSetup make_proposed(const PotentialCostMap& map, std::span<const Vec2> destinations, double tau,
                         double epsilon_itm, const LearningConfig& config);

/// Preset-prior model over the given topology: constant pi0 and a0 before
/// normalization, otherwise the same structure as the cost-seeded model.
GhmmModel make_baseline(const TopologicalMap& topo, const GoalSet& goals, double pi0, double a0,
                        const LearningConfig& config);

/// Baseline starting point: only the (pinned) destinations as nodes,
/// connected by their Delaunay edges. The map grows from data.
ModelSetup make_baseline_setup(const PotentialCostMap& map, std::span<const Vec2> destinations, double tau,
                               double epsilon_itm, const LearningConfig& config);

struct TrainOptions {
  /// Overrides the configured Baum-Welch rate.
  std::optional<double> rate;
  /// Tag each sequence with the goal it heads for, so learning only touches
  /// that goal's states.
  bool label_goals = true;
};

struct TrainRecord {
  std::string trajectory_id;
  bool ok = true;
  std::string message;
  std::optional<GoalId> goal;
  std::size_t nodes = 0;
  std::size_t states = 0;
  std::size_t goals_added = 0;
  double loglik = 0.0;
};

struct TrainReport {
  std::vector<TrainRecord> records;
  std::size_t trained() const;
  std::size_t skipped() const;
};

/// Goal a training sequence is taken to head for: the nearest goal within
/// tau of its last sample, otherwise the goal best aligned with its final
/// heading. None when the sequence does not move.
std::optional<GoalId> label_goal(const GhmmModel& model, std::span<const Vec2> positions, double tau);

/// Sequential training. Per trajectory: ITM update plus state-space update
/// for every sample, goal discovery (discovered goals are pinned), then one
/// incremental Baum-Welch step over the sequence. A trajectory that fails
/// leaves the setup untouched and is reported in the returned records.
TrainReport train(ModelSetup& setup, std::span<const Trajectory> corpus, const PotentialCostMap& map,
                  const TrainOptions& options = {},
                  const std::function<void(const TrainRecord&)>& progress = nullptr);

struct ErrorSeries {
  std::string trajectory_id;
  TrajectoryClass cls = TrajectoryClass::kLegal;
  std::int64_t horizon = 0;
  /// Timestep of the belief each prediction was made from.
  std::vector<std::int64_t> timesteps;
  std::vector<double> errors;
  /// Times the belief degenerated and was restarted from the prior.
  std::size_t reinitializations = 0;

  double mean() const;
};

/// Filters each trajectory from the prior and predicts `horizon` steps ahead
/// at every sample that has ground truth at t + horizon. Timestep gaps are
/// bridged by prediction. Read-only on the model.
std::vector<ErrorSeries> evaluate(const GhmmModel& model, std::span<const Trajectory> test, std::int64_t horizon);
ErrorSeries evaluate_one(const GhmmModel& model, const Trajectory& trajectory, std::int64_t horizon);

struct ComparisonOptions {
  std::int64_t horizon = 75;
  /// Capped to the corpus size; duplicates after capping are dropped.
  std::vector<std::size_t> training_sizes{0, 50, 100, 250};
  /// Untrained proposed model against the baseline trained on the full corpus.
  bool zero_vs_full = true;
  TrainOptions train;
};

struct ClassResult {
  std::string preset;
  std::size_t proposed_training = 0;
  std::size_t baseline_training = 0;
  TrajectoryClass cls = TrajectoryClass::kLegal;
  /// (trajectory id, one-sided p of proposed error < baseline error).
  std::vector<std::pair<std::string, double>> pvalues;
  double combined_p = 1.0;
  double mean_error_proposed = 0.0;
  double mean_error_baseline = 0.0;
};

struct CurveSet {
  std::string preset;
  std::string model;  // "proposed" or "baseline"
  std::size_t training = 0;
  std::vector<ErrorSeries> series;
};

struct ComparisonReport {
  std::int64_t horizon = 0;
  std::vector<ClassResult> results;
  std::vector<CurveSet> curves;
  std::vector<std::string> warnings;

  const ClassResult* find(const std::string& preset, TrajectoryClass cls) const;
};

/// Trains both models on growing prefixes of `corpus` and compares them on
/// `test` per trajectory class.
ComparisonReport run_comparison(const ModelSetup& proposed, const ModelSetup& baseline,
                                std::span<const Trajectory> corpus, std::span<const Trajectory> test,
                                const PotentialCostMap& map, const ComparisonOptions& options,
                                const std::function<void(const std::string&)>& log = nullptr);

/// Same, filling `report` as presets complete so a failure leaves the
/// finished part in place.
void run_comparison(ComparisonReport& report, const ModelSetup& proposed, const ModelSetup& baseline,
                    std::span<const Trajectory> corpus, std::span<const Trajectory> test, const PotentialCostMap& map,
                    const ComparisonOptions& options, const std::function<void(const std::string&)>& log = nullptr);

/// Writes pvalues.csv (one row per preset and class), trajectory_pvalues.csv
/// and curves.csv (one row per timestep per model). Throws InputError when
/// the directory cannot be written.
void export_report(const ComparisonReport& report, const std::filesystem::path& dir);

}  // namespace pedghmm
