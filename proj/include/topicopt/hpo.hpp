#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "topicopt/common.hpp"

namespace topicopt {

enum class DomainKind { categorical_numeric, integer_range };

struct ParamDomain {
  std::string name;
  DomainKind kind = DomainKind::categorical_numeric;
  std::vector<double> values;  // categorical_numeric
  std::int64_t lo = 0;         // integer_range, inclusive
  std::int64_t hi = 0;

  static ParamDomain categorical(std::string name, std::vector<double> values);
  static ParamDomain integer(std::string name, std::int64_t lo, std::int64_t hi);

  std::size_t cardinality() const;
  /// Every value of the domain in order.
  std::vector<double> expand() const;
  bool contains(double v) const;
  void validate() const;
};

struct SearchSpace {
  std::vector<ParamDomain> domains;

  /// Throws ConfigError on an empty domain, lo > hi or a repeated name.
  void validate() const;
  std::size_t grid_size() const;
};

using ParamMap = std::map<std::string, double>;

enum class Direction { maximize, minimize };

struct Objective {
  std::string name;
  Direction direction = Direction::maximize;

  /// Oriented so that larger is better.
  double oriented(double v) const { return direction == Direction::maximize ? v : -v; }
};

/// Fixed orientation table: coherence and diversity maximise, perplexity
/// minimises. Unknown names are a ConfigError.
Objective objective_from_name(const std::string& name);
std::vector<Objective> standard_objectives();

enum class TrialStatus { ok, failed };

struct Trial {
  std::size_t id = 0;
  ParamMap params;
  std::vector<double> objectives;
  std::uint64_t seed = 0;
  TrialStatus status = TrialStatus::ok;
  std::string error;
  double wall_time_ms = 0.0;
};

/// Returns one value per objective. Exceptions and non-finite values mark
/// the trial failed.
using Evaluator = std::function<std::vector<double>(const ParamMap&, std::uint64_t seed)>;

/// Cartesian product, first domain varying slowest.
std::vector<ParamMap> grid_iter(const SearchSpace& space);

struct SooResult {
  std::optional<Trial> best;
  std::vector<Trial> trials;  // grid order
};

/// Evaluates every grid point (up to `jobs` at a time; results are merged in
/// grid order) and returns the first trial with the best oriented value of
/// the evaluator's first output.
SooResult run_soo(const SearchSpace& space, const Evaluator& evaluator, const Objective& objective,
                  std::uint64_t seed, std::size_t jobs = 1);

/// Successful trials by descending oriented objective `index`, stable.
std::vector<Trial> top_k_trials(const std::vector<Trial>& log, std::size_t k, const Objective& objective,
                                std::size_t index = 0);

/// a dominates b: no worse on every objective and better on at least one.
bool dominates(const std::vector<double>& a, const std::vector<double>& b, const std::vector<Objective>& objectives);

/// Indices of the non-dominated points, ascending.
std::vector<std::size_t> pareto_front_indices(const std::vector<std::vector<double>>& points,
                                              const std::vector<Objective>& objectives);
/// Non-dominated successful trials, in log order.
std::vector<Trial> pareto_front(const std::vector<Trial>& trials, const std::vector<Objective>& objectives);

/// Front index of every point (0 = non-dominated) by repeated peeling.
std::vector<std::size_t> non_domination_ranks(const std::vector<std::vector<double>>& points,
                                              const std::vector<Objective>& objectives);

/// Volume dominated by `points` and bounded by `reference`, objectives
/// oriented per `objectives`. Exact (recursive slicing); meant for small sets.
double hypervolume(const std::vector<std::vector<double>>& points, const std::vector<Objective>& objectives,
                   const std::vector<double>& reference);

/// Greedily picks k points, each maximising the hypervolume of the chosen
/// set. The reference point is the per-objective worst value pushed out by
/// 10%. Returns positions in pick order.
std::vector<std::size_t> greedy_hypervolume_subset(const std::vector<std::vector<double>>& points,
                                                   const std::vector<Objective>& objectives, std::size_t k);

struct ScalingBound {
  double min = 0.0;
  double max = 0.0;
};

/// Euclidean distance of each already-scaled row to (1, ..., 1).
std::vector<double> ideal_distances(const std::vector<std::vector<double>>& scaled);

struct IdealSelection {
  std::size_t index = 0;                    // into the front
  std::vector<ScalingBound> bounds;         // raw per-objective range over the front
  std::vector<std::vector<double>> scaled;  // larger is better, in [0, 1]
  std::vector<double> distances;
  Warnings warnings;
};

/// Orients every objective to maximise, min-max scales each over the front
/// (a constant objective scales to 1 with a warning) and picks the member
/// closest to (1, ..., 1); ties go to the lowest trial id.
IdealSelection ideal_point_select(const std::vector<Trial>& front, const std::vector<Objective>& objectives);

struct ParetoSet {
  std::vector<Trial> members;
  Trial selected;
  std::vector<ScalingBound> scaling_bounds;
  Warnings warnings;
};

struct TPEConfig {
  double gamma = 0.25;
  std::size_t n_candidates = 24;
  std::size_t n_startup = 10;
  std::size_t n_trials = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

ParamMap sample_uniform(const SearchSpace& space, Rng& rng);

/// Splits successful history into the best ceil(gamma * n) ("promising") and
/// the rest, fits per-parameter densities l and g, draws n_candidates from l
/// and returns the one maximising log l - log g.
///
/// Promising set: one objective, best oriented values; several, whole
/// non-domination ranks in order, the overflowing rank thinned by
/// greedy_hypervolume_subset. Densities: categorical values are
/// Laplace-smoothed frequencies; integers are an equal mixture of Gaussians
/// centred on the observations, bandwidth max((hi - lo) / 10, 1), truncated to
/// [lo - 0.5, hi + 0.5] and rounded; an empty group is uniform.
/// Seeded by mix_seed(seed, history size). Empty history: uniform draw.
ParamMap tpe_suggest(const std::vector<Trial>& history, const SearchSpace& space,
                     const std::vector<Objective>& objectives, const TPEConfig& config);

struct MooResult {
  ParetoSet pareto;
  std::vector<Trial> trials;
};

/// n_startup uniform trials, then TPE suggestions up to n_trials. Repeated
/// parameter maps reuse the earlier evaluation.
MooResult run_moo(const SearchSpace& space, const Evaluator& evaluator, const std::vector<Objective>& objectives,
                  const TPEConfig& config);

/// n_trials uniform draws; the baseline TPE is compared against.
MooResult run_random(const SearchSpace& space, const Evaluator& evaluator, const std::vector<Objective>& objectives,
                     std::size_t n_trials, std::uint64_t seed);

/// Search spaces of the three models for the exhaustive grid.
SearchSpace cluster_model_space();  // n_gram x n_clusters x n_components x n_neighbors
SearchSpace corex_space();          // anchor_strength x n_hidden
SearchSpace lda_space();            // n_topics x alpha x eta
/// Unit-granularity space for TPE on the cluster model.
SearchSpace cluster_model_moo_space();

/// Discrete tri-objective test problem on x1, x2, x3 in [0, 20], all
/// minimised: angles t1 = x1/20 * pi/2, t2 = x2/20 * pi/2 and distance term
/// g = 4 (x3/20 - 0.5)^2 give
///   f1 = (1+g) cos t1 cos t2,  f2 = (1+g) cos t1 sin t2,  f3 = (1+g) sin t1.
/// The optimal front (g = 0) is the octant of the unit sphere.
SearchSpace benchmark_space();
std::vector<Objective> benchmark_objectives();
std::vector<double> benchmark_evaluate(const ParamMap& params);
/// Hypervolume reference point for the benchmark.
std::vector<double> benchmark_reference();

std::string trial_to_json(const Trial& trial);  // one line, no newline
std::string trials_to_ndjson(const std::vector<Trial>& trials);
std::vector<Trial> trials_from_ndjson(std::string_view text);
std::string pareto_to_json(const ParetoSet& set, const std::vector<Objective>& objectives);
std::string soo_to_json(const SooResult& result, const Objective& objective, std::size_t top_k);

}  // namespace topicopt
