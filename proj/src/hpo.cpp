#include "topicopt/hpo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <set>
#include <thread>

#include <json.hpp>

namespace topicopt {

using nlohmann::json;

// ---------------------------------------------------------------------------
// domains

ParamDomain ParamDomain::categorical(std::string name, std::vector<double> values) {
  ParamDomain d;
  d.name = std::move(name);
  d.kind = DomainKind::categorical_numeric;
  d.values = std::move(values);
  return d;
}

ParamDomain ParamDomain::integer(std::string name, std::int64_t lo, std::int64_t hi) {
  ParamDomain d;
  d.name = std::move(name);
  d.kind = DomainKind::integer_range;
  d.lo = lo;
  d.hi = hi;
  return d;
}

std::size_t ParamDomain::cardinality() const {
  if (kind == DomainKind::categorical_numeric) return values.size();
  return hi < lo ? 0 : static_cast<std::size_t>(hi - lo + 1);
}

std::vector<double> ParamDomain::expand() const {
  if (kind == DomainKind::categorical_numeric) return values;
  std::vector<double> out;
  for (std::int64_t v = lo; v <= hi; ++v) out.push_back(static_cast<double>(v));
  return out;
}

bool ParamDomain::contains(double v) const {
  if (kind == DomainKind::categorical_numeric) return std::find(values.begin(), values.end(), v) != values.end();
  return v == std::floor(v) && v >= static_cast<double>(lo) && v <= static_cast<double>(hi);
}

void ParamDomain::validate() const {
  if (name.empty()) throw ConfigError("search space domain without a name");
  if (kind == DomainKind::categorical_numeric) {
    if (values.empty()) throw ConfigError("search space domain '" + name + "' is empty");
    std::set<double> seen;
    for (double v : values) {
      if (!std::isfinite(v)) throw ConfigError("search space domain '" + name + "' has a non-finite value");
      if (!seen.insert(v).second) throw ConfigError("search space domain '" + name + "' repeats a value");
    }
  } else if (lo > hi) {
    throw ConfigError("search space domain '" + name + "' has lo > hi");
  }
}

void SearchSpace::validate() const {
  if (domains.empty()) throw ConfigError("search space has no domains");
  std::set<std::string> names;
  for (const auto& d : domains) {
    d.validate();
    if (!names.insert(d.name).second) throw ConfigError("search space repeats domain '" + d.name + "'");
  }
}

std::size_t SearchSpace::grid_size() const {
  std::size_t n = 1;
  for (const auto& d : domains) n *= d.cardinality();
  return n;
}

Objective objective_from_name(const std::string& name) {
  if (name == "coherence" || name == "diversity") return {name, Direction::maximize};
  if (name == "perplexity") return {name, Direction::minimize};
  throw ConfigError("unknown objective '" + name + "' (expected coherence, diversity or perplexity)");
}

std::vector<Objective> standard_objectives() {
  return {objective_from_name("coherence"), objective_from_name("diversity"), objective_from_name("perplexity")};
}

// ---------------------------------------------------------------------------
// grid search

std::vector<ParamMap> grid_iter(const SearchSpace& space) {
  space.validate();
  std::vector<std::vector<double>> axes;
  for (const auto& d : space.domains) axes.push_back(d.expand());
  std::vector<ParamMap> out;
  out.reserve(space.grid_size());
  std::vector<std::size_t> pos(axes.size(), 0);
  while (true) {
    ParamMap p;
    for (std::size_t i = 0; i < axes.size(); ++i) p[space.domains[i].name] = axes[i][pos[i]];
    out.push_back(std::move(p));
    std::size_t i = axes.size();
    while (i > 0) {
      --i;
      if (++pos[i] < axes[i].size()) break;
      pos[i] = 0;
      if (i == 0) return out;
    }
  }
}

namespace {

Trial evaluate_trial(std::size_t id, const ParamMap& params, const Evaluator& evaluator, std::uint64_t seed) {
  Trial t;
  t.id = id;
  t.params = params;
  t.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    t.objectives = evaluator(params, seed);
    for (double v : t.objectives)
      if (!std::isfinite(v)) throw DataError("objective is not finite");
  } catch (const std::exception& e) {
    t.status = TrialStatus::failed;
    t.error = e.what();
    t.objectives.clear();
  }
  t.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return t;
}

}  // namespace

SooResult run_soo(const SearchSpace& space, const Evaluator& evaluator, const Objective& objective,
                  std::uint64_t seed, std::size_t jobs) {
  const auto grid = grid_iter(space);
  SooResult r;
  r.trials.resize(grid.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, grid.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) r.trials[i] = evaluate_trial(i, grid[i], evaluator, seed);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) r.trials[i] = evaluate_trial(i, grid[i], evaluator, seed);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& t : r.trials) {
    if (t.status != TrialStatus::ok || t.objectives.empty()) continue;
    if (!r.best || objective.oriented(t.objectives[0]) > objective.oriented(r.best->objectives[0])) r.best = t;
  }
  return r;
}

std::vector<Trial> top_k_trials(const std::vector<Trial>& log, std::size_t k, const Objective& objective,
                                std::size_t index) {
  std::vector<Trial> ok;
  for (const auto& t : log)
    if (t.status == TrialStatus::ok && index < t.objectives.size()) ok.push_back(t);
  std::stable_sort(ok.begin(), ok.end(), [&](const Trial& a, const Trial& b) {
    return objective.oriented(a.objectives[index]) > objective.oriented(b.objectives[index]);
  });
  if (ok.size() > k) ok.resize(k);
  return ok;
}

// ---------------------------------------------------------------------------
// Pareto machinery

bool dominates(const std::vector<double>& a, const std::vector<double>& b, const std::vector<Objective>& objectives) {
  bool strictly = false;
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    const double x = objectives[i].oriented(a[i]), y = objectives[i].oriented(b[i]);
    if (x < y) return false;
    if (x > y) strictly = true;
  }
  return strictly;
}

std::vector<std::size_t> pareto_front_indices(const std::vector<std::vector<double>>& points,
                                              const std::vector<Objective>& objectives) {
  // A point can only be dominated by one that precedes it in descending
  // lexicographic order of oriented values, and by transitivity checking
  // against the front found so far is enough.
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto key = [&](std::size_t i) {
    std::vector<double> k;
    for (std::size_t j = 0; j < objectives.size(); ++j) k.push_back(objectives[j].oriented(points[i][j]));
    return k;
  };
  std::vector<std::vector<double>> keys;
  for (std::size_t i = 0; i < points.size(); ++i) keys.push_back(key(i));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
  std::vector<std::size_t> front;
  for (std::size_t i : order) {
    bool dominated = false;
    for (std::size_t f : front)
      if (dominates(points[f], points[i], objectives)) {
        dominated = true;
        break;
      }
    if (!dominated) front.push_back(i);
  }
  std::sort(front.begin(), front.end());
  return front;
}

std::vector<Trial> pareto_front(const std::vector<Trial>& trials, const std::vector<Objective>& objectives) {
  std::vector<const Trial*> ok;
  std::vector<std::vector<double>> points;
  for (const auto& t : trials)
    if (t.status == TrialStatus::ok && t.objectives.size() == objectives.size()) {
      ok.push_back(&t);
      points.push_back(t.objectives);
    }
  std::vector<Trial> out;
  for (std::size_t i : pareto_front_indices(points, objectives)) out.push_back(*ok[i]);
  return out;
}

std::vector<std::size_t> non_domination_ranks(const std::vector<std::vector<double>>& points,
                                              const std::vector<Objective>& objectives) {
  std::vector<std::size_t> rank(points.size(), 0);
  std::vector<std::size_t> remaining(points.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  for (std::size_t level = 0; !remaining.empty(); ++level) {
    std::vector<std::vector<double>> sub;
    for (std::size_t i : remaining) sub.push_back(points[i]);
    const auto front = pareto_front_indices(sub, objectives);
    std::vector<bool> in_front(remaining.size(), false);
    for (std::size_t f : front) in_front[f] = true;
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (in_front[i]) {
        rank[remaining[i]] = level;
      } else {
        next.push_back(remaining[i]);
      }
    }
    remaining = std::move(next);
  }
  return rank;
}

std::vector<double> ideal_distances(const std::vector<std::vector<double>>& scaled) {
  std::vector<double> out;
  for (const auto& row : scaled) {
    double s = 0.0;
    for (double v : row) s += (1.0 - v) * (1.0 - v);
    out.push_back(std::sqrt(s));
  }
  return out;
}

namespace {

/// Oriented min-max scaling of `points` over themselves.
std::vector<std::vector<double>> scale_oriented(const std::vector<std::vector<double>>& points,
                                                const std::vector<Objective>& objectives,
                                                std::vector<ScalingBound>* bounds, Warnings* warnings) {
  const std::size_t m = objectives.size();
  std::vector<std::vector<double>> scaled(points.size(), std::vector<double>(m, 1.0));
  for (std::size_t j = 0; j < m; ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : points) {
      lo = std::min(lo, p[j]);
      hi = std::max(hi, p[j]);
    }
    if (bounds != nullptr) bounds->push_back({lo, hi});
    if (!(hi > lo)) {
      warn(warnings, "objective '" + objectives[j].name + "' is constant over the front; scaled to 1");
      continue;
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double v = (points[i][j] - lo) / (hi - lo);
      scaled[i][j] = objectives[j].direction == Direction::maximize ? v : 1.0 - v;
    }
  }
  return scaled;
}

}  // namespace

IdealSelection ideal_point_select(const std::vector<Trial>& front, const std::vector<Objective>& objectives) {
  if (front.empty()) throw DataError("ideal-point selection needs a non-empty front");
  std::vector<std::vector<double>> points;
  for (const auto& t : front) {
    if (t.objectives.size() != objectives.size()) throw DataError("trial objective count mismatch");
    points.push_back(t.objectives);
  }
  IdealSelection s;
  s.scaled = scale_oriented(points, objectives, &s.bounds, &s.warnings);
  s.distances = ideal_distances(s.scaled);
  for (std::size_t i = 1; i < front.size(); ++i) {
    const double d = s.distances[i], best = s.distances[s.index];
    if (d < best || (d == best && front[i].id < front[s.index].id)) s.index = i;
  }
  return s;
}

// ---------------------------------------------------------------------------
// hypervolume

namespace {

/// Volume dominated by `pts` (minimisation) below `ref`, by slicing along the
/// last objective.
double hv_slices(std::vector<std::vector<double>> pts, const std::vector<double>& ref, std::size_t m) {
  std::erase_if(pts, [&](const std::vector<double>& p) {
    for (std::size_t j = 0; j < m; ++j)
      if (!(p[j] < ref[j])) return true;
    return false;
  });
  if (pts.empty()) return 0.0;
  if (m == 1) {
    double lo = ref[0];
    for (const auto& p : pts) lo = std::min(lo, p[0]);
    return ref[0] - lo;
  }
  std::sort(pts.begin(), pts.end(), [&](const auto& a, const auto& b) { return a[m - 1] < b[m - 1]; });
  double volume = 0.0;
  std::vector<std::vector<double>> below;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    below.push_back(pts[i]);
    const double upper = i + 1 < pts.size() ? pts[i + 1][m - 1] : ref[m - 1];
    const double h = upper - pts[i][m - 1];
    if (h > 0.0) volume += h * hv_slices(below, ref, m - 1);
  }
  return volume;
}

std::vector<std::vector<double>> as_losses(const std::vector<std::vector<double>>& points,
                                           const std::vector<Objective>& objectives) {
  std::vector<std::vector<double>> out;
  for (const auto& p : points) {
    std::vector<double> l;
    for (std::size_t j = 0; j < objectives.size(); ++j) l.push_back(-objectives[j].oriented(p[j]));
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace

double hypervolume(const std::vector<std::vector<double>>& points, const std::vector<Objective>& objectives,
                   const std::vector<double>& reference) {
  if (reference.size() != objectives.size()) throw DataError("hypervolume reference has the wrong dimension");
  std::vector<double> ref;
  for (std::size_t j = 0; j < objectives.size(); ++j) ref.push_back(-objectives[j].oriented(reference[j]));
  return hv_slices(as_losses(points, objectives), ref, objectives.size());
}

std::vector<std::size_t> greedy_hypervolume_subset(const std::vector<std::vector<double>>& points,
                                                   const std::vector<Objective>& objectives, std::size_t k) {
  const auto losses = as_losses(points, objectives);
  const std::size_t m = objectives.size();
  std::vector<double> ref(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& l : losses) worst = std::max(worst, l[j]);
    ref[j] = std::max(1.1 * worst, 0.9 * worst);
    if (ref[j] == 0.0) ref[j] = 1e-12;
  }
  std::vector<std::size_t> chosen;
  std::vector<bool> used(points.size(), false);
  std::vector<std::vector<double>> current;
  while (chosen.size() < std::min(k, points.size())) {
    std::size_t best = points.size();
    double best_hv = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (used[i]) continue;
      current.push_back(losses[i]);
      const double v = hv_slices(current, ref, m);
      current.pop_back();
      if (v > best_hv) {
        best_hv = v;
        best = i;
      }
    }
    used[best] = true;
    chosen.push_back(best);
    current.push_back(losses[best]);
  }
  return chosen;
}

// ---------------------------------------------------------------------------
// TPE

void TPEConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("tpe.gamma must lie in (0, 1)");
  if (n_candidates < 1) throw ConfigError("tpe.n_candidates must be >= 1");
  if (n_trials < 1) throw ConfigError("hpo.n_trials must be >= 1");
  if (n_trials < n_startup) throw ConfigError("hpo.n_trials must be >= tpe.n_startup");
}

ParamMap sample_uniform(const SearchSpace& space, Rng& rng) {
  ParamMap p;
  for (const auto& d : space.domains) {
    if (d.kind == DomainKind::categorical_numeric) {
      p[d.name] = d.values[rng.below(d.values.size())];
    } else {
      p[d.name] = static_cast<double>(d.lo + static_cast<std::int64_t>(rng.below(d.cardinality())));
    }
  }
  return p;
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Per-parameter density for one group of observations.
class Density {
public:
  Density(const ParamDomain& domain, std::vector<double> obs) : d_(domain), obs_(std::move(obs)) {
    if (d_.kind == DomainKind::integer_range)
      bw_ = std::max(static_cast<double>(d_.hi - d_.lo) / 10.0, 1.0);
  }

  double pmf(double x) const {
    if (d_.kind == DomainKind::categorical_numeric) {
      std::size_t c = 0;
      for (double o : obs_) c += (o == x);
      return (static_cast<double>(c) + 1.0) / static_cast<double>(obs_.size() + d_.values.size());
    }
    if (obs_.empty()) return 1.0 / static_cast<double>(d_.cardinality());
    const double lo = static_cast<double>(d_.lo) - 0.5, hi = static_cast<double>(d_.hi) + 0.5;
    double p = 0.0;
    for (double o : obs_) {
      const double mass = normal_cdf((hi - o) / bw_) - normal_cdf((lo - o) / bw_);
      p += (normal_cdf((x + 0.5 - o) / bw_) - normal_cdf((x - 0.5 - o) / bw_)) / mass;
    }
    return p / static_cast<double>(obs_.size());
  }

  double sample(Rng& rng) const {
    if (d_.kind == DomainKind::categorical_numeric) {
      std::vector<double> w;
      for (double v : d_.values) w.push_back(pmf(v));
      return d_.values[rng.categorical(w)];
    }
    if (obs_.empty()) return static_cast<double>(d_.lo + static_cast<std::int64_t>(rng.below(d_.cardinality())));
    const double centre = obs_[rng.below(obs_.size())];
    const double lo = static_cast<double>(d_.lo) - 0.5, hi = static_cast<double>(d_.hi) + 0.5;
    double z = centre;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double c = centre + bw_ * rng.normal();
      if (c >= lo && c < hi) {
        z = c;
        break;
      }
    }
    return std::clamp(std::floor(z + 0.5), static_cast<double>(d_.lo), static_cast<double>(d_.hi));
  }

private:
  const ParamDomain& d_;
  std::vector<double> obs_;
  double bw_ = 1.0;
};

}  // namespace

ParamMap tpe_suggest(const std::vector<Trial>& history, const SearchSpace& space,
                     const std::vector<Objective>& objectives, const TPEConfig& config) {
  space.validate();
  Rng rng(mix_seed(config.seed, history.size()));
  std::vector<const Trial*> ok;
  for (const auto& t : history)
    if (t.status == TrialStatus::ok && t.objectives.size() == objectives.size()) ok.push_back(&t);
  if (ok.empty()) return sample_uniform(space, rng);

  const std::size_t n = ok.size();
  const auto n_good = static_cast<std::size_t>(std::ceil(config.gamma * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (objectives.size() == 1) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return objectives[0].oriented(ok[a]->objectives[0]) > objectives[0].oriented(ok[b]->objectives[0]);
    });
  } else {
    std::vector<std::vector<double>> points;
    for (const Trial* t : ok) points.push_back(t->objectives);
    const auto rank = non_domination_ranks(points, objectives);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
    // Whole ranks fill the promising set; the rank that overflows it is
    // thinned by greedy hypervolume-contribution selection.
    std::size_t begin = 0;
    while (begin < n && begin < n_good) {
      std::size_t end = begin;
      while (end < n && rank[order[end]] == rank[order[begin]]) ++end;
      if (end > n_good) {
        std::vector<std::vector<double>> tier;
        for (std::size_t i = begin; i < end; ++i) tier.push_back(points[order[i]]);
        const auto picked = greedy_hypervolume_subset(tier, objectives, n_good - begin);
        std::vector<std::size_t> reordered;
        std::vector<bool> used(tier.size(), false);
        for (std::size_t p : picked) {
          reordered.push_back(order[begin + p]);
          used[p] = true;
        }
        for (std::size_t i = 0; i < tier.size(); ++i)
          if (!used[i]) reordered.push_back(order[begin + i]);
        std::copy(reordered.begin(), reordered.end(), order.begin() + static_cast<std::ptrdiff_t>(begin));
      }
      begin = end;
    }
  }

  std::vector<Density> good, rest;
  for (const auto& d : space.domains) {
    std::vector<double> g, r;
    for (std::size_t i = 0; i < n; ++i) {
      auto it = ok[order[i]]->params.find(d.name);
      if (it == ok[order[i]]->params.end()) continue;
      (i < n_good ? g : r).push_back(it->second);
    }
    good.emplace_back(d, std::move(g));
    rest.emplace_back(d, std::move(r));
  }

  ParamMap best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < config.n_candidates; ++c) {
    ParamMap cand;
    double score = 0.0;
    for (std::size_t p = 0; p < space.domains.size(); ++p) {
      const double v = good[p].sample(rng);
      cand[space.domains[p].name] = v;
      score += std::log(good[p].pmf(v)) - std::log(rest[p].pmf(v));
    }
    if (c == 0 || score > best_score) {
      best_score = score;
      best = std::move(cand);
    }
  }
  return best;
}

namespace {

ParetoSet finish_pareto(const std::vector<Trial>& trials, const std::vector<Objective>& objectives) {
  ParetoSet set;
  set.members = pareto_front(trials, objectives);
  if (set.members.empty()) throw DataError("every trial failed; no Pareto front");
  auto sel = ideal_point_select(set.members, objectives);
  set.selected = set.members[sel.index];
  set.scaling_bounds = std::move(sel.bounds);
  set.warnings = std::move(sel.warnings);
  return set;
}

class MemoEvaluator {
public:
  MemoEvaluator(const Evaluator& evaluator, std::uint64_t seed) : evaluator_(evaluator), seed_(seed) {}

  Trial operator()(std::size_t id, const ParamMap& params) {
    if (auto it = cache_.find(params); it != cache_.end()) {
      Trial t = it->second;
      t.id = id;
      t.wall_time_ms = 0.0;
      return t;
    }
    Trial t = evaluate_trial(id, params, evaluator_, seed_);
    cache_.emplace(params, t);
    return t;
  }

private:
  const Evaluator& evaluator_;
  std::uint64_t seed_;
  std::map<ParamMap, Trial> cache_;
};

}  // namespace

MooResult run_moo(const SearchSpace& space, const Evaluator& evaluator, const std::vector<Objective>& objectives,
                  const TPEConfig& config) {
  config.validate();
  space.validate();
  if (objectives.empty()) throw ConfigError("at least one objective is required");
  MooResult r;
  MemoEvaluator eval(evaluator, config.seed);
  Rng startup(mix_seed(config.seed, 0x5741525455500000ULL));
  for (std::size_t i = 0; i < config.n_trials; ++i) {
    const ParamMap params =
        i < config.n_startup ? sample_uniform(space, startup) : tpe_suggest(r.trials, space, objectives, config);
    r.trials.push_back(eval(i, params));
  }
  r.pareto = finish_pareto(r.trials, objectives);
  return r;
}

MooResult run_random(const SearchSpace& space, const Evaluator& evaluator, const std::vector<Objective>& objectives,
                     std::size_t n_trials, std::uint64_t seed) {
  space.validate();
  MooResult r;
  MemoEvaluator eval(evaluator, seed);
  Rng rng(mix_seed(seed, 0x5741525455500000ULL));
  for (std::size_t i = 0; i < n_trials; ++i) r.trials.push_back(eval(i, sample_uniform(space, rng)));
  r.pareto = finish_pareto(r.trials, objectives);
  return r;
}

// ---------------------------------------------------------------------------
// spaces

SearchSpace cluster_model_space() {
  return {{ParamDomain::categorical("n_gram", {1, 2, 3}),
           ParamDomain::categorical("n_clusters", {2, 5, 10, 15, 20, 25}),
           ParamDomain::categorical("n_components", {5, 10, 15}),
           ParamDomain::categorical("n_neighbors", {10, 15, 20})}};
}

SearchSpace corex_space() {
  return {{ParamDomain::categorical("anchor_strength", {1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5, 5.5}),
           ParamDomain::categorical("n_hidden", {3, 5, 10, 15, 20, 25})}};
}

SearchSpace lda_space() {
  const std::vector<double> prior = {0.04, 0.05, 0.07, 0.1, 0.2, 0.5};
  return {{ParamDomain::categorical("n_topics", {2, 5, 10, 15, 20, 25}), ParamDomain::categorical("alpha", prior),
           ParamDomain::categorical("eta", prior)}};
}

SearchSpace cluster_model_moo_space() {
  return {{ParamDomain::categorical("n_gram", {1, 2, 3}), ParamDomain::integer("n_clusters", 2, 25),
           ParamDomain::integer("n_components", 2, 15), ParamDomain::integer("n_neighbors", 5, 25)}};
}

SearchSpace benchmark_space() {
  return {{ParamDomain::integer("x1", 0, 20), ParamDomain::integer("x2", 0, 20), ParamDomain::integer("x3", 0, 20)}};
}

std::vector<Objective> benchmark_objectives() {
  return {{"f1", Direction::minimize}, {"f2", Direction::minimize}, {"f3", Direction::minimize}};
}

std::vector<double> benchmark_evaluate(const ParamMap& params) {
  const double half_pi = std::numbers::pi / 2.0;
  const double t1 = params.at("x1") / 20.0 * half_pi;
  const double t2 = params.at("x2") / 20.0 * half_pi;
  const double s = params.at("x3") / 20.0 - 0.5;
  const double g = 1.0 + 4.0 * s * s;
  return {g * std::cos(t1) * std::cos(t2), g * std::cos(t1) * std::sin(t2), g * std::sin(t1)};
}

std::vector<double> benchmark_reference() { return {2.2, 2.2, 2.2}; }

// ---------------------------------------------------------------------------
// serialisation

namespace {

json number(double v) {
  if (v == std::floor(v) && std::abs(v) < 9007199254740992.0) return json(static_cast<std::int64_t>(v));
  return json(v);
}

json trial_json(const Trial& t) {
  json j;
  j["trial_id"] = t.id;
  json params = json::object();
  for (const auto& [k, v] : t.params) params[k] = number(v);
  j["params"] = params;
  j["objectives"] = t.objectives;
  j["seed"] = t.seed;
  j["status"] = t.status == TrialStatus::ok ? "ok" : "failed";
  if (t.status == TrialStatus::failed) j["error"] = t.error;
  j["wall_time_ms"] = std::round(t.wall_time_ms * 1000.0) / 1000.0;
  return j;
}

Trial trial_from(const json& j) {
  Trial t;
  t.id = j.at("trial_id").get<std::size_t>();
  for (const auto& [k, v] : j.at("params").items()) t.params[k] = v.get<double>();
  t.objectives = j.at("objectives").get<std::vector<double>>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.status = j.at("status").get<std::string>() == "ok" ? TrialStatus::ok : TrialStatus::failed;
  if (j.contains("error")) t.error = j.at("error").get<std::string>();
  t.wall_time_ms = j.value("wall_time_ms", 0.0);
  return t;
}

}  // namespace

std::string trial_to_json(const Trial& trial) { return trial_json(trial).dump(); }

std::string trials_to_ndjson(const std::vector<Trial>& trials) {
  std::string out;
  for (const auto& t : trials) out += trial_to_json(t) + "\n";
  return out;
}

std::vector<Trial> trials_from_ndjson(std::string_view text) {
  std::vector<Trial> out;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(trial_from(json::parse(line.begin(), line.end())));
    } catch (const json::parse_error& e) {
      throw ParseError("malformed trial log", line_no, e.byte);
    } catch (const json::exception& e) {
      throw DataError("invalid trial on line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string pareto_to_json(const ParetoSet& set, const std::vector<Objective>& objectives) {
  json j;
  json members = json::array();
  for (const auto& t : set.members) members.push_back(trial_json(t));
  j["members"] = members;
  j["selected"] = trial_json(set.selected);
  json bounds = json::object();
  for (std::size_t i = 0; i < objectives.size() && i < set.scaling_bounds.size(); ++i)
    bounds[objectives[i].name] = {{"min", set.scaling_bounds[i].min}, {"max", set.scaling_bounds[i].max}};
  j["scaling_bounds"] = bounds;
  json objs = json::array();
  for (const auto& o : objectives)
    objs.push_back({{"name", o.name}, {"direction", o.direction == Direction::maximize ? "maximize" : "minimize"}});
  j["objectives"] = objs;
  j["warnings"] = set.warnings;
  return j.dump(2) + "\n";
}

std::string soo_to_json(const SooResult& result, const Objective& objective, std::size_t top_k) {
  json j;
  j["objective"] = {{"name", objective.name},
                    {"direction", objective.direction == Direction::maximize ? "maximize" : "minimize"}};
  j["best"] = result.best ? trial_json(*result.best) : json(nullptr);
  json top = json::array();
  for (const auto& t : top_k_trials(result.trials, top_k, objective)) top.push_back(trial_json(t));
  j["top"] = top;
  std::size_t failed = 0;
  for (const auto& t : result.trials) failed += t.status == TrialStatus::failed;
  j["n_trials"] = result.trials.size();
  j["n_failed"] = failed;
  return j.dump(2) + "\n";
}

}  // namespace topicopt
