#include "topicopt/corex.hpp"

#include <algorithm>
#include <cmath>

namespace topicopt {

namespace {

constexpr double kClip = 1e-12;

double clip(double p) { return std::clamp(p, kClip, 1.0 - kClip); }

double xlogy_ratio(double joint, double a, double b) {
  return joint > 0.0 ? joint * std::log(joint / (a * b)) : 0.0;
}

struct Params {
  std::vector<double> log_py1, log_py0;              // per factor
  std::vector<double> log_p1_y1, log_p1_y0;          // per (factor, word), P(x=1|y)
  std::vector<double> log_p0_y1, log_p0_y0;          // per (factor, word), P(x=0|y)
};

class Trainer {
public:
  Trainer(const DocTermMatrix& binary, const CorExConfig& config, std::vector<std::vector<std::size_t>> anchored)
      : n_docs_(binary.n_docs()),
        n_terms_(binary.n_terms()),
        n_hidden_(config.n_hidden),
        strength_(config.anchor_strength),
        anchored_(std::move(anchored)),
        df_(n_terms_, 0.0),
        log_px1_(n_terms_),
        log_px0_(n_terms_),
        q1_(n_docs_, n_hidden_),
        mi_(n_hidden_, n_terms_),
        assignment_(n_terms_, 0) {
    present_.resize(n_docs_);
    for (std::size_t d = 0; d < n_docs_; ++d)
      for (const auto& e : binary.row(d)) {
        present_[d].push_back(e.term);
        df_[e.term] += 1.0;
      }
    const double n = static_cast<double>(n_docs_);
    for (std::size_t i = 0; i < n_terms_; ++i) {
      log_px1_[i] = std::log(clip(df_[i] / n));
      log_px0_[i] = std::log(clip(1.0 - df_[i] / n));
    }
    seed_labels(config.seed);
  }

  /// Each factor starts as a soft copy (0.9 / 0.1) of one seed document set.
  /// Seeds are words picked k-means++ style over their document incidence
  /// vectors (cosine distance to the nearest earlier seed, squared), so
  /// factors tend to start on different themes. With anchor_strength > 1 an
  /// anchored factor is seeded by the documents holding any of its anchors.
  /// Labels that depend on the data start the bound at a non-negative value
  /// rather than at the all-independent saddle where EM barely moves.
  void seed_labels(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = n_docs_;
    std::vector<std::vector<char>> seeds(n_hidden_);
    std::vector<bool> fixed(n_hidden_, false);
    if (strength_ > 1.0) {
      for (std::uint32_t i = 0; i < n_terms_; ++i)
        for (std::size_t j : anchored_[i]) {
          if (seeds[j].empty()) seeds[j].assign(n, 0);
          fixed[j] = true;
        }
      for (std::size_t d = 0; d < n; ++d)
        for (std::uint32_t i : present_[d])
          for (std::size_t j : anchored_[i]) seeds[j][d] = 1;
    }

    // distance of every word to the closest seed chosen so far
    std::vector<double> dist(n_terms_, 1.0);
    std::vector<double> overlap(n_terms_);
    auto absorb = [&](const std::vector<char>& docs) {
      std::fill(overlap.begin(), overlap.end(), 0.0);
      double size = 0.0;
      for (std::size_t d = 0; d < n; ++d) {
        if (!docs[d]) continue;
        size += 1.0;
        for (std::uint32_t i : present_[d]) overlap[i] += 1.0;
      }
      for (std::size_t i = 0; i < n_terms_; ++i) {
        const double cos = (size > 0.0 && df_[i] > 0.0) ? overlap[i] / std::sqrt(size * df_[i]) : 0.0;
        dist[i] = std::min(dist[i], 1.0 - cos);
      }
    };
    for (std::size_t j = 0; j < n_hidden_; ++j)
      if (fixed[j]) absorb(seeds[j]);

    std::vector<double> weights(n_terms_);
    for (std::size_t j = 0; j < n_hidden_; ++j) {
      if (fixed[j]) continue;
      for (std::size_t i = 0; i < n_terms_; ++i) {
        const bool informative = df_[i] > 0.0 && df_[i] < static_cast<double>(n);
        weights[i] = informative ? dist[i] * dist[i] : 0.0;
      }
      seeds[j].assign(n, 0);
      if (std::any_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; })) {
        const std::size_t word = rng.categorical(weights);
        for (std::size_t d = 0; d < n; ++d)
          if (std::binary_search(present_[d].begin(), present_[d].end(), static_cast<std::uint32_t>(word)))
            seeds[j][d] = 1;
        absorb(seeds[j]);
      } else {
        for (std::size_t d = 0; d < n; ++d) seeds[j][d] = rng.uniform() < 0.5 ? 1 : 0;
      }
    }
    for (std::size_t d = 0; d < n; ++d)
      for (std::size_t j = 0; j < n_hidden_; ++j) q1_(d, j) = seeds[j][d] ? 0.9 : 0.1;
  }

  double weight(std::size_t word, std::size_t factor) const {
    for (std::size_t f : anchored_[word])
      if (f == factor) return strength_;
    return 1.0;
  }

  /// Parameters, MI and word assignment from the current soft labels.
  void maximize() {
    const double n = static_cast<double>(n_docs_);
    const std::size_t m = n_hidden_, v = n_terms_;
    std::vector<double> s1(m * v, 0.0);  // sum_d q1[d][j] x[d][i]
    std::vector<double> mass1(m, 0.0);
    for (std::size_t d = 0; d < n_docs_; ++d) {
      for (std::size_t j = 0; j < m; ++j) {
        const double q = q1_(d, j);
        mass1[j] += q;
        for (std::uint32_t i : present_[d]) s1[j * v + i] += q;
      }
    }
    params_.log_py1.assign(m, 0.0);
    params_.log_py0.assign(m, 0.0);
    params_.log_p1_y1.assign(m * v, 0.0);
    params_.log_p1_y0.assign(m * v, 0.0);
    params_.log_p0_y1.assign(m * v, 0.0);
    params_.log_p0_y0.assign(m * v, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double m1 = mass1[j], m0 = n - mass1[j];
      params_.log_py1[j] = std::log(clip(m1 / n));
      params_.log_py0[j] = std::log(clip(m0 / n));
      const double py1 = m1 / n, py0 = m0 / n;
      for (std::size_t i = 0; i < v; ++i) {
        const double px1 = df_[i] / n;
        const double a = s1[j * v + i];  // soft count x=1, y=1
        const double b = df_[i] - a;     // x=1, y=0
        const double p1y1 = m1 > 0.0 ? a / m1 : px1;
        const double p1y0 = m0 > 0.0 ? b / m0 : px1;
        params_.log_p1_y1[j * v + i] = std::log(clip(p1y1));
        params_.log_p1_y0[j * v + i] = std::log(clip(p1y0));
        params_.log_p0_y1[j * v + i] = std::log(clip(1.0 - p1y1));
        params_.log_p0_y0[j * v + i] = std::log(clip(1.0 - p1y0));

        const double j11 = a / n, j10 = b / n;
        const double j01 = (m1 - a) / n, j00 = (m0 - b) / n;
        mi_(j, i) = std::max(0.0, xlogy_ratio(j11, px1, py1) + xlogy_ratio(j10, px1, py0) +
                                      xlogy_ratio(j01, 1.0 - px1, py1) + xlogy_ratio(j00, 1.0 - px1, py0));
      }
    }
    for (std::size_t i = 0; i < v; ++i) {
      std::size_t best = 0;
      double best_score = -1.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double s = weight(i, j) * mi_(j, i);
        if (s > best_score) {
          best_score = s;
          best = j;
        }
      }
      assignment_[i] = best;
    }
  }

  /// Soft labels from the current parameters; returns TC per factor.
  std::vector<double> expect() {
    const std::size_t m = n_hidden_, v = n_terms_;
    std::vector<double> base1(m), base0(m);
    std::vector<bool> has_words(m, false);
    std::vector<double> delta1(v), delta0(v);  // present-word correction in the owning factor
    for (std::size_t j = 0; j < m; ++j) {
      base1[j] = params_.log_py1[j];
      base0[j] = params_.log_py0[j];
    }
    for (std::size_t i = 0; i < v; ++i) {
      const std::size_t j = assignment_[i];
      const double w = weight(i, j);
      has_words[j] = true;
      const double abs1 = params_.log_p0_y1[j * v + i] - log_px0_[i];
      const double abs0 = params_.log_p0_y0[j * v + i] - log_px0_[i];
      base1[j] += w * abs1;
      base0[j] += w * abs0;
      delta1[i] = w * (params_.log_p1_y1[j * v + i] - log_px1_[i] - abs1);
      delta0[i] = w * (params_.log_p1_y0[j * v + i] - log_px1_[i] - abs0);
    }
    std::vector<double> tc(m, 0.0);
    std::vector<double> s1(m), s0(m);
    for (std::size_t d = 0; d < n_docs_; ++d) {
      s1 = base1;
      s0 = base0;
      for (std::uint32_t i : present_[d]) {
        s1[assignment_[i]] += delta1[i];
        s0[assignment_[i]] += delta0[i];
      }
      for (std::size_t j = 0; j < m; ++j) {
        if (!has_words[j]) {
          q1_(d, j) = 0.5;
          continue;
        }
        const double hi = std::max(s1[j], s0[j]);
        const double log_z = hi + std::log(std::exp(s1[j] - hi) + std::exp(s0[j] - hi));
        q1_(d, j) = std::exp(s1[j] - log_z);
        tc[j] += log_z;
      }
    }
    for (double& t : tc) t /= static_cast<double>(n_docs_);
    return tc;
  }

  const Matrix& q1() const { return q1_; }
  const Matrix& mi() const { return mi_; }
  const std::vector<std::size_t>& assignment() const { return assignment_; }

private:
  std::size_t n_docs_, n_terms_, n_hidden_;
  double strength_;
  std::vector<std::vector<std::size_t>> anchored_;
  std::vector<std::vector<std::uint32_t>> present_;
  std::vector<double> df_;
  std::vector<double> log_px1_, log_px0_;
  Matrix q1_;
  Matrix mi_;
  std::vector<std::size_t> assignment_;
  Params params_;
};

}  // namespace

void CorExConfig::validate() const {
  if (n_hidden < 1) throw ConfigError("corex.n_hidden must be >= 1");
  if (!(anchor_strength >= 1.0)) throw ConfigError("corex.anchor_strength must be >= 1");
  if (max_iter < 1) throw ConfigError("corex.max_iter must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("corex.tol must be > 0");
  for (const auto& a : anchors)
    if (a.factor >= n_hidden)
      throw ConfigError("corex anchor factor " + std::to_string(a.factor) + " must be < n_hidden");
}

CorExModel train_corex(const DocTermMatrix& matrix, const CorExConfig& config, const Vocabulary* vocab,
                       Warnings* warnings) {
  config.validate();
  if (matrix.empty()) throw DataError("corex: empty document-term matrix");
  if (matrix.total() == 0) throw DataError("corex: document-term matrix has no non-zero entries");
  if (config.n_hidden > matrix.n_terms())
    throw ConfigError("corex.n_hidden (" + std::to_string(config.n_hidden) + ") exceeds the vocabulary size (" +
                      std::to_string(matrix.n_terms()) + ")");

  std::vector<std::vector<std::size_t>> anchored(matrix.n_terms());
  if (!config.anchors.empty()) {
    if (vocab == nullptr) throw ConfigError("corex anchors need a vocabulary");
    for (const auto& a : config.anchors)
      for (const auto& term : a.terms) {
        if (auto id = vocab->id(term)) {
          anchored[*id].push_back(a.factor);
        } else {
          warn(warnings, "anchor term '" + term + "' is not in the vocabulary, ignored");
        }
      }
  }

  Trainer trainer(matrix.binarized(), config, std::move(anchored));
  CorExModel model;
  model.config = config;
  trainer.maximize();
  for (std::size_t it = 0; it < config.max_iter; ++it) {
    model.tc_per_factor = trainer.expect();
    double total = 0.0;
    for (double t : model.tc_per_factor) total += t;
    model.tc_trace.push_back(total);
    model.iterations = it + 1;
    trainer.maximize();
    if (it > 0 && std::abs(total - model.tc_trace[it - 1]) < config.tol) {
      model.converged = true;
      break;
    }
  }
  // The last maximize() ran on the final soft labels, so MI and assignment
  // describe p_y_given_doc exactly.
  model.word_factor_mi = trainer.mi();
  model.word_assignment = trainer.assignment();
  model.p_y_given_doc = trainer.q1();
  return model;
}

TopicSet corex_top_words(const CorExModel& model, const Vocabulary& vocab, std::size_t n) {
  if (n < 1) throw ConfigError("top-word count must be >= 1");
  const Matrix& mi = model.word_factor_mi;
  if (mi.cols() != vocab.size()) throw DataError("corex model does not match the vocabulary");
  Matrix weighted = mi;
  for (const auto& a : model.config.anchors)
    for (const auto& term : a.terms)
      if (const auto id = vocab.id(term); id && a.factor < weighted.rows())
        weighted(a.factor, *id) = mi(a.factor, *id) * model.config.anchor_strength;
  TopicSet out;
  for (std::size_t j = 0; j < mi.rows(); ++j) {
    std::vector<std::size_t> words;
    for (std::size_t i = 0; i < model.word_assignment.size(); ++i)
      if (model.word_assignment[i] == j) words.push_back(i);
    std::stable_sort(words.begin(), words.end(),
                     [&](std::size_t a, std::size_t b) { return weighted(j, a) > weighted(j, b); });
    if (words.size() > n) words.resize(n);
    std::vector<std::string> terms;
    std::vector<double> scores;
    for (std::size_t i : words) {
      terms.push_back(vocab.term(i));
      scores.push_back(weighted(j, i));
    }
    out.topics.push_back(std::move(terms));
    out.scores.push_back(std::move(scores));
  }
  return out;
}

double total_correlation(const CorExModel& model) {
  double sum = 0.0;
  for (double t : model.tc_per_factor) sum += t;
  return sum;
}

}  // namespace topicopt
