#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topicopt/common.hpp"
#include "topicopt/corpus.hpp"
#include "topicopt/metrics.hpp"

namespace topicopt {

struct Anchor {
  std::vector<std::string> terms;
  std::size_t factor = 0;
};

struct CorExConfig {
  std::size_t n_hidden = 5;
  std::vector<Anchor> anchors;
  /// Multiplier on an anchored word's contribution to its anchored factor.
  double anchor_strength = 1.0;
  std::size_t max_iter = 200;
  double tol = 1e-6;
  std::uint64_t seed = 1;

  void validate() const;
};

struct CorExModel {
  Matrix word_factor_mi;                      // n_hidden x V, nats
  std::vector<std::size_t> word_assignment;   // per word, owning factor
  std::vector<double> tc_per_factor;
  Matrix p_y_given_doc;                       // n_docs x n_hidden, P(y_j = 1 | doc)
  std::vector<double> tc_trace;               // total correlation after each iteration
  std::size_t iterations = 0;
  bool converged = false;
  CorExConfig config;
};

/// Anchored CorEx with one binary latent per factor.
///
/// Each iteration:
///   E  log q(y_j|d) = log p(y_j) + sum_{i in G_j} w_ij log(p(x_i|y_j) / p(x_i)) - log Z_j(d)
///      using both present and absent words; TC_j = mean_d log Z_j(d)
///   M  p(y_j) and p(x_i|y_j) from the soft labels (probabilities clipped to [1e-12, 1-1e-12])
///   G  each word joins the factor maximising w_ij * I(X_i; Y_j)
/// with w_ij = anchor_strength for anchored pairs and 1 otherwise. Each step
/// is a coordinate ascent on the same bound, so the TC trace never decreases.
/// A factor left with no words has p(y|doc) = 0.5 for every document.
///
/// Soft labels start from seed words chosen k-means++ style over document
/// incidence vectors. When anchor_strength > 1 an anchored factor is seeded
/// from its anchor terms instead; at strength 1 anchors change nothing.
///
/// Counts are binarised. Anchor terms missing from `vocab` are ignored with a
/// warning; anchors without a vocabulary are a ConfigError.
CorExModel train_corex(const DocTermMatrix& matrix, const CorExConfig& config, const Vocabulary* vocab = nullptr,
                       Warnings* warnings = nullptr);

/// Per factor, its assigned words by descending anchor-weighted MI (the MI
/// times anchor_strength for an anchored pair, plain MI otherwise), ties by
/// term id, at most n. Scores are the weighted values.
TopicSet corex_top_words(const CorExModel& model, const Vocabulary& vocab, std::size_t n);

double total_correlation(const CorExModel& model);

}  // namespace topicopt
