#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topicopt/common.hpp"
#include "topicopt/corpus.hpp"
#include "topicopt/metrics.hpp"

namespace topicopt {

struct LDAConfig {
  std::size_t n_topics = 5;
  double alpha = 0.1;  // symmetric document-topic prior
  double eta = 0.1;    // symmetric topic-word prior
  std::size_t n_iterations = 500;
  std::size_t burn_in = 250;
  /// Post-burn-in sweeps between averaged samples.
  std::size_t sample_lag = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

struct LDAModel {
  Matrix phi;    // n_topics x V, rows sum to 1
  Matrix theta;  // n_docs x n_topics, rows sum to 1
  LDAConfig config;
};

/// Collapsed Gibbs state over the token-topic assignments of one corpus.
/// Exposed so the count bookkeeping can be inspected between sweeps.
class GibbsSampler {
public:
  GibbsSampler(const DocTermMatrix& matrix, const LDAConfig& config);

  /// One full pass resampling every token's topic.
  void sweep();

  std::size_t n_topics() const { return n_topics_; }
  std::size_t n_terms() const { return n_terms_; }
  std::size_t n_docs() const { return doc_len_.size(); }

  std::uint32_t doc_topic(std::size_t d, std::size_t k) const { return n_dk_[d * n_topics_ + k]; }
  std::uint32_t topic_word(std::size_t k, std::size_t w) const { return n_kw_[k * n_terms_ + w]; }
  std::uint32_t topic_total(std::size_t k) const { return n_k_[k]; }
  std::size_t doc_length(std::size_t d) const { return doc_len_[d]; }

  /// Smoothed point estimates from the current counts.
  void estimate(Matrix& phi, Matrix& theta) const;

private:
  std::size_t n_topics_;
  std::size_t n_terms_;
  double alpha_;
  double eta_;
  Rng rng_;
  std::vector<std::uint32_t> words_;      // token -> term id
  std::vector<std::uint32_t> topics_;     // token -> topic
  std::vector<std::size_t> doc_offset_;   // doc -> first token
  std::vector<std::size_t> doc_len_;
  std::vector<std::uint32_t> n_dk_;
  std::vector<std::uint32_t> n_kw_;
  std::vector<std::uint32_t> n_k_;
  std::vector<double> weights_;
};

/// Runs n_iterations sweeps and averages phi/theta over every sample_lag-th
/// sweep after burn_in. Deterministic under config.seed.
LDAModel train_lda(const DocTermMatrix& matrix, const LDAConfig& config);

/// Per topic, the n most probable terms; ties go to the lower term id.
TopicSet top_words(const LDAModel& model, const Vocabulary& vocab, std::size_t n);

/// sum_d sum_w n[d][w] * log max(sum_k theta[d][k] phi[k][w], epsilon)
double lda_log_likelihood(const LDAModel& model, const DocTermMatrix& matrix, double epsilon = 1e-10);

}  // namespace topicopt
