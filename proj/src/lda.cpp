#include "topicopt/lda.hpp"

#include <algorithm>
#include <cmath>

namespace topicopt {

void LDAConfig::validate() const {
  // A single topic is allowed: it degenerates to the smoothed unigram model.
  if (n_topics < 1) throw ConfigError("lda.n_topics must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("lda.alpha must be > 0");
  if (!(eta > 0.0)) throw ConfigError("lda.eta must be > 0");
  if (n_iterations < 1) throw ConfigError("lda.n_iterations must be >= 1");
  if (burn_in >= n_iterations) throw ConfigError("lda.burn_in must be < lda.n_iterations");
  if (sample_lag < 1) throw ConfigError("lda.sample_lag must be >= 1");
}

GibbsSampler::GibbsSampler(const DocTermMatrix& matrix, const LDAConfig& config)
    : n_topics_(config.n_topics),
      n_terms_(matrix.n_terms()),
      alpha_(config.alpha),
      eta_(config.eta),
      rng_(config.seed),
      n_dk_(matrix.n_docs() * config.n_topics, 0),
      n_kw_(config.n_topics * matrix.n_terms(), 0),
      n_k_(config.n_topics, 0),
      weights_(config.n_topics, 0.0) {
  for (std::size_t d = 0; d < matrix.n_docs(); ++d) {
    doc_offset_.push_back(words_.size());
    for (const auto& e : matrix.row(d))
      for (std::uint32_t c = 0; c < e.count; ++c) words_.push_back(e.term);
    doc_len_.push_back(words_.size() - doc_offset_.back());
  }
  topics_.resize(words_.size());
  for (std::size_t d = 0; d < doc_len_.size(); ++d) {
    for (std::size_t i = doc_offset_[d]; i < doc_offset_[d] + doc_len_[d]; ++i) {
      const auto k = static_cast<std::uint32_t>(rng_.below(n_topics_));
      topics_[i] = k;
      ++n_dk_[d * n_topics_ + k];
      ++n_kw_[k * n_terms_ + words_[i]];
      ++n_k_[k];
    }
  }
}

void GibbsSampler::sweep() {
  const double v_eta = static_cast<double>(n_terms_) * eta_;
  for (std::size_t d = 0; d < doc_len_.size(); ++d) {
    std::uint32_t* doc_counts = &n_dk_[d * n_topics_];
    for (std::size_t i = doc_offset_[d]; i < doc_offset_[d] + doc_len_[d]; ++i) {
      const std::uint32_t w = words_[i];
      std::uint32_t k = topics_[i];
      --doc_counts[k];
      --n_kw_[k * n_terms_ + w];
      --n_k_[k];
      for (std::size_t t = 0; t < n_topics_; ++t) {
        weights_[t] = (doc_counts[t] + alpha_) * (n_kw_[t * n_terms_ + w] + eta_) / (n_k_[t] + v_eta);
      }
      k = static_cast<std::uint32_t>(rng_.categorical(weights_));
      topics_[i] = k;
      ++doc_counts[k];
      ++n_kw_[k * n_terms_ + w];
      ++n_k_[k];
    }
  }
}

void GibbsSampler::estimate(Matrix& phi, Matrix& theta) const {
  phi = Matrix(n_topics_, n_terms_);
  theta = Matrix(doc_len_.size(), n_topics_);
  const double v_eta = static_cast<double>(n_terms_) * eta_;
  for (std::size_t k = 0; k < n_topics_; ++k)
    for (std::size_t w = 0; w < n_terms_; ++w) phi(k, w) = (n_kw_[k * n_terms_ + w] + eta_) / (n_k_[k] + v_eta);
  const double k_alpha = static_cast<double>(n_topics_) * alpha_;
  for (std::size_t d = 0; d < doc_len_.size(); ++d)
    for (std::size_t k = 0; k < n_topics_; ++k)
      theta(d, k) = (n_dk_[d * n_topics_ + k] + alpha_) / (static_cast<double>(doc_len_[d]) + k_alpha);
}

namespace {

void normalize_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double s = 0.0;
    for (double v : row) s += v;
    for (double& v : row) v /= s;
  }
}

}  // namespace

LDAModel train_lda(const DocTermMatrix& matrix, const LDAConfig& config) {
  config.validate();
  if (matrix.empty()) throw DataError("cannot train LDA on an empty document-term matrix");
  const std::uint64_t total = matrix.total();
  if (total == 0) throw DataError("cannot train LDA: every document is empty");
  if (config.n_topics > total)
    throw DataError("lda.n_topics (" + std::to_string(config.n_topics) + ") exceeds the number of tokens (" +
                    std::to_string(total) + ")");

  GibbsSampler sampler(matrix, config);
  LDAModel model;
  model.config = config;
  model.phi = Matrix(config.n_topics, matrix.n_terms());
  model.theta = Matrix(matrix.n_docs(), config.n_topics);

  Matrix phi, theta;
  std::size_t samples = 0;
  for (std::size_t it = 0; it < config.n_iterations; ++it) {
    sampler.sweep();
    if (it < config.burn_in || (it - config.burn_in) % config.sample_lag != 0) continue;
    sampler.estimate(phi, theta);
    for (std::size_t i = 0; i < phi.data().size(); ++i) model.phi.data()[i] += phi.data()[i];
    for (std::size_t i = 0; i < theta.data().size(); ++i) model.theta.data()[i] += theta.data()[i];
    ++samples;
  }
  for (double& v : model.phi.data()) v /= static_cast<double>(samples);
  for (double& v : model.theta.data()) v /= static_cast<double>(samples);
  normalize_rows(model.phi);
  normalize_rows(model.theta);
  return model;
}

TopicSet top_words(const LDAModel& model, const Vocabulary& vocab, std::size_t n) {
  if (n < 1 || n > vocab.size()) throw ConfigError("top-word count must be in [1, V]");
  if (vocab.size() != model.phi.cols()) throw DataError("vocabulary does not match the LDA model");
  return topics_from_weights(model.phi, vocab, n);
}

double lda_log_likelihood(const LDAModel& model, const DocTermMatrix& matrix, double epsilon) {
  if (matrix.n_docs() != model.theta.rows() || matrix.n_terms() != model.phi.cols())
    throw DataError("document-term matrix does not match the LDA model dimensions");
  double ll = 0.0;
  for (std::size_t d = 0; d < matrix.n_docs(); ++d) {
    for (const auto& e : matrix.row(d)) {
      double p = 0.0;
      for (std::size_t k = 0; k < model.phi.rows(); ++k) p += model.theta(d, k) * model.phi(k, e.term);
      ll += e.count * std::log(std::max(p, epsilon));
    }
  }
  return ll;
}

}  // namespace topicopt
