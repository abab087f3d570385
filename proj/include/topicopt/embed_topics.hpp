#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topicopt/common.hpp"
#include "topicopt/corpus.hpp"
#include "topicopt/metrics.hpp"

namespace topicopt {

enum class EmbeddingProvenance { external_file, fallback };

struct EmbeddingMatrix {
  Matrix values;  // n_docs x dim
  EmbeddingProvenance provenance = EmbeddingProvenance::external_file;
};

/// CSV (one row per document, no header) or, for files ending in .bin/.f32,
/// packed little-endian float32 after two little-endian int32 (n_docs, dim).
/// Throws DataError on a row-count or width mismatch and ParseError on a
/// non-numeric cell.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, std::size_t n_docs);
Matrix parse_embeddings_csv(std::string_view text);
Matrix parse_embeddings_binary(std::string_view bytes);
std::string embeddings_to_csv(const Matrix& values);
std::string embeddings_to_binary(const Matrix& values);

/// Deterministic stand-in for an external encoder: TF-IDF rows
/// (tf = n / len, idf = ln((N + 1) / df)) projected on their top `dim` right
/// singular vectors, found by seeded subspace iteration. Each component's
/// sign is fixed so its largest-magnitude entry is positive. Components
/// beyond the numerical rank are zero with a warning. dim > V is a
/// ConfigError.
EmbeddingMatrix fallback_embed(const DocTermMatrix& matrix, std::size_t dim, std::uint64_t seed,
                               Warnings* warnings = nullptr);

/// Top-k principal scores (U * S) of a dense matrix via subspace iteration.
/// Rows are used as given (no centring).
Matrix truncated_svd_scores(const Matrix& x, std::size_t k, std::uint64_t seed, std::vector<double>* singular = nullptr);

struct UMAPConfig {
  std::size_t n_neighbors = 15;
  std::size_t n_components = 5;
  double min_dist = 0.1;
  double spread = 1.0;
  std::size_t n_epochs = 200;
  std::size_t negative_sample_rate = 5;
  double learning_rate = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Neighbour graph pieces, exposed for inspection.
struct FuzzyGraph {
  std::vector<std::vector<std::size_t>> neighbors;  // per point, ascending distance, self excluded
  std::vector<std::vector<double>> distances;
  std::vector<double> rho;    // distance to the nearest neighbour at positive distance
  std::vector<double> sigma;  // bandwidth with sum_j exp(-(d_j - rho) / sigma) = log2(k)
  /// Symmetrised memberships w_ij = p_j|i + p_i|j - p_j|i * p_i|j, i < j.
  std::vector<std::size_t> head, tail;
  std::vector<double> weight;
};

FuzzyGraph fuzzy_graph(const Matrix& points, std::size_t n_neighbors);

/// Least-squares fit of 1 / (1 + a d^(2b)) to the curve that is 1 below
/// min_dist and exp(-(d - min_dist) / spread) beyond it, sampled at 300
/// points on [0, 3 * spread]. Falls back to (1, 1) if the fit fails.
std::pair<double, double> fit_ab(double min_dist, double spread = 1.0);

/// exact kNN -> per-point rho/sigma -> fuzzy union -> PCA start -> SGD on the
/// fuzzy cross-entropy with negative sampling. Single-threaded and
/// deterministic under config.seed. Identical input points only: DataError
/// "degenerate metric structure".
Matrix umap_reduce(const Matrix& embeddings, const UMAPConfig& config);

struct KMeansConfig {
  std::size_t n_clusters = 8;
  std::size_t max_iter = 300;
  /// Independent k-means++ restarts; the lowest inertia wins.
  std::size_t n_init = 3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct KMeansResult {
  std::vector<std::size_t> assignments;
  Matrix centroids;
  double inertia = 0.0;
  /// Inertia after each assignment step of the winning restart.
  std::vector<double> inertia_trace;
};

/// k-means++ seeding then Lloyd iterations until assignments stop changing.
/// Ties go to the lower cluster index; an emptied cluster keeps its centroid.
/// n_clusters above the number of distinct points is a DataError.
KMeansResult kmeans_cluster(const Matrix& points, const KMeansConfig& config);

double kmeans_inertia(const Matrix& points, const std::vector<std::size_t>& assignments, const Matrix& centroids);

struct CTfIdfModel {
  Matrix weights;                   // n_clusters x V, W(t, c)
  std::vector<double> cluster_length;  // tokens per cluster
  std::vector<double> term_frequency;  // f_t, summed over clusters
  double average_length = 0.0;      // A, over non-empty clusters
};

/// TF(t,c) = count(t,c) / len(c); W(t,c) = TF(t,c) * ln(1 + A / f_t).
/// An empty cluster gets an all-zero row and a warning.
CTfIdfModel ctfidf(const DocTermMatrix& counts, const std::vector<std::size_t>& assignments, std::size_t n_clusters,
                   Warnings* warnings = nullptr);
/// Builds the n-gram vocabulary and counts of `corpus` first.
std::pair<Vocabulary, CTfIdfModel> ctfidf(const Corpus& corpus, const std::vector<std::size_t>& assignments,
                                          std::size_t n_clusters, int n_max, Warnings* warnings = nullptr);

/// Top n terms per cluster by W; zero-weight terms are never listed.
TopicSet extract_cluster_topics(const CTfIdfModel& model, const Vocabulary& vocab, std::size_t n);

/// Row-normalised W, uniform for an all-zero row; the topic-word
/// distribution used for the cluster model's perplexity.
Matrix cluster_topic_word(const CTfIdfModel& model);

/// softmax_j(-|x - c_j| / temperature) per row, computed in log space.
Matrix doc_topic_distribution(const Matrix& points, const Matrix& centroids, double temperature = 1.0);

struct ClusterConfig {
  UMAPConfig umap;
  KMeansConfig kmeans;
  int n_gram = 1;
  double temperature = 1.0;
};

struct ClusterTopicModel {
  Matrix reduced;
  KMeansResult clusters;
  Vocabulary vocab;
  DocTermMatrix counts;
  CTfIdfModel ctfidf;
  Matrix doc_topic;
};

/// embeddings -> umap_reduce -> kmeans_cluster -> ctfidf -> doc_topic_distribution.
ClusterTopicModel fit_cluster_model(const Corpus& corpus, const Matrix& embeddings, const ClusterConfig& config,
                                    Warnings* warnings = nullptr);

}  // namespace topicopt
