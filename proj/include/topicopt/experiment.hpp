#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "topicopt/corex.hpp"
#include "topicopt/corpus.hpp"
#include "topicopt/embed_topics.hpp"
#include "topicopt/hpo.hpp"
#include "topicopt/lda.hpp"
#include "topicopt/metrics.hpp"
#include "topicopt/report.hpp"

namespace topicopt {

enum class ModelKind { lda, corex, cluster };

ModelKind model_kind_from_string(std::string_view name);
std::string_view to_string(ModelKind kind);

struct DataConfig {
  std::filesystem::path path;
  Source source = Source::guardian;
  std::optional<std::filesystem::path> stopwords;
  /// "circular_economy" selects the built-in list; anything else is a file.
  std::optional<std::string> keywords;
  PreprocessOptions preprocess;
};

struct ClusterModelConfig {
  ClusterConfig cluster;
  /// Precomputed embeddings; the fallback embedder is used when absent.
  std::optional<std::filesystem::path> embeddings;
  std::size_t embedding_dim = 32;
};

struct HpoConfig {
  std::string mode = "soo";  // soo | moo
  Objective objective = objective_from_name("coherence");
  std::vector<Objective> objectives = standard_objectives();
  /// The model's default space when absent.
  std::optional<SearchSpace> space;
  std::size_t top_k = 5;
  TPEConfig tpe;
};

struct ReportConfig {
  std::size_t top_n = 10;
  TimeBin time_bin = TimeBin::year;
};

struct ExperimentConfig {
  DataConfig data;
  ModelKind model = ModelKind::cluster;
  LDAConfig lda;
  int lda_n_gram = 1;
  CorExConfig corex;
  int corex_n_gram = 1;
  ClusterModelConfig cluster;
  MetricConfig metrics;
  HpoConfig hpo;
  ReportConfig report;
  std::uint64_t seed = 1;
  std::filesystem::path output = "out";
  /// The merged configuration, as recorded and hashed in the manifest.
  nlohmann::json resolved;
};

/// Every field with its default value.
nlohmann::json default_config_json();

/// Sets the leaf at a dotted path ("hpo.n_trials") from command-line text;
/// text that parses as JSON is used as JSON, anything else as a string.
/// Paths that name no field are a ConfigError.
void apply_override(nlohmann::json& config, std::string_view dotted_path, std::string_view value);

/// Merges `user` onto the defaults and builds the typed configuration.
/// Unknown fields, wrong types and out-of-range values are ConfigErrors
/// naming the field.
ExperimentConfig parse_config(const nlohmann::json& user);

/// Reads the file (or starts from defaults when `path` is empty), applies
/// the overrides in order and parses.
ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::pair<std::string, std::string>>& overrides);

/// Stage commands. Each writes its artifacts into config.output together
/// with a manifest entry, and reads earlier stages' artifacts from there.
void cmd_ingest(const ExperimentConfig& config);
void cmd_preprocess(const ExperimentConfig& config);
void cmd_train(const ExperimentConfig& config);
void cmd_evaluate(const ExperimentConfig& config);
void cmd_hpo(const ExperimentConfig& config, std::size_t jobs = 1);
void cmd_report(const ExperimentConfig& config);

/// Writes a Guardian-format synthetic dump (see synth_corpus) to `path`.
void cmd_synth(const SynthOptions& options, const std::filesystem::path& path);

/// Objective values for one hyperparameter setting of the configured model:
/// coherence, diversity and perplexity in the order of `objectives`.
/// Perplexity is unavailable for CorEx (ConfigError).
Evaluator make_evaluator(const ExperimentConfig& config, const Corpus& corpus, const std::vector<Objective>& objectives);

/// 0 success, 2 configuration error, 3 data error, 4 anything else.
int exit_code_for(const std::exception& error);

}  // namespace topicopt
