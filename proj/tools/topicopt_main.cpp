#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "topicopt/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config, "Experiment config (JSON)");
  sub->add_option("--out", flags.out, "Output directory");
  sub->add_option("--seed", flags.seed, "Global seed");
  sub->add_option("--jobs", flags.jobs, "Parallel grid trials")->check(CLI::PositiveNumber);
  sub->allow_extras();
  sub->footer("Any config field can be overridden with --section.field=value, e.g. --hpo.n_trials=50");
}

/// "--a.b=v" and "--a.b v" pairs from the unparsed arguments.
std::vector<std::pair<std::string, std::string>> dotted_overrides(const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw topicopt::ConfigError("unexpected argument '" + arg + "'");
    std::string key = arg.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else if (i + 1 < extras.size()) {
      value = extras[++i];
    } else {
      throw topicopt::ConfigError("override --" + key + " has no value");
    }
    if (key.find('.') == std::string::npos && key != "model")
      throw topicopt::ConfigError("unknown option --" + key);
    out.emplace_back(key, value);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic model training, evaluation and hyperparameter search"};
  app.require_subcommand(1);

  CommonFlags flags;
  const std::vector<std::pair<std::string, std::string>> stages = {
      {"ingest", "Read a JSON dump into records.ndjson"},
      {"preprocess", "Clean and tokenise records into corpus.ndjson"},
      {"train", "Fit the configured model"},
      {"evaluate", "Score the trained topics"},
      {"hpo", "Grid search (soo) or multi-objective TPE (moo)"},
      {"report", "Write plot data under report/"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : stages) {
    subs.push_back(app.add_subcommand(name, help));
    add_common(subs.back(), flags);
  }

  topicopt::SynthOptions synth;
  std::string synth_out = "data/synthetic_200.json";
  CLI::App* synth_cmd = app.add_subcommand("synth", "Write a Guardian-format synthetic corpus");
  synth_cmd->add_option("--out", synth_out, "Output file");
  synth_cmd->add_option("--n-docs", synth.n_docs)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--n-topics", synth.n_topics)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--vocab-per-topic", synth.vocab_per_topic)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--doc-len", synth.doc_len)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (synth_cmd->parsed()) {
      topicopt::cmd_synth(synth, synth_out);
      return 0;
    }
    CLI::App* sub = nullptr;
    for (auto* s : subs)
      if (s->parsed()) sub = s;
    auto overrides = dotted_overrides(sub->remaining());
    if (!flags.out.empty()) overrides.emplace_back("output", nlohmann::json(flags.out).dump());
    if (flags.seed) overrides.emplace_back("seed", std::to_string(*flags.seed));
    std::optional<std::filesystem::path> config_path;
    if (!flags.config.empty()) config_path = flags.config;
    const topicopt::ExperimentConfig config = topicopt::load_config(config_path, overrides);

    const std::string name = sub->get_name();
    if (name == "ingest") topicopt::cmd_ingest(config);
    else if (name == "preprocess") topicopt::cmd_preprocess(config);
    else if (name == "train") topicopt::cmd_train(config);
    else if (name == "evaluate") topicopt::cmd_evaluate(config);
    else if (name == "hpo") topicopt::cmd_hpo(config, flags.jobs);
    else if (name == "report") topicopt::cmd_report(config);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return topicopt::exit_code_for(e);
  }
}
