// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>

#include "oracles.hpp"
#include "topicopt/corex.hpp"
#include "topicopt/embed_topics.hpp"
#include "topicopt/hpo.hpp"
#include "topicopt/lda.hpp"
#include "topicopt/metrics.hpp"

using namespace topicopt;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int number, const std::string& title, const std::function<Outcome()>& check) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s -- %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", number, title.c_str(), o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Corpus corpus_of(const std::vector<std::vector<std::string>>& docs) {
  Corpus c;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    Document d;
    d.tokens = docs[i];
    d.doc_id = i;
    c.docs.push_back(d);
  }
  return c;
}

TopicSet topic_set(const std::vector<std::vector<std::string>>& t) {
  TopicSet s;
  s.topics = t;
  return s;
}

std::vector<std::vector<double>> random_stochastic(Rng& rng, std::size_t rows, std::size_t cols, double zero_rate) {
  std::vector<std::vector<double>> out(rows, std::vector<double>(cols));
  for (auto& r : out) {
    double s = 0.0;
    for (double& x : r) s += (x = rng.uniform() < zero_rate ? 0.0 : rng.uniform());
    if (s == 0.0) s = r[0] = 1.0;
    for (double& x : r) x /= s;
  }
  return out;
}

// 1 -------------------------------------------------------------------------

Outcome metric_oracles() {
  const auto t0 = Clock::now();
  double worst_c = 0, worst_d = 0, worst_p = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(mix_seed(1001, seed));
    const std::size_t n_docs = 2 + rng.below(49), v = 10 + rng.below(191);
    // Skewed draws so that pairs actually co-occur.
    std::vector<std::vector<std::string>> docs(n_docs);
    std::vector<std::vector<double>> counts(n_docs, std::vector<double>(v, 0.0));
    std::vector<std::vector<DocTermMatrix::Entry>> rows(n_docs);
    for (std::size_t d = 0; d < n_docs; ++d) {
      docs[d].resize(1 + rng.below(40));
      for (auto& t : docs[d]) {
        const std::size_t id = static_cast<std::size_t>(std::pow(rng.uniform(), 2.5) * static_cast<double>(v));
        t = "w" + std::to_string(id);
        counts[d][id] += 1;
      }
      for (std::uint32_t w = 0; w < v; ++w)
        if (counts[d][w] > 0) rows[d].push_back({w, static_cast<std::uint32_t>(counts[d][w])});
    }
    std::set<std::string> seen_set;
    for (const auto& d : docs) seen_set.insert(d.begin(), d.end());
    const std::vector<std::string> seen(seen_set.begin(), seen_set.end());
    const std::size_t n_topics = 2 + rng.below(4);
    std::vector<std::vector<std::string>> topics(n_topics);
    for (auto& t : topics) {
      const std::size_t want = std::min<std::size_t>(seen.size(), 2 + rng.below(9));
      std::set<std::string> pick;
      while (pick.size() < want) pick.insert(seen[rng.below(seen.size())]);
      t.assign(pick.begin(), pick.end());
      for (std::size_t i = t.size(); i > 1; --i) std::swap(t[i - 1], t[rng.below(i)]);
    }
    const std::size_t window = 2 + rng.below(14);

    std::set<std::string> all;
    for (const auto& t : topics) all.insert(t.begin(), t.end());
    const auto stats = cooccurrence_counts(corpus_of(docs), {all.begin(), all.end()}, window);
    const double c_lib = coherence_cnpmi(topic_set(topics), stats).overall;
    const double c_ref = oracle::coherence(docs, topics, window);
    worst_c = std::max(worst_c, std::abs(c_lib - c_ref));

    DiversityConfig dc;
    dc.p = 0.5 + 0.45 * rng.uniform();
    dc.depth = 10;
    worst_d = std::max(worst_d, std::abs(diversity(topic_set(topics), dc) - oracle::diversity(topics, dc.p, 10)));

    const std::size_t k = 1 + rng.below(6);
    const auto theta = random_stochastic(rng, n_docs, k, 0.0);
    const auto phi = random_stochastic(rng, k, v, 0.2);
    const double p_lib = perplexity(matrix_from_rows(theta), matrix_from_rows(phi), DocTermMatrix(v, rows));
    const double p_ref = oracle::perplexity(counts, theta, phi);
    worst_p = std::max(worst_p, std::abs(p_lib - p_ref));
  }
  const double elapsed = seconds_since(t0);
  const bool pass = worst_c <= 1e-9 && worst_d <= 1e-9 && worst_p <= 1e-9 && elapsed < 60.0;
  return {pass, fmt("max |dC| %.2e, |dD| %.2e, |dPPL| %.2e", worst_c, worst_d, worst_p) +
                    fmt(" over 100 corpora in %.1fs (limit 60s)", elapsed)};
}

// 2 -------------------------------------------------------------------------

Outcome metric_identities() {
  const auto indep = cooccurrence_counts(corpus_of({{"a", "b"}, {"a"}, {"b"}, {"c"}}), {"a", "b", "c"}, 10);
  const auto perfect = cooccurrence_counts(corpus_of({{"a", "b"}, {"c"}, {"c"}, {"c"}}), {"a", "b", "c"}, 10);
  const double n0 = npmi(indep, "a", "b"), n1 = npmi(perfect, "a", "b");

  std::vector<std::string> list, other;
  for (int i = 0; i < 10; ++i) {
    list.push_back("t" + std::to_string(i));
    other.push_back("u" + std::to_string(i));
  }
  const double r = rbo(list, list, 0.9);

  const std::size_t v = 100;
  std::vector<std::vector<DocTermMatrix::Entry>> rows(4);
  for (std::uint32_t w = 0; w < v; w += 3) rows[w % 4].push_back({w, 1 + w % 5});
  const double ppl = perplexity(Matrix(4, 1, 1.0), Matrix(1, v, 1.0 / v), DocTermMatrix(v, rows));
  const double div = diversity(topic_set({list, other, {"x", "y", "z"}}));

  const bool pass = std::abs(n0) <= 1e-12 && std::abs(n1 - 1.0) <= 1e-12 &&
                    std::abs(r - (1.0 - std::pow(0.9, 10))) <= 1e-12 && std::abs(ppl - 100.0) <= 1e-9 && div == 1.0;
  return {pass, fmt("NPMI indep %.3g, perfect %.15g; ", n0, n1) + fmt("RBO err %.2e; ", r - (1 - std::pow(0.9, 10))) +
                    fmt("uniform PPL %.12g (V=100); disjoint D %.15g", ppl, div)};
}

// 3 -------------------------------------------------------------------------

Outcome pareto_correctness() {
  const auto obj = standard_objectives();
  int front_bad = 0, ideal_bad = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(mix_seed(3003, seed));
    const std::size_t n = 1 + rng.below(200);
    const bool coarse = seed % 2 == 0;  // coarse grids force ties in dominance
    std::vector<Trial> trials(n);
    std::vector<std::vector<double>> oriented(n);
    for (std::size_t i = 0; i < n; ++i) {
      trials[i].id = i;
      if (coarse)
        trials[i].objectives = {static_cast<double>(rng.below(6)) / 5, static_cast<double>(rng.below(6)) / 5,
                                1.0 + static_cast<double>(rng.below(6))};
      else
        trials[i].objectives = {2 * rng.uniform() - 1, rng.uniform(), 1 + 100 * rng.uniform()};
      for (std::size_t j = 0; j < 3; ++j) oriented[i].push_back(obj[j].oriented(trials[i].objectives[j]));
    }
    const auto front = pareto_front(trials, obj);
    const auto expect = oracle::pareto_indices_max(oriented);
    std::vector<std::size_t> got;
    for (const auto& t : front) got.push_back(t.id);
    if (got != expect) {
      ++front_bad;
      continue;
    }
    std::vector<std::vector<double>> front_pts;
    for (std::size_t i : expect) front_pts.push_back(oriented[i]);
    if (ideal_point_select(front, obj).index != oracle::ideal_argmin(front_pts)) ++ideal_bad;
  }
  return {front_bad == 0 && ideal_bad == 0,
          fmt("1000 sets (n<=200): %.0f front mismatches, %.0f ideal-point mismatches", front_bad, ideal_bad)};
}

// 4 -------------------------------------------------------------------------

Outcome grid_exhaustiveness() {
  const std::size_t a = grid_iter(cluster_model_space()).size();
  const std::size_t b = grid_iter(corex_space()).size();
  const std::size_t c = grid_iter(lda_space()).size();
  bool winners_ok = true;
  const Objective coh = objective_from_name("coherence");
  for (const SearchSpace& space : {cluster_model_space(), corex_space(), lda_space()}) {
    // A hash-like pseudo-coherence on a coarse grid, so ties occur.
    const Evaluator ev = [](const ParamMap& p, std::uint64_t) {
      std::uint64_t h = 0;
      for (const auto& [k, v] : p) h = mix_seed(h ^ fnv1a64(k), static_cast<std::uint64_t>(v * 1000));
      return std::vector<double>{static_cast<double>(h % 17) / 17.0};
    };
    const SooResult r = run_soo(space, ev, coh, 1, 2);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < r.trials.size(); ++i)
      if (r.trials[i].objectives[0] > r.trials[arg].objectives[0]) arg = i;
    winners_ok = winners_ok && r.best && r.trials.size() == space.grid_size() && r.best->id == r.trials[arg].id &&
                 r.best->params == r.trials[arg].params;
  }
  return {a == 162 && b == 60 && c == 216 && winners_ok,
          fmt("grid sizes %.0f/%.0f/%.0f (want 162/60/216); ", a, b, c) +
              (winners_ok ? "soo winner = max-coherence trial" : "soo winner mismatch")};
}

// 5 -------------------------------------------------------------------------

Outcome lda_recovery() {
  int good = 0;
  double slowest = 0.0;
  std::string purities;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthOptions o;
    o.n_docs = 40;
    o.n_topics = 2;
    o.seed = seed;
    const SynthCorpus s = synth_corpus(o);
    const auto [vocab, m] = build_matrix(s.corpus, 1);
    LDAConfig c;
    c.n_topics = 2;
    c.seed = seed;
    const auto t0 = Clock::now();
    const LDAModel model = train_lda(m, c);
    slowest = std::max(slowest, seconds_since(t0));
    std::vector<std::size_t> predicted;
    for (std::size_t d = 0; d < model.theta.rows(); ++d) predicted.push_back(model.theta(d, 0) >= model.theta(d, 1) ? 0 : 1);
    const double p = oracle::purity(predicted, s.labels);
    purities += fmt("%.3f ", p);
    good += p >= 0.9;
  }
  return {good >= 4 && slowest < 30.0,
          "purity per seed " + purities + fmt("-> %.0f/5 >= 0.9 (need 4); slowest run %.2fs (limit 30s)", good, slowest)};
}

// 6 -------------------------------------------------------------------------

Outcome corex_anchoring() {
  int hits2 = 0, hits3 = 0;
  bool monotone = true, identical = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthOptions o;
    o.n_docs = 150;
    o.n_topics = 3;
    o.doc_len = 15;
    o.seed = seed * 11;
    const SynthCorpus s = synth_corpus(o);
    const auto [vocab, m] = build_matrix(s.corpus, 1);
    CorExConfig plain;
    plain.n_hidden = 3;
    plain.seed = seed;
    const CorExModel base = train_corex(m, plain, &vocab);
    for (double strength : {1.0, 2.0, 3.0}) {
      CorExConfig c = plain;
      c.anchors = {{{"recycle"}, 0}};
      c.anchor_strength = strength;
      const CorExModel model = train_corex(m, c, &vocab);
      for (std::size_t i = 1; i < model.tc_trace.size(); ++i)
        monotone = monotone && model.tc_trace[i] >= model.tc_trace[i - 1] - 1e-6;
      if (strength == 1.0) {
        identical = identical && model.word_factor_mi == base.word_factor_mi &&
                    model.p_y_given_doc == base.p_y_given_doc && model.tc_trace == base.tc_trace &&
                    model.word_assignment == base.word_assignment;
        continue;
      }
      const auto top = corex_top_words(model, vocab, 10).topics[0];
      const bool in = std::find(top.begin(), top.end(), "recycle") != top.end();
      (strength == 2.0 ? hits2 : hits3) += in;
    }
    for (std::size_t i = 1; i < base.tc_trace.size(); ++i)
      monotone = monotone && base.tc_trace[i] >= base.tc_trace[i - 1] - 1e-6;
  }
  return {hits2 >= 4 && hits3 >= 4 && monotone && identical,
          fmt("anchor in factor-0 top-10: strength 2 %.0f/5, strength 3 %.0f/5 (need 4); ", hits2, hits3) +
              "TC trace " + (monotone ? "monotone" : "NOT monotone") + "; strength 1 " +
              (identical ? "bitwise identical to unanchored" : "differs from unanchored")};
}

// 7 -------------------------------------------------------------------------

Outcome cluster_geometry() {
  int good = 0;
  std::string aris;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(mix_seed(7007, seed));
    Matrix x(60, 10);
    std::vector<std::size_t> labels(60);
    for (std::size_t i = 0; i < 60; ++i) {
      labels[i] = i % 3;
      for (std::size_t c = 0; c < 10; ++c) x(i, c) = (c == labels[i] ? 10.0 : 0.0) + rng.normal();
    }
    UMAPConfig u;
    u.n_components = 2;
    u.seed = seed;
    KMeansConfig k;
    k.n_clusters = 3;
    k.seed = seed;
    const double ari = oracle::adjusted_rand_index(kmeans_cluster(umap_reduce(x, u), k).assignments, labels);
    aris += fmt("%.3f ", ari);
    good += ari >= 0.9;
  }
  const double elapsed = seconds_since(t0);
  return {good >= 4 && elapsed < 60.0,
          "ARI per seed " + aris + fmt("-> %.0f/5 >= 0.9 (need 4) in %.1fs (limit 60s)", good, elapsed)};
}

// 8 -------------------------------------------------------------------------

Outcome ctfidf_value() {
  // Cluster 1: t x4 + 6 other tokens; cluster 2: t x1 + 9 other tokens.
  std::vector<std::string> c1(4, "t"), c2(1, "t");
  for (int i = 0; i < 6; ++i) c1.push_back("f" + std::to_string(i));
  for (int i = 0; i < 9; ++i) c2.push_back("g" + std::to_string(i));
  const auto [vocab, model] = ctfidf(corpus_of({c1, c2}), {0, 1}, 2, 1);
  const double w = model.weights(0, *vocab.id("t"));
  const double err = std::abs(w - 0.4 * std::log(3.0));
  return {err <= 1e-12, fmt("W(t,c1) = %.15f, |W - 0.4 ln 3| = %.2e (limit 1e-12)", w, err)};
}

// 9 -------------------------------------------------------------------------

Outcome tpe_vs_random() {
  const auto t0 = Clock::now();
  const Evaluator ev = [](const ParamMap& p, std::uint64_t) { return benchmark_evaluate(p); };
  const auto ref = benchmark_reference();
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    TPEConfig c;
    c.n_trials = 60;
    c.seed = seed;
    const MooResult tpe = run_moo(benchmark_space(), ev, benchmark_objectives(), c);
    const MooResult rnd = run_random(benchmark_space(), ev, benchmark_objectives(), 60, seed);
    std::vector<std::vector<double>> a, b;
    for (const auto& t : tpe.trials) a.push_back(t.objectives);
    for (const auto& t : rnd.trials) b.push_back(t.objectives);
    wins += oracle::hypervolume_min(a, ref) >= oracle::hypervolume_min(b, ref);
  }
  const double elapsed = seconds_since(t0);
  return {wins >= 12 && elapsed < 300.0,
          fmt("TPE hypervolume >= random in %.0f/20 paired seeds (need 12) in %.1fs (limit 300s)", wins, elapsed)};
}

// 10 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  static const std::regex wall(R"re("wall_time_ms"\s*:\s*[-+0-9.eE]+)re");
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "cli.log")
      out[fs::relative(e.path(), dir).string()] = std::regex_replace(slurp(e.path()), wall, "\"wall_time_ms\":0");
  return out;
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  std::vector<std::map<std::string, std::string>> runs;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = fs::temp_directory_path() / ("topicopt_accept_" + std::to_string(::getpid()) + "_" +
                                                      std::to_string(run));
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (const char* stage : {"ingest", "preprocess", "train", "evaluate", "hpo", "report"}) {
      const std::string cmd = std::string("cd '") + TOPICOPT_SOURCE_DIR + "' && '" + TOPICOPT_CLI + "' " + stage +
                              " --config configs/cluster_soo.json --out '" + dir.string() + "' >> '" +
                              (dir / "cli.log").string() + "' 2>&1";
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        return {false, "run " + std::to_string(run) + " stage " + stage + " failed: " + slurp(dir / "cli.log")};
    }
    runs.push_back(snapshot(dir));
    fs::remove_all(dir);
  }
  const double elapsed = seconds_since(t0);
  std::string diff;
  std::set<std::string> names;
  for (const auto& r : runs)
    for (const auto& [k, v] : r) names.insert(k);
  for (const auto& n : names)
    if (!runs[0].count(n) || !runs[1].count(n) || runs[0].at(n) != runs[1].at(n)) diff += n + " ";
  std::size_t trials = 0;
  if (runs[0].count("trials.ndjson")) {
    const std::string& t = runs[0].at("trials.ndjson");
    trials = static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n'));
  }
  const bool pass = diff.empty() && elapsed < 300.0 && trials == 4 && runs[0].size() >= 10;
  return {pass, fmt("%.0f files, %.0f hpo trials, ", static_cast<double>(runs[0].size()), static_cast<double>(trials)) +
                    (diff.empty() ? std::string("byte-identical (wall_time_ms masked)") : "differing: " + diff) +
                    fmt(" in %.1fs for two runs (limit 300s)", elapsed)};
}

}  // namespace

int main() {
  report(1, "metric-oracle equivalence", metric_oracles);
  report(2, "closed-form metric identities", metric_identities);
  report(3, "Pareto correctness", pareto_correctness);
  report(4, "grid exhaustiveness", grid_exhaustiveness);
  report(5, "LDA planted-topic recovery", lda_recovery);
  report(6, "CorEx anchoring", corex_anchoring);
  report(7, "cluster-pipeline geometry", cluster_geometry);
  report(8, "c-TF-IDF worked value", ctfidf_value);
  report(9, "MOO-TPE vs random search", tpe_vs_random);
  report(10, "end-to-end determinism", end_to_end);
  std::printf("%s: %d of 10 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
