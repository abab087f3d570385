#include <doctest.h>

#include <cstring>

#include "oracles.hpp"
#include "topicopt/embed_topics.hpp"

using namespace topicopt;

namespace {

Matrix blobs(std::uint64_t seed, std::vector<std::size_t>* labels) {
  Rng rng(seed * 100);
  Matrix x(60, 10);
  labels->assign(60, 0);
  for (std::size_t i = 0; i < 60; ++i) {
    (*labels)[i] = i % 3;
    for (std::size_t c = 0; c < 10; ++c) x(i, c) = (c == (*labels)[i] ? 10.0 : 0.0) + rng.normal();
  }
  return x;
}

std::vector<double> row_vec(const Matrix& m, std::size_t r) { return {m.row(r).begin(), m.row(r).end()}; }

std::vector<std::size_t> knn(const Matrix& x, std::size_t i, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t j = 0; j < x.rows(); ++j) {
    if (j == i) continue;
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
    d.emplace_back(s, j);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < k; ++r) out.push_back(d[r].second);
  std::sort(out.begin(), out.end());
  return out;
}

double knn_recall(const Matrix& high, const Matrix& low, std::size_t k) {
  double hit = 0.0;
  for (std::size_t i = 0; i < high.rows(); ++i) {
    const auto a = knn(high, i, k), b = knn(low, i, k);
    std::vector<std::size_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    hit += static_cast<double>(both.size());
  }
  return hit / static_cast<double>(high.rows() * k);
}

/// Plain Lloyd from k distinct random points; returns the final inertia.
double random_restart_inertia(const Matrix& x, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pick;
  while (pick.size() < k) {
    const std::size_t i = rng.below(x.rows());
    if (std::find(pick.begin(), pick.end(), i) == pick.end()) pick.push_back(i);
  }
  std::vector<std::vector<double>> c;
  for (std::size_t i : pick) c.push_back(row_vec(x, i));
  std::vector<std::size_t> a(x.rows(), k);
  for (int it = 0; it < 300; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      std::size_t best = 0;
      double bd = INFINITY;
      for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t d = 0; d < x.cols(); ++d) s += (x(i, d) - c[j][d]) * (x(i, d) - c[j][d]);
        if (s < bd) {
          bd = s;
          best = j;
        }
      }
      changed = changed || a[i] != best;
      a[i] = best;
    }
    if (!changed) break;
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> sum(x.cols(), 0.0);
      double n = 0;
      for (std::size_t i = 0; i < x.rows(); ++i)
        if (a[i] == j) {
          for (std::size_t d = 0; d < x.cols(); ++d) sum[d] += x(i, d);
          n += 1;
        }
      if (n > 0)
        for (std::size_t d = 0; d < x.cols(); ++d) c[j][d] = sum[d] / n;
    }
  }
  double inertia = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t d = 0; d < x.cols(); ++d) inertia += (x(i, d) - c[a[i]][d]) * (x(i, d) - c[a[i]][d]);
  return inertia;
}

Corpus docs_of(const std::vector<std::vector<std::string>>& docs) {
  Corpus c;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    Document d;
    d.tokens = docs[i];
    d.doc_id = i;
    c.docs.push_back(d);
  }
  return c;
}

}  // namespace

TEST_SUITE("embed_topics") {
  TEST_CASE("embedding CSV parses and round-trips bit-exactly") {
    const Matrix m = parse_embeddings_csv("1,2,3,4\n5,6,7,8\n9,10,11,12\n");
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 4);
    CHECK(m(2, 3) == 12.0);

    Rng rng(1);
    Matrix big(1000, 6);
    for (double& v : big.data()) v = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(9)) - 4.0);
    CHECK(parse_embeddings_csv(embeddings_to_csv(big)) == big);

    Matrix f32(1000, 6);
    for (double& v : f32.data()) v = static_cast<float>(rng.normal());
    const std::string bytes = embeddings_to_binary(f32);
    CHECK(bytes.size() == 8 + 1000 * 6 * 4);
    CHECK(parse_embeddings_binary(bytes) == f32);
  }

  TEST_CASE("malformed embedding files") {
    CHECK_THROWS_AS(parse_embeddings_csv("1,2\n3\n"), DataError);
    try {
      parse_embeddings_csv("1,2\n3,x\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(e.column() == 2);
    }
    CHECK_THROWS_AS(parse_embeddings_binary("abc"), DataError);
    std::string truncated = embeddings_to_binary(Matrix(2, 2, 1.0));
    truncated.pop_back();
    CHECK_THROWS_AS(parse_embeddings_binary(truncated), DataError);
  }

  TEST_CASE("fallback embedder") {
    const DocTermMatrix same(3, {{{0, 2}, {1, 1}}, {{0, 2}, {1, 1}}, {{2, 1}}});
    const EmbeddingMatrix e = fallback_embed(same, 2, 5);
    CHECK(e.provenance == EmbeddingProvenance::fallback);
    CHECK(e.values.rows() == 3);
    for (std::size_t c = 0; c < 2; ++c) CHECK(e.values(0, c) == e.values(1, c));
    CHECK(fallback_embed(same, 2, 5).values == e.values);

    const DocTermMatrix ortho(2, {{{0, 1}}, {{1, 1}}});
    const Matrix o = fallback_embed(ortho, 2, 3).values;
    CHECK(std::abs(oracle::cosine(row_vec(o, 0), row_vec(o, 1))) < 1e-9);

    CHECK_THROWS_AS(fallback_embed(ortho, 3, 1), ConfigError);
    Warnings w;
    const Matrix r = fallback_embed(DocTermMatrix(3, {{{0, 1}}, {{1, 2}}}), 3, 1, &w).values;
    CHECK(!w.empty());
    for (std::size_t i = 0; i < r.rows(); ++i) CHECK(r(i, 2) == 0.0);
  }

  TEST_CASE("fuzzy graph: nearest neighbour has membership 1") {
    std::vector<std::size_t> labels;
    const Matrix x = blobs(2, &labels);
    const FuzzyGraph g = fuzzy_graph(x, 10);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      REQUIRE(g.neighbors[i].size() == 10);
      CHECK(g.distances[i][0] - g.rho[i] == doctest::Approx(0.0));
      double s = 0.0;
      for (double d : g.distances[i]) s += std::exp(-std::max(0.0, d - g.rho[i]) / g.sigma[i]);
      CHECK(s == doctest::Approx(std::log2(10.0)).epsilon(1e-4));
    }
    for (std::size_t e = 0; e < g.weight.size(); ++e) {
      CHECK(g.weight[e] > 0.0);
      CHECK(g.weight[e] <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("umap: shape, finiteness, determinism, degenerate input") {
    std::vector<std::size_t> labels;
    const Matrix x = blobs(1, &labels);
    UMAPConfig c;
    c.n_components = 3;
    c.n_neighbors = 10;
    c.n_epochs = 50;
    const Matrix y = umap_reduce(x, c);
    CHECK(y.rows() == 60);
    CHECK(y.cols() == 3);
    for (double v : y.data()) CHECK(std::isfinite(v));
    CHECK(umap_reduce(x, c) == y);
    CHECK_THROWS_AS(umap_reduce(Matrix(20, 4, 1.0), c), DataError);
    c.n_neighbors = 60;
    CHECK_THROWS_AS(umap_reduce(x, c), ConfigError);
  }

  TEST_CASE("umap keeps blobs apart and beats a random projection on kNN recall") {
    double umap_recall = 0.0, proj_recall = 0.0;
    int good = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      std::vector<std::size_t> labels;
      const Matrix x = blobs(seed, &labels);
      UMAPConfig u;
      u.n_components = 2;
      u.seed = seed;
      const Matrix y = umap_reduce(x, u);
      KMeansConfig k;
      k.n_clusters = 3;
      k.seed = seed;
      if (oracle::adjusted_rand_index(kmeans_cluster(y, k).assignments, labels) >= 0.9) ++good;
      Rng rng(seed + 900);
      Matrix proj(10, 2);
      for (double& v : proj.data()) v = rng.normal();
      Matrix p(60, 2);
      for (std::size_t i = 0; i < 60; ++i)
        for (std::size_t c = 0; c < 2; ++c)
          for (std::size_t d = 0; d < 10; ++d) p(i, c) += x(i, d) * proj(d, c);
      umap_recall += knn_recall(x, y, 15);
      proj_recall += knn_recall(x, p, 15);
    }
    CHECK(good >= 4);
    CHECK(umap_recall > proj_recall);
  }

  TEST_CASE("fit_ab matches the usual defaults") {
    const auto [a, b] = fit_ab(0.1, 1.0);
    CHECK(a == doctest::Approx(1.577).epsilon(0.02));
    CHECK(b == doctest::Approx(0.895).epsilon(0.02));
  }

  TEST_CASE("kmeans small cases") {
    KMeansConfig c;
    c.n_clusters = 2;
    const KMeansResult r = kmeans_cluster(matrix_from_rows({{0.0}, {10.0}}), c);
    std::vector<double> cs = {r.centroids(0, 0), r.centroids(1, 0)};
    std::sort(cs.begin(), cs.end());
    CHECK(cs == std::vector<double>{0.0, 10.0});
    CHECK(r.inertia == 0.0);

    c.n_clusters = 1;
    const Matrix pts = matrix_from_rows({{1, 2}, {3, 4}, {8, 0}});
    const KMeansResult one = kmeans_cluster(pts, c);
    CHECK(one.centroids(0, 0) == doctest::Approx(4.0));
    CHECK(one.centroids(0, 1) == doctest::Approx(2.0));

    c.n_clusters = 3;
    CHECK_THROWS_AS(kmeans_cluster(matrix_from_rows({{1.0}, {1.0}, {2.0}}), c), DataError);
    c.n_clusters = 0;
    CHECK_THROWS_AS(kmeans_cluster(pts, c), ConfigError);
  }

  TEST_CASE("kmeans inertia trace never increases and is near the restart optimum") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      std::vector<std::size_t> labels;
      const Matrix x = blobs(seed, &labels);
      KMeansConfig c;
      c.n_clusters = 3;
      c.seed = seed;
      const KMeansResult r = kmeans_cluster(x, c);
      for (std::size_t i = 1; i < r.inertia_trace.size(); ++i) CHECK(r.inertia_trace[i] <= r.inertia_trace[i - 1] + 1e-9);
      CHECK(kmeans_inertia(x, r.assignments, r.centroids) == doctest::Approx(r.inertia).epsilon(1e-12));
      Rng rng(seed * 31);
      double best = INFINITY;
      for (int t = 0; t < 50; ++t) best = std::min(best, random_restart_inertia(x, 3, rng));
      CHECK(r.inertia <= best * 1.01);
    }
  }

  TEST_CASE("c-TF-IDF worked value") {
    // t = term 0; c1 has 4 t + 6 filler, c2 has 1 t + 9 filler.
    const DocTermMatrix counts(3, {{{0, 4}, {1, 6}}, {{0, 1}, {2, 9}}});
    const CTfIdfModel m = ctfidf(counts, {0, 1}, 2);
    CHECK(m.average_length == 10.0);
    CHECK(std::abs(m.weights(0, 0) - 0.4 * std::log(3.0)) <= 1e-12);
    CHECK(m.weights(0, 2) == 0.0);
    CHECK(m.weights(1, 1) == 0.0);
  }

  TEST_CASE("c-TF-IDF edge cases") {
    Warnings w;
    const DocTermMatrix counts(2, {{{0, 1}}, {{1, 2}}});
    const CTfIdfModel m = ctfidf(counts, {0, 0}, 2, &w);
    CHECK(w.size() == 1);
    CHECK(m.weights(1, 0) == 0.0);
    CHECK(m.weights(1, 1) == 0.0);
    CHECK_THROWS_AS(ctfidf(counts, {0}, 2), DataError);
    CHECK_THROWS_AS(ctfidf(counts, {0, 2}, 2), DataError);

    // One cluster: W ranks terms exactly like raw frequency.
    const DocTermMatrix one(4, {{{0, 5}, {1, 2}}, {{2, 7}, {3, 1}}});
    const CTfIdfModel s = ctfidf(one, {0, 0}, 1);
    const Vocabulary v({"a", "b", "c", "d"});
    CHECK(extract_cluster_topics(s, v, 4).topics[0] == std::vector<std::string>{"c", "a", "b", "d"});
  }

  TEST_CASE("c-TF-IDF rankings survive scaling every document count") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::vector<std::string>> docs(12);
      std::vector<std::size_t> assign(12);
      for (std::size_t d = 0; d < docs.size(); ++d) {
        assign[d] = d % 3;
        docs[d].resize(2 + rng.below(10));
        for (auto& t : docs[d]) t = std::string(1, static_cast<char>('a' + rng.below(8)));
      }
      std::vector<std::vector<std::string>> tripled;
      std::vector<std::size_t> assign3;
      for (std::size_t d = 0; d < docs.size(); ++d)
        for (int r = 0; r < 3; ++r) {
          tripled.push_back(docs[d]);
          assign3.push_back(assign[d]);
        }
      const auto [v1, m1] = ctfidf(docs_of(docs), assign, 3, 1);
      const auto [v3, m3] = ctfidf(docs_of(tripled), assign3, 3, 1);
      CHECK(extract_cluster_topics(m1, v1, 8).topics == extract_cluster_topics(m3, v3, 8).topics);
    }
  }

  TEST_CASE("extract_cluster_topics ranking") {
    CTfIdfModel m;
    m.weights = matrix_from_rows({{0, 0, 1, 0}, {0.3, 0.1, 0.3, 0.2}});
    const Vocabulary v({"a", "b", "c", "d"});
    const TopicSet t = extract_cluster_topics(m, v, 3);
    CHECK(t.topics[0] == std::vector<std::string>{"c"});
    CHECK(t.topics[1] == std::vector<std::string>{"a", "c", "d"});

    Rng rng(9);
    Matrix w(3, 30);
    std::vector<std::string> terms;
    for (int i = 0; i < 30; ++i) terms.push_back("t" + std::to_string(100 + i));
    for (double& x : w.data()) x = rng.uniform();
    m.weights = w;
    const TopicSet r = extract_cluster_topics(m, Vocabulary(terms), 10);
    for (std::size_t k = 0; k < 3; ++k) {
      std::vector<std::pair<double, std::size_t>> order;
      for (std::size_t i = 0; i < 30; ++i) order.emplace_back(-w(k, i), i);
      std::sort(order.begin(), order.end());
      for (std::size_t i = 0; i < 10; ++i) CHECK(r.topics[k][i] == terms[order[i].second]);
    }
  }

  TEST_CASE("doc-topic softmax") {
    const Matrix cent = matrix_from_rows({{0, 0}, {100, 0}});
    const Matrix d = doc_topic_distribution(matrix_from_rows({{0, 0}, {50, 0}}), cent);
    CHECK(d(0, 0) == doctest::Approx(1.0));
    CHECK(d(0, 1) < 1e-40);
    CHECK(d(1, 0) == doctest::Approx(0.5).epsilon(1e-12));

    Rng rng(2);
    Matrix pts(25, 3), cs(4, 3);
    for (double& v : pts.data()) v = rng.normal();
    for (double& v : cs.data()) v = rng.normal();
    const Matrix s = doc_topic_distribution(pts, cs, 0.7);
    for (std::size_t i = 0; i < 25; ++i) {
      std::vector<double> e(4);
      double z = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        const double dist = std::sqrt(squared_distance(pts.row(i), cs.row(j)));
        e[j] = std::exp(-dist / 0.7);
        z += e[j];
      }
      for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(s(i, j) - e[j] / z) <= 1e-12);
    }
  }

  TEST_CASE("cluster pipeline is deterministic") {
    SynthOptions o;
    o.n_docs = 60;
    o.n_topics = 3;
    const Corpus corpus = synth_corpus(o).corpus;
    const auto [v, m] = build_matrix(corpus, 1);
    const Matrix emb = fallback_embed(m, 8, 3).values;
    ClusterConfig c;
    c.kmeans.n_clusters = 3;
    c.umap.n_neighbors = 10;
    const ClusterTopicModel a = fit_cluster_model(corpus, emb, c);
    const ClusterTopicModel b = fit_cluster_model(corpus, emb, c);
    CHECK(a.reduced == b.reduced);
    CHECK(a.clusters.assignments == b.clusters.assignments);
    CHECK(a.ctfidf.weights == b.ctfidf.weights);
    for (std::size_t i = 0; i < a.doc_topic.rows(); ++i) {
      double s = 0.0;
      for (double x : a.doc_topic.row(i)) s += x;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}
