#include "topicopt/embed_topics.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>

#include "topicopt/text_io.hpp"

namespace topicopt {

namespace {

// ---------------------------------------------------------------------------
// small dense linear algebra

/// Modified Gram-Schmidt on the columns of q, run twice. Columns that
/// vanish are zeroed.
void orthonormalize(Matrix& q) {
  const std::size_t rows = q.rows(), cols = q.cols();
  std::vector<double> scale(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += q(r, c) * q(r, c);
    scale[c] = std::sqrt(s);
  }
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t p = 0; p < c; ++p) {
        double dot = 0.0;
        for (std::size_t r = 0; r < rows; ++r) dot += q(r, c) * q(r, p);
        for (std::size_t r = 0; r < rows; ++r) q(r, c) -= dot * q(r, p);
      }
      double norm = 0.0;
      for (std::size_t r = 0; r < rows; ++r) norm += q(r, c) * q(r, c);
      norm = std::sqrt(norm);
      if (norm <= 1e-10 * std::max(scale[c], 1e-300) || norm == 0.0) {
        for (std::size_t r = 0; r < rows; ++r) q(r, c) = 0.0;
      } else {
        for (std::size_t r = 0; r < rows; ++r) q(r, c) /= norm;
      }
    }
  }
}

/// Cyclic Jacobi eigen-decomposition of a small symmetric matrix. Returns
/// eigenvalues; `vectors` receives them column-wise.
std::vector<double> symmetric_eigen(Matrix a, Matrix& vectors) {
  const std::size_t n = a.rows();
  vectors = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) vectors(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        total += a(i, j) * a(i, j);
        if (i != j) off += a(i, j) * a(i, j);
      }
    if (off <= 1e-30 * total || off == 0.0) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
  return values;
}

/// Subspace iteration for the top-k left singular directions of an operator
/// given through x*Q (rows x p) and x^T*Y (cols x p). Returns U*S, columns
/// by descending singular value, sign-normalised.
template <class Mul, class MulT>
Matrix subspace_scores(std::size_t rows, std::size_t cols, std::size_t k, std::uint64_t seed, Mul mul, MulT mul_t,
                       std::vector<double>* singular) {
  const std::size_t p = std::min(cols, k + 5);
  Rng rng(seed);
  Matrix q(cols, p);
  for (double& v : q.data()) v = rng.normal();
  orthonormalize(q);
  for (int it = 0; it < 40; ++it) {
    Matrix y = mul(q);
    q = mul_t(y);
    orthonormalize(q);
  }
  Matrix b = mul(q);  // rows x p
  Matrix gram(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < rows; ++r) s += b(r, i) * b(r, j);
      gram(i, j) = s;
    }
  Matrix vecs;
  std::vector<double> vals = symmetric_eigen(gram, vecs);
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return vals[x] > vals[y]; });

  Matrix scores(rows, k);
  std::vector<double> sv(k, 0.0);
  const double top = order.empty() ? 0.0 : std::sqrt(std::max(vals[order[0]], 0.0));
  for (std::size_t c = 0; c < k && c < p; ++c) {
    const std::size_t e = order[c];
    const double s = std::sqrt(std::max(vals[e], 0.0));
    if (top == 0.0 || s <= 1e-9 * top) continue;
    sv[c] = s;
    for (std::size_t r = 0; r < rows; ++r) {
      double v = 0.0;
      for (std::size_t i = 0; i < p; ++i) v += b(r, i) * vecs(i, e);
      scores(r, c) = v;
    }
    std::size_t arg = 0;
    for (std::size_t r = 1; r < rows; ++r)
      if (std::abs(scores(r, c)) > std::abs(scores(arg, c))) arg = r;
    if (scores(arg, c) < 0.0)
      for (std::size_t r = 0; r < rows; ++r) scores(r, c) = -scores(r, c);
  }
  if (singular != nullptr) *singular = sv;
  return scores;
}

std::vector<std::size_t> distinct_row_order(const Matrix& m) {
  std::vector<std::size_t> idx(m.rows());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    auto ra = m.row(a), rb = m.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return idx;
}

std::size_t count_distinct_rows(const Matrix& m) {
  if (m.rows() == 0) return 0;
  const auto idx = distinct_row_order(m);
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < idx.size(); ++i) {
    auto a = m.row(idx[i - 1]), b = m.row(idx[i]);
    if (!std::equal(a.begin(), a.end(), b.begin())) ++distinct;
  }
  return distinct;
}

void require_finite(const Matrix& m, const char* what) {
  for (std::size_t i = 0; i < m.data().size(); ++i)
    if (!std::isfinite(m.data()[i]))
      throw DataError(std::string(what) + " has a non-finite entry at row " + std::to_string(i / m.cols()));
}

double clip4(double g) { return std::clamp(g, -4.0, 4.0); }

}  // namespace

// ---------------------------------------------------------------------------
// embedding files

Matrix parse_embeddings_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() == 1 && rows[r][0].empty()) continue;
    std::vector<double> values;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      std::string cell = rows[r][c];
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ParseError("non-numeric embedding cell '" + rows[r][c] + "'", r + 1, c + 1);
      values.push_back(v);
    }
    if (!out.empty() && values.size() != out.front().size())
      throw DataError("embedding row " + std::to_string(r + 1) + " has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(out.front().size()));
    out.push_back(std::move(values));
  }
  return matrix_from_rows(out);
}

Matrix parse_embeddings_binary(std::string_view bytes) {
  static_assert(std::endian::native == std::endian::little, "binary embeddings assume a little-endian host");
  if (bytes.size() < 8) throw DataError("binary embedding file is shorter than its header");
  std::int32_t header[2];
  std::memcpy(header, bytes.data(), 8);
  if (header[0] < 0 || header[1] < 0) throw DataError("binary embedding header has a negative size");
  const auto n = static_cast<std::size_t>(header[0]), dim = static_cast<std::size_t>(header[1]);
  if (bytes.size() != 8 + n * dim * 4)
    throw DataError("binary embedding file holds " + std::to_string(bytes.size() - 8) + " payload bytes, header says " +
                    std::to_string(n) + "x" + std::to_string(dim) + " float32");
  Matrix m(n, dim);
  for (std::size_t i = 0; i < n * dim; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + 8 + 4 * i, 4);
    m.data()[i] = f;
  }
  return m;
}

std::string embeddings_to_csv(const Matrix& values) {
  std::string out;
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_double(values(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string embeddings_to_binary(const Matrix& values) {
  std::string out(8 + values.data().size() * 4, '\0');
  const std::int32_t header[2] = {static_cast<std::int32_t>(values.rows()), static_cast<std::int32_t>(values.cols())};
  std::memcpy(out.data(), header, 8);
  for (std::size_t i = 0; i < values.data().size(); ++i) {
    const float f = static_cast<float>(values.data()[i]);
    std::memcpy(out.data() + 8 + 4 * i, &f, 4);
  }
  return out;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, std::size_t n_docs) {
  const std::string ext = path.extension().string();
  const std::string bytes = read_file(path);
  EmbeddingMatrix out;
  out.provenance = EmbeddingProvenance::external_file;
  out.values = (ext == ".bin" || ext == ".f32") ? parse_embeddings_binary(bytes) : parse_embeddings_csv(bytes);
  if (out.values.rows() != n_docs)
    throw DataError("embedding file " + path.string() + " has " + std::to_string(out.values.rows()) +
                    " rows but the corpus has " + std::to_string(n_docs) + " documents");
  require_finite(out.values, "embedding matrix");
  return out;
}

// ---------------------------------------------------------------------------
// fallback embedder

Matrix truncated_svd_scores(const Matrix& x, std::size_t k, std::uint64_t seed, std::vector<double>* singular) {
  const std::size_t rows = x.rows(), cols = x.cols();
  auto mul = [&](const Matrix& q) {
    Matrix y(rows, q.cols());
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < cols; ++i) {
        const double v = x(r, i);
        if (v == 0.0) continue;
        for (std::size_t c = 0; c < q.cols(); ++c) y(r, c) += v * q(i, c);
      }
    return y;
  };
  auto mul_t = [&](const Matrix& y) {
    Matrix z(cols, y.cols());
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < cols; ++i) {
        const double v = x(r, i);
        if (v == 0.0) continue;
        for (std::size_t c = 0; c < y.cols(); ++c) z(i, c) += v * y(r, c);
      }
    return z;
  };
  return subspace_scores(rows, cols, k, seed, mul, mul_t, singular);
}

EmbeddingMatrix fallback_embed(const DocTermMatrix& matrix, std::size_t dim, std::uint64_t seed, Warnings* warnings) {
  if (matrix.empty()) throw DataError("fallback embedder: empty document-term matrix");
  if (dim < 1) throw ConfigError("embedding dimension must be >= 1");
  if (dim > matrix.n_terms())
    throw ConfigError("embedding dimension " + std::to_string(dim) + " exceeds the vocabulary size " +
                      std::to_string(matrix.n_terms()));
  const std::size_t n = matrix.n_docs(), v = matrix.n_terms();
  std::vector<double> df(v, 0.0);
  for (std::size_t d = 0; d < n; ++d)
    for (const auto& e : matrix.row(d)) df[e.term] += 1.0;

  struct Cell {
    std::uint32_t term;
    double value;
  };
  std::vector<std::vector<Cell>> rows(n);
  for (std::size_t d = 0; d < n; ++d) {
    const double len = static_cast<double>(matrix.row_sum(d));
    for (const auto& e : matrix.row(d))
      rows[d].push_back({e.term, (e.count / len) * std::log((static_cast<double>(n) + 1.0) / df[e.term])});
  }
  auto mul = [&](const Matrix& q) {
    Matrix y(n, q.cols());
    for (std::size_t d = 0; d < n; ++d)
      for (const auto& cell : rows[d])
        for (std::size_t c = 0; c < q.cols(); ++c) y(d, c) += cell.value * q(cell.term, c);
    return y;
  };
  auto mul_t = [&](const Matrix& y) {
    Matrix z(v, y.cols());
    for (std::size_t d = 0; d < n; ++d)
      for (const auto& cell : rows[d])
        for (std::size_t c = 0; c < y.cols(); ++c) z(cell.term, c) += cell.value * y(d, c);
    return z;
  };
  std::vector<double> sv;
  EmbeddingMatrix out;
  out.provenance = EmbeddingProvenance::fallback;
  out.values = subspace_scores(n, v, dim, seed, mul, mul_t, &sv);
  const auto zero = static_cast<std::size_t>(std::count(sv.begin(), sv.end(), 0.0));
  if (zero > 0)
    warn(warnings, "fallback embedder: " + std::to_string(zero) + " of " + std::to_string(dim) +
                       " components exceed the numerical rank and are zero");
  return out;
}

// ---------------------------------------------------------------------------
// UMAP

void UMAPConfig::validate() const {
  if (n_neighbors < 2) throw ConfigError("umap.n_neighbors must be >= 2");
  if (n_components < 2) throw ConfigError("umap.n_components must be >= 2");
  if (!(min_dist > 0.0 && min_dist < 1.0)) throw ConfigError("umap.min_dist must lie in (0, 1)");
  if (!(spread > 0.0)) throw ConfigError("umap.spread must be > 0");
  if (n_epochs < 1) throw ConfigError("umap.n_epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("umap.learning_rate must be > 0");
}

FuzzyGraph fuzzy_graph(const Matrix& points, std::size_t k) {
  const std::size_t n = points.rows();
  if (k < 1 || k >= n)
    throw ConfigError("umap.n_neighbors (" + std::to_string(k) + ") must be < the number of points (" +
                      std::to_string(n) + ")");
  FuzzyGraph g;
  g.neighbors.resize(n);
  g.distances.resize(n);
  g.rho.assign(n, 0.0);
  g.sigma.assign(n, 1.0);

  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cand.emplace_back(std::sqrt(squared_distance(points.row(i), points.row(j))), j);
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t t = 0; t < k; ++t) {
      g.neighbors[i].push_back(cand[t].second);
      g.distances[i].push_back(cand[t].first);
    }
  }

  double mean_all = 0.0;
  for (const auto& ds : g.distances)
    for (double d : ds) mean_all += d;
  mean_all /= static_cast<double>(n * k);

  const double target = std::log2(static_cast<double>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ds = g.distances[i];
    for (double d : ds)
      if (d > 0.0) {
        g.rho[i] = d;
        break;
      }
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
    for (int it = 0; it < 64; ++it) {
      double psum = 0.0;
      for (double d : ds) {
        const double x = d - g.rho[i];
        psum += x > 0.0 ? std::exp(-x / mid) : 1.0;
      }
      if (std::abs(psum - target) < 1e-5) break;
      if (psum > target) {
        hi = mid;
        mid = (lo + hi) / 2.0;
      } else {
        lo = mid;
        mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
      }
    }
    const double mean_i = std::accumulate(ds.begin(), ds.end(), 0.0) / static_cast<double>(k);
    const double floor = 1e-3 * (g.rho[i] > 0.0 ? mean_i : mean_all);
    g.sigma[i] = std::max(mid, floor);
  }

  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> sym;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t j = g.neighbors[i][t];
      const double x = g.distances[i][t] - g.rho[i];
      const double p = x > 0.0 ? std::exp(-x / g.sigma[i]) : 1.0;
      if (i < j) {
        sym[{i, j}].first = p;
      } else {
        sym[{j, i}].second = p;
      }
    }
  for (const auto& [key, pq] : sym) {
    const double w = pq.first + pq.second - pq.first * pq.second;
    if (w <= 0.0) continue;
    g.head.push_back(key.first);
    g.tail.push_back(key.second);
    g.weight.push_back(w);
  }
  return g;
}

std::pair<double, double> fit_ab(double min_dist, double spread) {
  constexpr std::size_t kSamples = 300;
  std::vector<double> xs(kSamples), ys(kSamples);
  for (std::size_t i = 0; i < kSamples; ++i) {
    xs[i] = 3.0 * spread * static_cast<double>(i) / static_cast<double>(kSamples - 1);
    ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
  }
  auto cost = [&](double a, double b) {
    double c = 0.0;
    for (std::size_t i = 0; i < kSamples; ++i) {
      const double r = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b)) - ys[i];
      c += r * r;
    }
    return c;
  };
  double a = 1.0, b = 1.0, lambda = 1e-3;
  double current = cost(a, b);
  for (int it = 0; it < 500 && lambda < 1e12; ++it) {
    double jaa = 0.0, jab = 0.0, jbb = 0.0, ga = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < kSamples; ++i) {
      const double x = xs[i];
      const double xp = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
      const double f = 1.0 / (1.0 + a * xp);
      const double r = f - ys[i];
      const double da = -xp * f * f;
      const double db = x > 0.0 ? -a * xp * 2.0 * std::log(x) * f * f : 0.0;
      jaa += da * da;
      jab += da * db;
      jbb += db * db;
      ga += da * r;
      gb += db * r;
    }
    const double m00 = jaa * (1.0 + lambda), m11 = jbb * (1.0 + lambda), m01 = jab;
    const double det = m00 * m11 - m01 * m01;
    if (!(std::abs(det) > 0.0)) break;
    const double step_a = -(m11 * ga - m01 * gb) / det;
    const double step_b = -(m00 * gb - m01 * ga) / det;
    const double na = a + step_a, nb = b + step_b;
    const double next = (na > 0.0 && nb > 0.0) ? cost(na, nb) : std::numeric_limits<double>::infinity();
    if (next < current) {
      a = na;
      b = nb;
      const bool done = std::abs(step_a) < 1e-12 && std::abs(step_b) < 1e-12;
      current = next;
      lambda /= 10.0;
      if (done) break;
    } else {
      lambda *= 10.0;
    }
  }
  if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0) return {1.0, 1.0};
  return {a, b};
}

Matrix umap_reduce(const Matrix& embeddings, const UMAPConfig& config) {
  config.validate();
  const std::size_t n = embeddings.rows(), dim = config.n_components;
  if (n == 0) throw DataError("umap: no points");
  require_finite(embeddings, "embedding matrix");
  if (config.n_neighbors >= n)
    throw ConfigError("umap.n_neighbors (" + std::to_string(config.n_neighbors) + ") must be < the number of documents (" +
                      std::to_string(n) + ")");
  const std::size_t distinct = count_distinct_rows(embeddings);
  if (distinct <= 1) throw DataError("umap: degenerate metric structure (all points are identical)");
  if (distinct < dim + 1)
    throw DataError("umap: " + std::to_string(distinct) + " distinct points cannot span " + std::to_string(dim) +
                    " components (need at least " + std::to_string(dim + 1) + ")");

  FuzzyGraph graph = fuzzy_graph(embeddings, config.n_neighbors);
  const auto [a, b] = fit_ab(config.min_dist, config.spread);

  // PCA start, scaled to [-10, 10]; components past the data rank are drawn
  // uniformly instead.
  Matrix centered = embeddings;
  for (std::size_t c = 0; c < centered.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += centered(r, c);
    mean /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) centered(r, c) -= mean;
  }
  const std::size_t pcs = std::min(dim, centered.cols());
  Matrix pca = truncated_svd_scores(centered, pcs, mix_seed(config.seed, 1));
  Rng init_rng(mix_seed(config.seed, 2));
  Matrix y(n, dim);
  double max_abs = 0.0;
  for (double v : pca.data()) max_abs = std::max(max_abs, std::abs(v));
  for (std::size_t c = 0; c < dim; ++c) {
    bool zero = true;
    if (c < pcs)
      for (std::size_t r = 0; r < n; ++r) zero = zero && pca(r, c) == 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double base = zero ? 20.0 * init_rng.uniform() - 10.0 : 10.0 * pca(r, c) / max_abs;
      y(r, c) = base + 1e-4 * init_rng.normal();
    }
  }

  // Each undirected edge is visited from both ends.
  std::vector<std::size_t> head, tail;
  std::vector<double> weight;
  double max_w = 0.0;
  for (double w : graph.weight) max_w = std::max(max_w, w);
  for (std::size_t e = 0; e < graph.weight.size(); ++e) {
    if (graph.weight[e] < max_w / static_cast<double>(config.n_epochs)) continue;
    for (int dir = 0; dir < 2; ++dir) {
      head.push_back(dir == 0 ? graph.head[e] : graph.tail[e]);
      tail.push_back(dir == 0 ? graph.tail[e] : graph.head[e]);
      weight.push_back(graph.weight[e]);
    }
  }
  const std::size_t n_edges = weight.size();
  std::vector<double> per_sample(n_edges), next_sample(n_edges), per_negative(n_edges), next_negative(n_edges);
  for (std::size_t e = 0; e < n_edges; ++e) {
    per_sample[e] = max_w / weight[e];
    next_sample[e] = per_sample[e];
    per_negative[e] = per_sample[e] / static_cast<double>(config.negative_sample_rate);
    next_negative[e] = per_negative[e];
  }

  Rng rng(mix_seed(config.seed, 3));
  std::vector<double> diff(dim);
  for (std::size_t epoch = 0; epoch < config.n_epochs; ++epoch) {
    const double alpha =
        config.learning_rate * (1.0 - static_cast<double>(epoch) / static_cast<double>(config.n_epochs));
    const double now = static_cast<double>(epoch);
    for (std::size_t e = 0; e < n_edges; ++e) {
      if (next_sample[e] > now) continue;
      const std::size_t i = head[e], j = tail[e];
      auto yi = y.row(i);
      auto yj = y.row(j);
      double d2 = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        diff[c] = yi[c] - yj[c];
        d2 += diff[c] * diff[c];
      }
      double coeff = 0.0;
      if (d2 > 0.0) coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
      for (std::size_t c = 0; c < dim; ++c) {
        const double g = clip4(coeff * diff[c]);
        yi[c] += g * alpha;
        yj[c] -= g * alpha;
      }
      next_sample[e] += per_sample[e];

      const auto n_neg = static_cast<std::size_t>(std::max(0.0, (now - next_negative[e]) / per_negative[e]));
      for (std::size_t s = 0; s < n_neg; ++s) {
        const std::size_t k = rng.below(n);
        auto yk = y.row(k);
        d2 = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
          diff[c] = yi[c] - yk[c];
          d2 += diff[c] * diff[c];
        }
        if (d2 > 0.0) {
          coeff = 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0));
        } else if (k == i) {
          continue;
        } else {
          coeff = 0.0;
        }
        for (std::size_t c = 0; c < dim; ++c) {
          const double g = coeff > 0.0 ? clip4(coeff * diff[c]) : 4.0;
          yi[c] += g * alpha;
        }
      }
      next_negative[e] += static_cast<double>(n_neg) * per_negative[e];
    }
  }
  require_finite(y, "umap output");
  return y;
}

// ---------------------------------------------------------------------------
// K-Means

void KMeansConfig::validate() const {
  if (n_clusters < 1) throw ConfigError("kmeans.n_clusters must be >= 1");
  if (max_iter < 1) throw ConfigError("kmeans.max_iter must be >= 1");
  if (n_init < 1) throw ConfigError("kmeans.n_init must be >= 1");
}

double kmeans_inertia(const Matrix& points, const std::vector<std::size_t>& assignments, const Matrix& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) s += squared_distance(points.row(i), centroids.row(assignments[i]));
  return s;
}

namespace {

KMeansResult kmeans_once(const Matrix& x, std::size_t k, std::size_t max_iter, Rng& rng) {
  const std::size_t n = x.rows(), dim = x.cols();
  Matrix centers(k, dim);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = rng.below(n);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t pick = c == 0 ? first : rng.categorical(d2);
    std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(x.row(i), centers.row(c)));
  }

  KMeansResult r;
  r.assignments.assign(n, 0);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> sizes(k);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(x.row(i), centers.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squared_distance(x.row(i), centers.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (it == 0 || best != r.assignments[i]) changed = true;
      r.assignments[i] = best;
      inertia += best_d;
    }
    r.inertia_trace.push_back(inertia);
    if (!changed) break;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++sizes[r.assignments[i]];
      for (std::size_t t = 0; t < dim; ++t) sums[r.assignments[i] * dim + t] += x(i, t);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (std::size_t t = 0; t < dim; ++t) centers(c, t) = sums[c * dim + t] / static_cast<double>(sizes[c]);
    }
  }
  r.centroids = centers;
  r.inertia = kmeans_inertia(x, r.assignments, centers);
  return r;
}

}  // namespace

KMeansResult kmeans_cluster(const Matrix& points, const KMeansConfig& config) {
  config.validate();
  if (points.rows() == 0) throw DataError("kmeans: no points");
  require_finite(points, "kmeans input");
  const std::size_t distinct = count_distinct_rows(points);
  if (config.n_clusters > distinct)
    throw DataError("kmeans.n_clusters (" + std::to_string(config.n_clusters) + ") exceeds the " +
                    std::to_string(distinct) + " distinct points");
  KMeansResult best;
  for (std::size_t run = 0; run < config.n_init; ++run) {
    Rng rng(mix_seed(config.seed, run));
    KMeansResult r = kmeans_once(points, config.n_clusters, config.max_iter, rng);
    if (run == 0 || r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

// ---------------------------------------------------------------------------
// c-TF-IDF

CTfIdfModel ctfidf(const DocTermMatrix& counts, const std::vector<std::size_t>& assignments, std::size_t n_clusters,
                   Warnings* warnings) {
  if (assignments.size() != counts.n_docs())
    throw DataError("c-TF-IDF: " + std::to_string(assignments.size()) + " assignments for " +
                    std::to_string(counts.n_docs()) + " documents");
  const std::size_t v = counts.n_terms();
  CTfIdfModel m;
  Matrix per_cluster(n_clusters, v);
  m.cluster_length.assign(n_clusters, 0.0);
  m.term_frequency.assign(v, 0.0);
  std::vector<std::size_t> docs_in(n_clusters, 0);
  for (std::size_t d = 0; d < counts.n_docs(); ++d) {
    const std::size_t c = assignments[d];
    if (c >= n_clusters) throw DataError("c-TF-IDF: assignment " + std::to_string(c) + " is out of range");
    ++docs_in[c];
    for (const auto& e : counts.row(d)) {
      per_cluster(c, e.term) += e.count;
      m.cluster_length[c] += e.count;
      m.term_frequency[e.term] += e.count;
    }
  }
  std::size_t non_empty = 0;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    if (m.cluster_length[c] > 0.0) {
      m.average_length += m.cluster_length[c];
      ++non_empty;
    } else {
      warn(warnings, "cluster " + std::to_string(c) + " is empty; its c-TF-IDF row is zero");
    }
  }
  if (non_empty > 0) m.average_length /= static_cast<double>(non_empty);
  m.weights = Matrix(n_clusters, v);
  for (std::size_t c = 0; c < n_clusters; ++c) {
    if (m.cluster_length[c] == 0.0) continue;
    for (std::size_t t = 0; t < v; ++t) {
      const double count = per_cluster(c, t);
      if (count == 0.0) continue;
      m.weights(c, t) = (count / m.cluster_length[c]) * std::log(1.0 + m.average_length / m.term_frequency[t]);
    }
  }
  return m;
}

std::pair<Vocabulary, CTfIdfModel> ctfidf(const Corpus& corpus, const std::vector<std::size_t>& assignments,
                                          std::size_t n_clusters, int n_max, Warnings* warnings) {
  auto [vocab, counts] = build_matrix(corpus, n_max);
  return {std::move(vocab), ctfidf(counts, assignments, n_clusters, warnings)};
}

TopicSet extract_cluster_topics(const CTfIdfModel& model, const Vocabulary& vocab, std::size_t n) {
  if (n < 1) throw ConfigError("top-word count must be >= 1");
  return topics_from_weights(model.weights, vocab, n, 0.0);
}

Matrix cluster_topic_word(const CTfIdfModel& model) {
  Matrix out = model.weights;
  for (std::size_t c = 0; c < out.rows(); ++c) {
    auto row = out.row(c);
    const double s = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& v : row) v = s > 0.0 ? v / s : 1.0 / static_cast<double>(row.size());
  }
  return out;
}

Matrix doc_topic_distribution(const Matrix& points, const Matrix& centroids, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("softmax temperature must be > 0");
  if (points.cols() != centroids.cols())
    throw DataError("doc-topic: points have " + std::to_string(points.cols()) + " dimensions, centroids " +
                    std::to_string(centroids.cols()));
  const std::size_t k = centroids.rows();
  Matrix out(points.rows(), k);
  std::vector<double> logits(k);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      logits[c] = -std::sqrt(squared_distance(points.row(i), centroids.row(c))) / temperature;
      hi = std::max(hi, logits[c]);
    }
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(logits[c] - hi);
    for (std::size_t c = 0; c < k; ++c) out(i, c) = std::exp(logits[c] - hi) / z;
  }
  return out;
}

ClusterTopicModel fit_cluster_model(const Corpus& corpus, const Matrix& embeddings, const ClusterConfig& config,
                                    Warnings* warnings) {
  if (embeddings.rows() != corpus.size())
    throw DataError("cluster model: " + std::to_string(embeddings.rows()) + " embedding rows for " +
                    std::to_string(corpus.size()) + " documents");
  if (config.n_gram < 1 || config.n_gram > 3) throw ConfigError("n_gram must be 1, 2 or 3");
  ClusterTopicModel m;
  m.reduced = umap_reduce(embeddings, config.umap);
  m.clusters = kmeans_cluster(m.reduced, config.kmeans);
  auto [vocab, counts] = build_matrix(corpus, config.n_gram);
  m.vocab = std::move(vocab);
  m.counts = std::move(counts);
  m.ctfidf = ctfidf(m.counts, m.clusters.assignments, config.kmeans.n_clusters, warnings);
  m.doc_topic = doc_topic_distribution(m.reduced, m.clusters.centroids, config.temperature);
  return m;
}

}  // namespace topicopt
