#pragma once

// Brute-force reference implementations used only by the tests. None of
// them calls into the library for the quantity being checked.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

inline std::vector<std::string> split_term(const std::string& term) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : term) {
    if (c == '_') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

/// Every contiguous n-gram of orders 1..n_max with its count.
inline std::map<std::string, int> ngram_counts(const Tokens& doc, int n_max) {
  std::map<std::string, int> out;
  for (int n = 1; n <= n_max; ++n)
    for (std::size_t i = 0; i + n <= doc.size(); ++i) {
      std::string g = doc[i];
      for (int k = 1; k < n; ++k) g += "_" + doc[i + k];
      ++out[g];
    }
  return out;
}

/// The windows of a token stream: width min(w, len), stride 1.
inline std::vector<Tokens> windows(const Tokens& doc, std::size_t w) {
  std::vector<Tokens> out;
  if (doc.empty()) return out;
  const std::size_t width = std::min(w, doc.size());
  for (std::size_t s = 0; s + width <= doc.size(); ++s) out.emplace_back(doc.begin() + s, doc.begin() + s + width);
  return out;
}

inline bool window_has(const Tokens& win, const std::string& term) {
  const auto parts = split_term(term);
  for (std::size_t i = 0; i + parts.size() <= win.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < parts.size() && ok; ++k) ok = win[i + k] == parts[k];
    if (ok) return true;
  }
  return false;
}

struct WindowStats {
  double n = 0;
  std::map<std::string, double> single;
  std::map<std::pair<std::string, std::string>, double> pair;
};

inline WindowStats window_stats(const std::vector<Tokens>& docs, const std::vector<std::string>& terms, std::size_t w) {
  WindowStats s;
  for (const auto& d : docs)
    for (const auto& win : windows(d, w)) {
      s.n += 1;
      for (const auto& a : terms)
        if (window_has(win, a)) {
          s.single[a] += 1;
          for (const auto& b : terms)
            if (a < b && window_has(win, b)) s.pair[{a, b}] += 1;
        }
    }
  return s;
}

inline double npmi(const WindowStats& s, const std::string& a, const std::string& b, double eps = 1e-10) {
  const double pa = s.single.count(a) ? s.single.at(a) / s.n : 0.0;
  const double pb = s.single.count(b) ? s.single.at(b) / s.n : 0.0;
  const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  double pab = a == b ? pa : (s.pair.count(key) ? s.pair.at(key) / s.n : 0.0);
  if (pab >= 1.0) return 1.0;
  if (pab == 0.0) pab = eps;
  return std::log(pab / (pa * pb)) / -std::log(pab);
}

/// Mean over topics of the mean NPMI over term pairs; terms never seen in a
/// window are dropped and topics left with fewer than 2 terms are skipped.
inline double coherence(const std::vector<Tokens>& docs, const std::vector<std::vector<std::string>>& topics,
                        std::size_t w, double eps = 1e-10) {
  std::set<std::string> all;
  for (const auto& t : topics) all.insert(t.begin(), t.end());
  const WindowStats s = window_stats(docs, {all.begin(), all.end()}, w);
  double total = 0.0;
  int scored = 0;
  for (const auto& t : topics) {
    std::vector<std::string> kept;
    for (const auto& x : t)
      if (s.single.count(x)) kept.push_back(x);
    if (kept.size() < 2) continue;
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j) {
        sum += npmi(s, kept[i], kept[j], eps);
        ++pairs;
      }
    total += sum / pairs;
    ++scored;
  }
  return total / scored;
}

inline double rbo(const std::vector<std::string>& a, const std::vector<std::string>& b, double p) {
  const std::size_t n = std::min(a.size(), b.size());
  double sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const std::set<std::string> sa(a.begin(), a.begin() + k), sb(b.begin(), b.begin() + k);
    std::size_t overlap = 0;
    for (const auto& x : sa) overlap += sb.count(x);
    sum += std::pow(p, static_cast<double>(k - 1)) * static_cast<double>(overlap) / static_cast<double>(k);
  }
  return (1.0 - p) * sum;
}

inline double diversity(const std::vector<std::vector<std::string>>& topics, double p, std::size_t depth) {
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < topics.size(); ++i)
    for (std::size_t j = i + 1; j < topics.size(); ++j) {
      std::vector<std::string> a(topics[i].begin(), topics[i].begin() + std::min(depth, topics[i].size()));
      std::vector<std::string> b(topics[j].begin(), topics[j].begin() + std::min(depth, topics[j].size()));
      sum += 1.0 - rbo(a, b, p);
      ++pairs;
    }
  return sum / pairs;
}

/// counts[d][w], doc_topic[d][k], topic_word[k][w]
inline double perplexity(const std::vector<std::vector<double>>& counts, const std::vector<std::vector<double>>& doc_topic,
                         const std::vector<std::vector<double>>& topic_word, double eps = 1e-10) {
  double ll = 0.0, n = 0.0;
  for (std::size_t d = 0; d < counts.size(); ++d)
    for (std::size_t w = 0; w < counts[d].size(); ++w) {
      if (counts[d][w] == 0) continue;
      double p = 0.0;
      for (std::size_t k = 0; k < topic_word.size(); ++k) p += doc_topic[d][k] * topic_word[k][w];
      ll += counts[d][w] * std::log(std::max(p, eps));
      n += counts[d][w];
    }
  return std::exp(-ll / n);
}

/// Points given as larger-is-better rows.
inline bool dominates_max(const std::vector<double>& a, const std::vector<double>& b) {
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strict = true;
  }
  return strict;
}

inline std::vector<std::size_t> pareto_indices_max(const std::vector<std::vector<double>>& pts) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) dominated = j != i && dominates_max(pts[j], pts[i]);
    if (!dominated) out.push_back(i);
  }
  return out;
}

/// Position in `front` (larger-is-better rows) closest to the ideal point
/// after min-max scaling over the front; a constant column scales to 1.
inline std::size_t ideal_argmin(const std::vector<std::vector<double>>& front) {
  const std::size_t m = front.front().size();
  std::vector<double> lo(m, INFINITY), hi(m, -INFINITY);
  for (const auto& p : front)
    for (std::size_t j = 0; j < m; ++j) {
      lo[j] = std::min(lo[j], p[j]);
      hi[j] = std::max(hi[j], p[j]);
    }
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t i = 0; i < front.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double s = hi[j] > lo[j] ? (front[i][j] - lo[j]) / (hi[j] - lo[j]) : 1.0;
      d += (1.0 - s) * (1.0 - s);
    }
    d = std::sqrt(d);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

/// Dominated volume of minimisation points below `ref`, summed over the
/// cells of the grid spanned by all coordinates.
inline double hypervolume_min(const std::vector<std::vector<double>>& pts, const std::vector<double>& ref) {
  const std::size_t m = ref.size();
  std::vector<std::vector<double>> axes(m);
  for (std::size_t d = 0; d < m; ++d) {
    for (const auto& p : pts)
      if (p[d] < ref[d]) axes[d].push_back(p[d]);
    axes[d].push_back(ref[d]);
    std::sort(axes[d].begin(), axes[d].end());
    axes[d].erase(std::unique(axes[d].begin(), axes[d].end()), axes[d].end());
  }
  double volume = 0.0;
  std::vector<std::size_t> idx(m, 0);
  while (true) {
    bool valid = true;
    for (std::size_t d = 0; d < m; ++d) valid = valid && idx[d] + 1 < axes[d].size();
    if (valid) {
      bool covered = false;
      for (const auto& p : pts) {
        bool all = true;
        for (std::size_t d = 0; d < m && all; ++d) all = p[d] <= axes[d][idx[d]];
        if (all) {
          covered = true;
          break;
        }
      }
      if (covered) {
        double cell = 1.0;
        for (std::size_t d = 0; d < m; ++d) cell *= axes[d][idx[d] + 1] - axes[d][idx[d]];
        volume += cell;
      }
    }
    std::size_t d = 0;
    while (d < m) {
      if (++idx[d] < axes[d].size()) break;
      idx[d] = 0;
      ++d;
    }
    if (d == m) break;
  }
  return volume;
}

inline double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double sj = 0, sa = 0, sb = 0;
  for (const auto& [k, v] : joint) sj += c2(v);
  for (const auto& [k, v] : ra) sa += c2(v);
  for (const auto& [k, v] : rb) sb += c2(v);
  const double expected = sa * sb / c2(static_cast<double>(a.size()));
  const double top = (sa + sb) / 2;
  if (top == expected) return 1.0;
  return (sj - expected) / (top - expected);
}

/// Fraction of items whose predicted group's majority label matches their own.
inline double purity(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth) {
  std::map<std::size_t, std::map<std::size_t, int>> table;
  for (std::size_t i = 0; i < predicted.size(); ++i) ++table[predicted[i]][truth[i]];
  int hit = 0;
  for (const auto& [p, row] : table) {
    int best = 0;
    for (const auto& [t, c] : row) best = std::max(best, c);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(predicted.size());
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

/// Mutual information (nats) between a binary column and soft binary labels.
inline double binary_mi(const std::vector<int>& x, const std::vector<double>& q) {
  const double n = static_cast<double>(x.size());
  double joint[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t d = 0; d < x.size(); ++d) {
    joint[x[d]][1] += q[d] / n;
    joint[x[d]][0] += (1 - q[d]) / n;
  }
  double mi = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int y = 0; y < 2; ++y) {
      const double px = joint[a][0] + joint[a][1], py = joint[0][y] + joint[1][y];
      if (joint[a][y] > 0) mi += joint[a][y] * std::log(joint[a][y] / (px * py));
    }
  return mi;
}

}  // namespace oracle
