// Brute-force reference computations for the test suite. Everything here is
// written with plain loops over std::vector so that it shares no code path
// with the Eigen-based library it checks.
#ifndef SHAPECODE_TESTS_ORACLES_HPP
#define SHAPECODE_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, Mat[r][c]

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// Tiny binary RBM, enumerable state space
// ---------------------------------------------------------------------------

struct TinyRbm {
  int nv = 0;
  int nh = 0;
  Mat w;  // nv x nh
  Vec a;  // visible biases
  Vec b;  // hidden biases

  static TinyRbm zeros(int visible, int hidden) {
    TinyRbm r;
    r.nv = visible;
    r.nh = hidden;
    r.w.assign(static_cast<std::size_t>(visible), Vec(static_cast<std::size_t>(hidden), 0.0));
    r.a.assign(static_cast<std::size_t>(visible), 0.0);
    r.b.assign(static_cast<std::size_t>(hidden), 0.0);
    return r;
  }
};

inline constexpr int kMaxTinyUnits = 12;

inline void require_enumerable(const TinyRbm& r) {
  if (r.nv < 1 || r.nh < 1 || r.nv + r.nh > kMaxTinyUnits)
    throw std::invalid_argument("TinyRbm must have between 2 and 12 units in total");
}

inline Vec bits(unsigned state, int count) {
  Vec out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = (state >> i) & 1u ? 1.0 : 0.0;
  return out;
}

inline double energy(const TinyRbm& r, const Vec& v, const Vec& h) {
  double e = 0.0;
  for (int i = 0; i < r.nv; ++i) e -= r.a[i] * v[i];
  for (int j = 0; j < r.nh; ++j) e -= r.b[j] * h[j];
  for (int i = 0; i < r.nv; ++i)
    for (int j = 0; j < r.nh; ++j) e -= v[i] * r.w[i][j] * h[j];
  return e;
}

/// Z by exhaustive summation of exp(-E) over every (v, h).
inline double exact_partition(const TinyRbm& r) {
  require_enumerable(r);
  double z = 0.0;
  for (unsigned sv = 0; sv < (1u << r.nv); ++sv)
    for (unsigned sh = 0; sh < (1u << r.nh); ++sh) z += std::exp(-energy(r, bits(sv, r.nv), bits(sh, r.nh)));
  return z;
}

/// Unnormalized marginal: sum over h of exp(-E(v, h)).
inline double free_weight(const TinyRbm& r, const Vec& v) {
  double s = 0.0;
  for (unsigned sh = 0; sh < (1u << r.nh); ++sh) s += std::exp(-energy(r, v, bits(sh, r.nh)));
  return s;
}

inline double exact_marginal(const TinyRbm& r, const Vec& v) {
  require_enumerable(r);
  return free_weight(r, v) / exact_partition(r);
}

inline double exact_log_likelihood(const TinyRbm& r, const Vec& v) {
  return std::log(free_weight(r, v)) - std::log(exact_partition(r));
}

struct LoglikGradient {
  Mat data_term;   // <v_i h_j> under p(h | v)
  Mat model_term;  // <v_i h_j> under p(v, h)
  Mat weights;     // data_term - model_term
  Vec visible_bias;
  Vec hidden_bias;
};

/// d log p(v) / d theta by exact conditional and joint expectations.
inline LoglikGradient exact_loglik_grad(const TinyRbm& r, const Vec& v) {
  require_enumerable(r);
  const auto nv = static_cast<std::size_t>(r.nv), nh = static_cast<std::size_t>(r.nh);
  LoglikGradient g;
  g.data_term.assign(nv, Vec(nh, 0.0));
  g.model_term.assign(nv, Vec(nh, 0.0));
  g.weights.assign(nv, Vec(nh, 0.0));
  g.visible_bias.assign(nv, 0.0);
  g.hidden_bias.assign(nh, 0.0);

  const double cond_norm = free_weight(r, v);
  Vec data_h(nh, 0.0);
  for (unsigned sh = 0; sh < (1u << r.nh); ++sh) {
    const Vec h = bits(sh, r.nh);
    const double p = std::exp(-energy(r, v, h)) / cond_norm;
    for (std::size_t j = 0; j < nh; ++j) data_h[j] += p * h[j];
    for (std::size_t i = 0; i < nv; ++i)
      for (std::size_t j = 0; j < nh; ++j) g.data_term[i][j] += p * v[i] * h[j];
  }

  const double z = exact_partition(r);
  Vec model_v(nv, 0.0), model_h(nh, 0.0);
  for (unsigned sv = 0; sv < (1u << r.nv); ++sv) {
    const Vec vv = bits(sv, r.nv);
    for (unsigned sh = 0; sh < (1u << r.nh); ++sh) {
      const Vec h = bits(sh, r.nh);
      const double p = std::exp(-energy(r, vv, h)) / z;
      for (std::size_t i = 0; i < nv; ++i) model_v[i] += p * vv[i];
      for (std::size_t j = 0; j < nh; ++j) model_h[j] += p * h[j];
      for (std::size_t i = 0; i < nv; ++i)
        for (std::size_t j = 0; j < nh; ++j) g.model_term[i][j] += p * vv[i] * h[j];
    }
  }
  for (std::size_t i = 0; i < nv; ++i) {
    g.visible_bias[i] = v[i] - model_v[i];
    for (std::size_t j = 0; j < nh; ++j) g.weights[i][j] = g.data_term[i][j] - g.model_term[i][j];
  }
  for (std::size_t j = 0; j < nh; ++j) g.hidden_bias[j] = data_h[j] - model_h[j];
  return g;
}

// ---------------------------------------------------------------------------
// Naive dense algebra
// ---------------------------------------------------------------------------

inline Mat matmul(const Mat& x, const Mat& y) {
  const std::size_t n = x.size(), k = y.size(), m = y.empty() ? 0 : y[0].size();
  Mat out(n, Vec(m, 0.0));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += x[r][t] * y[t][c];
      out[r][c] = s;
    }
  return out;
}

/// Unit activations for one layer: linear ? w^T x + bias : sigmoid(w^T x + bias).
/// `w` is in x out.
inline Vec layer_forward(const Mat& w, const Vec& bias, const Vec& x, bool linear) {
  Vec out(bias.size());
  for (std::size_t j = 0; j < bias.size(); ++j) {
    double s = bias[j];
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w[i][j];
    out[j] = linear ? s : sigmoid(s);
  }
  return out;
}

/// Visible activations given hiddens: sigmoid(a_i + sum_j w_ij h_j).
inline Vec layer_backward(const Mat& w, const Vec& visible_bias, const Vec& h) {
  Vec out(visible_bias.size());
  for (std::size_t i = 0; i < visible_bias.size(); ++i) {
    double s = visible_bias[i];
    for (std::size_t j = 0; j < h.size(); ++j) s += w[i][j] * h[j];
    out[i] = sigmoid(s);
  }
  return out;
}

/// Mean over the batch of v_i * p(h_j = 1 | v), one sample at a time.
inline Mat batch_positive_associations(const Mat& w, const Vec& hidden_bias, const Mat& batch) {
  const std::size_t nv = w.size(), nh = hidden_bias.size();
  Mat out(nv, Vec(nh, 0.0));
  for (const Vec& v : batch) {
    const Vec h = layer_forward(w, hidden_bias, v, false);
    for (std::size_t i = 0; i < nv; ++i)
      for (std::size_t j = 0; j < nh; ++j) out[i][j] += v[i] * h[j];
  }
  for (auto& row : out)
    for (double& x : row) x /= static_cast<double>(batch.size());
  return out;
}

// ---------------------------------------------------------------------------
// Distances and ranking
// ---------------------------------------------------------------------------

inline double minkowski(const Vec& x, const Vec& y, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(std::fabs(x[i] - y[i]), p);
  return std::pow(s, 1.0 / p);
}

/// Mean over rows of A of the smallest distance to any row of B.
inline double set_distance(const Mat& a, const Mat& b, double p) {
  double total = 0.0;
  for (const Vec& x : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& y : b) best = std::min(best, minkowski(x, y, p));
    total += best;
  }
  return total / static_cast<double>(a.size());
}

inline double l1(const Vec& x, const Vec& y) { return minkowski(x, y, 1.0); }

/// Candidates other than q sorted by (distance, index).
inline std::vector<std::size_t> sort_rank(const Mat& d, std::size_t q) {
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t c = 0; c < d.size(); ++c)
    if (c != q) keyed.emplace_back(d[q][c], c);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> out;
  for (const auto& k : keyed) out.push_back(k.second);
  return out;
}

inline std::size_t nearest_centroid(const Mat& centroids, const Vec& x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - centroids[k][i]) * (x[i] - centroids[k][i]);
    if (s < best_d) {
      best_d = s;
      best = k;
    }
  }
  return best;
}

struct Scores {
  double nn = 0.0;
  double ft = 0.0;
  double st = 0.0;
  std::size_t scored = 0;
};

/// NN / FT / ST straight from their definitions, averaged over queries whose
/// class has at least two members.
inline Scores retrieval_scores(const Mat& d, const std::vector<std::string>& labels) {
  std::map<std::string, std::size_t> size;
  for (const auto& l : labels) ++size[l];
  Scores s;
  for (std::size_t q = 0; q < d.size(); ++q) {
    const std::size_t c = size[labels[q]];
    if (c < 2) continue;
    const auto ranked = sort_rank(d, q);
    auto hits_in = [&](std::size_t k) {
      std::size_t hits = 0;
      for (std::size_t r = 0; r < k && r < ranked.size(); ++r) hits += labels[ranked[r]] == labels[q];
      return static_cast<double>(hits);
    };
    s.nn += hits_in(1);
    s.ft += hits_in(c - 1) / static_cast<double>(c - 1);
    s.st += hits_in(2 * (c - 1)) / static_cast<double>(c - 1);
    ++s.scored;
  }
  if (s.scored) {
    s.nn /= static_cast<double>(s.scored);
    s.ft /= static_cast<double>(s.scored);
    s.st /= static_cast<double>(s.scored);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Analytic depth map of the unit sphere
// ---------------------------------------------------------------------------

/// Pixel value of an orthographic view of the unit sphere centred in the
/// [-1,1]^2 image plane: (1 + z) / 2 at the nearest surface point, 0 outside.
/// Also reports the pixel centre's radius in the image plane.
inline double sphere_pixel(int row, int col, int resolution, double* radius = nullptr) {
  const double x = (col + 0.5) * 2.0 / resolution - 1.0;
  const double y = 1.0 - (row + 0.5) * 2.0 / resolution;
  const double r2 = x * x + y * y;
  if (radius) *radius = std::sqrt(r2);
  return r2 > 1.0 ? 0.0 : 0.5 * (1.0 + std::sqrt(1.0 - r2));
}

struct SphereComparison {
  double max_covered_error = 0.0;  // max |rendered - analytic| where both are foreground
  int missing_interior = 0;        // background pixels with radius < 1 - band
  int spurious_exterior = 0;       // foreground pixels with radius > 1
  int band_pixels = 0;             // pixels inside the silhouette band
};

/// Compares a rendered image against the analytic map. Pixels whose centre
/// lies within `band` of the silhouette may be either background or close to
/// the analytic value; an inscribed tessellation leaves some of them uncovered.
template <typename Image>
SphereComparison compare_sphere(const Image& px, int resolution, double band) {
  SphereComparison out;
  for (int r = 0; r < resolution; ++r)
    for (int c = 0; c < resolution; ++c) {
      double radius = 0.0;
      const double expected = sphere_pixel(r, c, resolution, &radius);
      const double got = px(r, c);
      if (radius > 1.0) {
        out.spurious_exterior += got != 0.0;
        continue;
      }
      if (radius >= 1.0 - band) ++out.band_pixels;
      if (got == 0.0) {
        out.missing_interior += radius < 1.0 - band;
        continue;
      }
      out.max_covered_error = std::max(out.max_covered_error, std::fabs(got - expected));
    }
  return out;
}

}  // namespace oracle

#endif  // SHAPECODE_TESTS_ORACLES_HPP
