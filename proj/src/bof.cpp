#include "shapecode/bof.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace shapecode {

namespace {

constexpr int kCells = 4;
constexpr int kOrientations = 8;

// Central differences, one-sided at the image border.
void gradient_at(const RowMatrix<double>& img, int r, int c, double& gx, double& gy) {
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  const int cl = std::max(c - 1, 0), cr = std::min(c + 1, w - 1);
  const int ru = std::max(r - 1, 0), rd = std::min(r + 1, h - 1);
  gx = cr > cl ? (img(r, cr) - img(r, cl)) / (cr - cl) : 0.0;
  gy = rd > ru ? (img(rd, c) - img(ru, c)) / (rd - ru) : 0.0;
}

}  // namespace

Eigen::Matrix<double, kDescriptorDim, 1> raw_patch_descriptor(const DepthImage& image, int row, int col,
                                                              int patch_size) {
  Eigen::Matrix<double, kDescriptorDim, 1> desc = Eigen::Matrix<double, kDescriptorDim, 1>::Zero();
  const double cell = static_cast<double>(patch_size) / kCells;
  const double center = 0.5 * patch_size;
  const double sigma = 0.5 * patch_size;
  const double bin_width = 2.0 * std::numbers::pi / kOrientations;
  for (int dr = 0; dr < patch_size; ++dr) {
    for (int dc = 0; dc < patch_size; ++dc) {
      double gx = 0.0, gy = 0.0;
      gradient_at(image.pixels, row + dr, col + dc, gx, gy);
      const double magnitude = std::hypot(gx, gy);
      if (magnitude == 0.0) continue;
      const double ox = dc + 0.5 - center, oy = dr + 0.5 - center;
      const double weight = std::exp(-(ox * ox + oy * oy) / (2.0 * sigma * sigma));
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += 2.0 * std::numbers::pi;
      const double pos = angle / bin_width;
      const int lower = static_cast<int>(std::floor(pos)) % kOrientations;
      const double frac = pos - std::floor(pos);
      const int upper = (lower + 1) % kOrientations;
      const int cell_r = std::min(kCells - 1, static_cast<int>(dr / cell));
      const int cell_c = std::min(kCells - 1, static_cast<int>(dc / cell));
      const int base = (cell_r * kCells + cell_c) * kOrientations;
      desc(base + lower) += weight * magnitude * (1.0 - frac);
      desc(base + upper) += weight * magnitude * frac;
    }
  }
  return desc;
}

DescriptorBag extract_descriptors(const ViewSet& views, const DescriptorParams& params) {
  if (params.grid_step < 1 || params.patch_size < kCells)
    throw InvalidArgument("descriptor grid step must be >= 1 and patch size >= 4");
  DescriptorBag bag;
  bag.model_id = views.model_id;
  std::vector<Eigen::Matrix<double, kDescriptorDim, 1>> rows;
  for (const auto& image : views.images) {
    if (params.patch_size > image.width() || params.patch_size > image.height())
      throw InvalidArgument("descriptor patch does not fit inside the image");
    for (int r = 0; r + params.patch_size <= image.height(); r += params.grid_step) {
      for (int c = 0; c + params.patch_size <= image.width(); c += params.grid_step) {
        if ((image.pixels.block(r, c, params.patch_size, params.patch_size).array() == 0.0).all()) continue;
        auto desc = raw_patch_descriptor(image, r, c, params.patch_size);
        const double norm = desc.norm();
        if (norm == 0.0) continue;
        desc = (desc / norm).cwiseMin(0.2);
        desc.normalize();
        rows.push_back(desc);
        bag.view_index.push_back(image.view_index);
      }
    }
  }
  bag.values.resize(static_cast<Eigen::Index>(rows.size()), kDescriptorDim);
  for (std::size_t i = 0; i < rows.size(); ++i) bag.values.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return bag;
}

Eigen::Index nearest_centroid(const MatrixXd& centroids, const Eigen::Ref<const VectorXd>& x) {
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
    const double d = (centroids.row(k).transpose() - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

namespace {

// Assignment via |x|^2 - 2 x.c + |c|^2 so the pass is one matrix product.
std::vector<Eigen::Index> assign(const MatrixXd& x, const MatrixXd& centroids) {
  const VectorXd c_norm = centroids.rowwise().squaredNorm();
  const MatrixXd cross = x * centroids.transpose();
  std::vector<Eigen::Index> labels(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
      const double d = c_norm(k) - 2.0 * cross(i, k);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

double distortion_of(const MatrixXd& x, const MatrixXd& centroids, const std::vector<Eigen::Index>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    total += (x.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  return total;
}

MatrixXd kmeans_pp_seed(const MatrixXd& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  MatrixXd centroids(k, x.cols());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Eigen::Index first = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
  centroids.row(0) = x.row(first);
  VectorXd nearest = (x.rowwise() - x.row(first)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = nearest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = uniform(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest(i);
        if (acc > target && nearest(i) > 0.0) {
          pick = i;
          break;
        }
      }
      // Rounding can leave the tail pick on an already chosen point.
      while (nearest(pick) == 0.0 && pick > 0) --pick;
    } else {
      // Fewer distinct points than centroids; take points in order.
      pick = c % n;
    }
    centroids.row(c) = x.row(pick);
    nearest = nearest.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
  }
  return centroids;
}

}  // namespace

Vocabulary build_vocabulary(const MatrixXd& sample, int k, std::uint64_t seed, const KMeansParams& params) {
  if (k < 1) throw InvalidArgument("vocabulary size must be >= 1");
  if (sample.rows() < k)
    throw InvalidArgument("vocabulary needs at least K=" + std::to_string(k) + " descriptors, got " +
                          std::to_string(sample.rows()));
  Rng rng(seed);
  Vocabulary vocab;
  vocab.rng_seed = seed;
  vocab.centroids = kmeans_pp_seed(sample, k, rng);
  for (int it = 0; it < params.max_iterations; ++it) {
    const auto labels = assign(sample, vocab.centroids);
    vocab.distortion.push_back(distortion_of(sample, vocab.centroids, labels));
    MatrixXd sums = MatrixXd::Zero(k, sample.cols());
    VectorXd counts = VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < sample.rows(); ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += sample.row(i);
      counts(labels[static_cast<std::size_t>(i)]) += 1.0;
    }
    MatrixXd updated = vocab.centroids;
    for (int c = 0; c < k; ++c)
      if (counts(c) > 0.0) updated.row(c) = sums.row(c) / counts(c);
    const double movement = (updated - vocab.centroids).rowwise().norm().maxCoeff();
    vocab.centroids = std::move(updated);
    vocab.iterations = it + 1;
    if (movement < params.tolerance) break;
  }
  return vocab;
}

MatrixXd sample_descriptors(const std::vector<DescriptorBag>& bags, std::size_t max_count, std::uint64_t seed) {
  std::size_t total = 0;
  for (const auto& b : bags) total += static_cast<std::size_t>(b.size());
  std::vector<std::size_t> chosen(total);
  std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  if (total > max_count) {
    // Partial Fisher-Yates, then restore pool order.
    Rng rng(seed);
    for (std::size_t i = 0; i < max_count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (total - i));
      std::swap(chosen[i], chosen[j]);
    }
    chosen.resize(max_count);
    std::sort(chosen.begin(), chosen.end());
  }
  MatrixXd out(static_cast<Eigen::Index>(chosen.size()), kDescriptorDim);
  std::size_t bag = 0, offset = 0;
  for (std::size_t r = 0; r < chosen.size(); ++r) {
    while (chosen[r] >= offset + static_cast<std::size_t>(bags[bag].size())) offset += static_cast<std::size_t>(bags[bag++].size());
    out.row(static_cast<Eigen::Index>(r)) = bags[bag].values.row(static_cast<Eigen::Index>(chosen[r] - offset));
  }
  return out;
}

BofHistogram quantize(const DescriptorBag& bag, const Vocabulary& vocab) {
  if (vocab.size() < 1) throw InvalidArgument("quantize: empty vocabulary");
  BofHistogram hist;
  hist.model_id = bag.model_id;
  const Eigen::Index k = vocab.size();
  if (bag.size() == 0) {
    hist.values = VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    hist.empty_model = true;
    return hist;
  }
  require_dims(bag.values.cols() == vocab.centroids.cols(), "quantize: descriptor dimension mismatch");
  hist.values = VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < bag.size(); ++i) hist.values(nearest_centroid(vocab.centroids, bag.values.row(i).transpose())) += 1.0;
  hist.values /= static_cast<double>(bag.size());
  return hist;
}

double bof_distance(const BofHistogram& a, const BofHistogram& b) {
  require_dims(a.values.size() == b.values.size(), "bof_distance: histogram sizes differ");
  return (a.values - b.values).cwiseAbs().sum();
}

DistanceMatrix bof_distance_matrix(const std::vector<BofHistogram>& histograms) {
  if (histograms.empty()) throw InvalidArgument("bof_distance_matrix: no histograms");
  DistanceMatrix out;
  const auto n = static_cast<Eigen::Index>(histograms.size());
  out.values = MatrixXd::Zero(n, n);
  for (const auto& h : histograms) out.ids.push_back(h.model_id);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      if (r != c) out.values(r, c) = bof_distance(histograms[static_cast<std::size_t>(r)], histograms[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace shapecode
