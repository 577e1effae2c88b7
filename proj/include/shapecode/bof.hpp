#ifndef SHAPECODE_BOF_HPP
#define SHAPECODE_BOF_HPP

#include "shapecode/match.hpp"
#include "shapecode/projection.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace shapecode {

inline constexpr int kDescriptorDim = 128;  // 4x4 cells x 8 orientations

/// All local descriptors of one model, pooled over its views (one per row).
struct DescriptorBag {
  std::string model_id;
  MatrixXd values{0, kDescriptorDim};
  std::vector<int> view_index;

  Eigen::Index size() const { return values.rows(); }
};

struct DescriptorParams {
  int grid_step = 8;
  int patch_size = 16;
};

/// Gradient-orientation descriptor of the square patch with top-left corner
/// (row, col). Returns the unnormalized, Gaussian-weighted 128-d histogram;
/// orientation votes are split linearly between the two nearest bins.
Eigen::Matrix<double, kDescriptorDim, 1> raw_patch_descriptor(const DepthImage& image, int row, int col,
                                                              int patch_size);

/// Dense-grid descriptors over every view. Patches without foreground are
/// skipped, as are patches with zero gradient. Each kept descriptor is L2
/// normalized, clamped at 0.2 and renormalized.
DescriptorBag extract_descriptors(const ViewSet& views, const DescriptorParams& params = {});

struct Vocabulary {
  MatrixXd centroids;  // K x dim
  std::uint64_t rng_seed = 0;
  int iterations = 0;
  std::vector<double> distortion;  // sum of squared distances, per assignment pass

  Eigen::Index size() const { return centroids.rows(); }
};

struct KMeansParams {
  int max_iterations = 100;
  double tolerance = 1e-6;  // max centroid movement
};

/// k-means++ seeding followed by Lloyd iterations. Empty clusters keep their
/// previous centroid.
Vocabulary build_vocabulary(const MatrixXd& sample, int k, std::uint64_t seed, const KMeansParams& params = {});

/// Up to max_count rows drawn uniformly without replacement, in the order
/// they appear in the pool.
MatrixXd sample_descriptors(const std::vector<DescriptorBag>& bags, std::size_t max_count, std::uint64_t seed);

/// Index of the nearest centroid (squared L2, ties to the lowest index).
Eigen::Index nearest_centroid(const MatrixXd& centroids, const Eigen::Ref<const VectorXd>& x);

struct BofHistogram {
  std::string model_id;
  VectorXd values;
  bool empty_model = false;  // no descriptors; values are uniform 1/K
};

BofHistogram quantize(const DescriptorBag& bag, const Vocabulary& vocab);

/// L1 distance between histograms.
double bof_distance(const BofHistogram& a, const BofHistogram& b);

DistanceMatrix bof_distance_matrix(const std::vector<BofHistogram>& histograms);

}  // namespace shapecode

#endif  // SHAPECODE_BOF_HPP
