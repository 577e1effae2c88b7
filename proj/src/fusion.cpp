#include "shapecode/fusion.hpp"

#include <algorithm>
#include <vector>

namespace shapecode {

ScaleNormalizer parse_normalizer(const std::string& name) {
  if (name == "mean") return ScaleNormalizer::mean;
  if (name == "median") return ScaleNormalizer::median;
  if (name == "max") return ScaleNormalizer::max;
  throw InvalidArgument("unknown normalizer '" + name + "'");
}

std::string to_string(ScaleNormalizer normalizer) {
  switch (normalizer) {
    case ScaleNormalizer::mean: return "mean";
    case ScaleNormalizer::median: return "median";
    case ScaleNormalizer::max: return "max";
  }
  return "mean";
}

double off_diagonal_scale(const DistanceMatrix& d, ScaleNormalizer normalizer) {
  std::vector<double> entries;
  const Eigen::Index n = d.values.rows();
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      if (r != c) entries.push_back(d.values(r, c));
  if (entries.empty()) return 1.0;  // 1x1: nothing to rescale
  double scale = 0.0;
  switch (normalizer) {
    case ScaleNormalizer::mean:
      for (double e : entries) scale += e;
      scale /= static_cast<double>(entries.size());
      break;
    case ScaleNormalizer::median: {
      auto mid = entries.begin() + static_cast<std::ptrdiff_t>(entries.size() / 2);
      std::nth_element(entries.begin(), mid, entries.end());
      scale = *mid;
      break;
    }
    case ScaleNormalizer::max:
      scale = *std::max_element(entries.begin(), entries.end());
      break;
  }
  return scale;
}

DistanceMatrix fuse(const DistanceMatrix& global, const DistanceMatrix& local, const FusionWeights& weights,
                    ScaleNormalizer normalizer) {
  if (global.ids != local.ids) throw InvalidArgument("fuse: channels have different model id order");
  require_dims(global.values.rows() == static_cast<Eigen::Index>(global.size()) &&
                   global.values.cols() == global.values.rows() && local.values.rows() == global.values.rows() &&
                   local.values.cols() == global.values.cols(),
               "fuse: matrix sizes differ");
  if (!(weights.global >= 0.0 && weights.local >= 0.0) || (weights.global == 0.0 && weights.local == 0.0))
    throw InvalidArgument("fuse: weights must be nonnegative and not both zero");
  const double sg = off_diagonal_scale(global, normalizer);
  const double sl = off_diagonal_scale(local, normalizer);
  if (!(sg > 0.0) || !(sl > 0.0)) throw InvalidArgument("fuse: a channel has zero scale (all-zero matrix)");
  DistanceMatrix out;
  out.ids = global.ids;
  out.values = weights.global * global.values / sg + weights.local * local.values / sl;
  out.values.diagonal().setZero();
  return out;
}

}  // namespace shapecode
