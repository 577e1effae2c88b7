#ifndef SHAPECODE_FUSION_HPP
#define SHAPECODE_FUSION_HPP

#include "shapecode/match.hpp"

#include <string>

namespace shapecode {

struct FusionWeights {
  double global = 1.0;
  double local = 1.0;
};

/// Statistic of the off-diagonal entries used to bring a channel to unit scale.
enum class ScaleNormalizer { mean, median, max };

ScaleNormalizer parse_normalizer(const std::string& name);
std::string to_string(ScaleNormalizer normalizer);

double off_diagonal_scale(const DistanceMatrix& d, ScaleNormalizer normalizer);

/// w_g * D_g / s(D_g) + w_l * D_l / s(D_l), diagonal kept at zero.
DistanceMatrix fuse(const DistanceMatrix& global, const DistanceMatrix& local, const FusionWeights& weights,
                    ScaleNormalizer normalizer = ScaleNormalizer::mean);

}  // namespace shapecode

#endif  // SHAPECODE_FUSION_HPP
