#ifndef SHAPECODE_MATCH_HPP
#define SHAPECODE_MATCH_HPP

#include "shapecode/types.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace shapecode {

/// The code vectors of one model's views, one per row (Np x Nc).
template <typename Scalar>
struct CodeSet {
  std::string model_id;
  Matrix<Scalar> codes;

  Eigen::Index view_count() const { return codes.rows(); }
  Eigen::Index code_dim() const { return codes.cols(); }
};

/// Pairwise distances between models in a fixed id order. Row q holds the
/// distances from query q, so entries need not be symmetric.
struct DistanceMatrix {
  std::vector<std::string> ids;
  MatrixXd values;

  std::size_t size() const { return ids.size(); }
};

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar pairwise_code_distance(const Eigen::MatrixBase<DerivedA>& a,
                                                 const Eigen::MatrixBase<DerivedB>& b, double p = 2.0) {
  using Scalar = typename DerivedA::Scalar;
  require_dims(a.size() == b.size(), "pairwise_code_distance: size mismatch");
  if (!(p >= 1.0)) throw InvalidArgument("norm order p must be >= 1");
  const auto diff = (a - b).array().abs();
  if (p == 2.0) return std::sqrt(diff.square().sum());
  if (p == 1.0) return diff.sum();
  if (std::isinf(p)) return diff.maxCoeff();
  return std::pow(diff.pow(static_cast<Scalar>(p)).sum(), static_cast<Scalar>(1.0 / p));
}

/// D(A,B) = mean over codes of A of the distance to the nearest code of B.
template <typename Scalar>
Scalar set_distance(const CodeSet<Scalar>& a, const CodeSet<Scalar>& b, double p = 2.0) {
  require_dims(a.code_dim() == b.code_dim(), "set_distance: code dimension mismatch");
  require_dims(a.view_count() == b.view_count() && a.view_count() > 0, "set_distance: view count mismatch");
  Scalar total(0);
  for (Eigen::Index i = 0; i < a.view_count(); ++i) {
    Scalar nearest = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < b.view_count(); ++j)
      nearest = std::min(nearest, pairwise_code_distance(a.codes.row(i), b.codes.row(j), p));
    total += nearest;
  }
  return total / static_cast<Scalar>(a.view_count());
}

/// Rows in [row_begin, row_end) of the all-pairs matrix.
template <typename Scalar>
void fill_distance_rows(const std::vector<CodeSet<Scalar>>& sets, double p, std::size_t row_begin,
                        std::size_t row_end, DistanceMatrix& out) {
  for (std::size_t q = row_begin; q < row_end; ++q)
    for (std::size_t x = 0; x < sets.size(); ++x)
      out.values(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(x)) =
          q == x ? 0.0 : static_cast<double>(set_distance(sets[q], sets[x], p));
}

/// Validates uniform shapes and allocates the output.
template <typename Scalar>
DistanceMatrix prepare_distance_matrix(const std::vector<CodeSet<Scalar>>& sets) {
  if (sets.empty()) throw InvalidArgument("distance_matrix: no code sets");
  DistanceMatrix out;
  for (const auto& s : sets) {
    require_dims(s.view_count() == sets.front().view_count() && s.code_dim() == sets.front().code_dim(),
                 "distance_matrix: code sets differ in shape (" + s.model_id + ")");
    out.ids.push_back(s.model_id);
  }
  const auto n = static_cast<Eigen::Index>(sets.size());
  out.values = MatrixXd::Zero(n, n);
  return out;
}

template <typename Scalar>
DistanceMatrix distance_matrix(const std::vector<CodeSet<Scalar>>& sets, double p = 2.0) {
  DistanceMatrix out = prepare_distance_matrix(sets);
  fill_distance_rows(sets, p, 0, sets.size(), out);
  return out;
}

}  // namespace shapecode

#endif  // SHAPECODE_MATCH_HPP
