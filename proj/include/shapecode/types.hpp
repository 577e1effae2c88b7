#ifndef SHAPECODE_TYPES_HPP
#define SHAPECODE_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace shapecode {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using Vec3 = Eigen::Vector3d;

/// Seeded generator shared by every stochastic stage.
using Rng = std::mt19937_64;

// Error taxonomy. Everything derives from Error so the CLI can report a
// single machine-readable line regardless of which stage failed.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("parse", "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error("dimension", what) {}
};

class DegenerateGeometry : public Error {
 public:
  explicit DegenerateGeometry(const std::string& what) : Error("degenerate", what) {}
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int stage_index, const std::string& what)
      : Error("diverged", what), stage_index_(stage_index) {}
  /// Layer index (pretraining) or epoch index (fine-tuning).
  int stage_index() const noexcept { return stage_index_; }

 private:
  int stage_index_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionMismatch(what);
}

}  // namespace shapecode

#endif  // SHAPECODE_TYPES_HPP
