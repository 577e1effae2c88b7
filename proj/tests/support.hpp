#ifndef SHAPECODE_TESTS_SUPPORT_HPP
#define SHAPECODE_TESTS_SUPPORT_HPP

#include "oracles/oracles.hpp"
#include "shapecode/rbm.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline oracle::Mat to_mat(const shapecode::MatrixXd& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

inline oracle::Vec to_vec(const shapecode::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline shapecode::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double lo = -1.0,
                                          double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  shapecode::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng);
  return m;
}

inline double max_abs_diff(const oracle::Mat& x, const shapecode::MatrixXd& y) {
  double m = 0.0;
  for (Eigen::Index r = 0; r < y.rows(); ++r)
    for (Eigen::Index c = 0; c < y.cols(); ++c) m = std::max(m, std::fabs(x[r][c] - y(r, c)));
  return m;
}

/// Binary data drawn around two complementary 16-bit prototypes (first half
/// on, or second half on) with a 5% bit-flip rate.
inline shapecode::MatrixXd two_cluster_data(Eigen::Index samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(0.05), which(0.5);
  shapecode::MatrixXd data(samples, 16);
  for (Eigen::Index r = 0; r < samples; ++r) {
    const bool first = which(rng);
    for (Eigen::Index c = 0; c < 16; ++c) {
      const bool on = (c < 8) == first;
      data(r, c) = (on != flip(rng)) ? 1.0 : 0.0;
    }
  }
  return data;
}

/// Schedule for the two-cluster training check: 100 epochs in batches of 10.
inline shapecode::CdConfig two_cluster_config() {
  shapecode::CdConfig cfg;
  cfg.epochs = 100;
  cfg.minibatch_size = 10;
  cfg.learning_rate = 0.1;
  return cfg;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() / ("shapecode_test_" + name);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing

#endif  // SHAPECODE_TESTS_SUPPORT_HPP
