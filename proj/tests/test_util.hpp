#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "sparse4d/random.hpp"

namespace test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(SPARSE4D_FIXTURES) / name; }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sparse4d_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Eigen::MatrixXd random_matrix(sparse4d::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
  return m;
}

}  // namespace test
