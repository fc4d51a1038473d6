#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace spibb {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RowMatrixF = RowMatrix<float>;
using RowMatrixD = RowMatrix<double>;

using Observation = std::vector<float>;

/// One (s, a, r, s', done) record.
struct Transition {
  Observation s;
  int a = 0;
  float r = 0.0f;
  Observation s_next;
  bool done = false;

  bool operator==(const Transition&) const = default;
};

}  // namespace spibb
