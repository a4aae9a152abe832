#pragma once

#include <Eigen/Core>

namespace dclkr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// A set of points stored one per row (p x d, column-major so that each
/// coordinate is contiguous across points).
using PointSet = Eigen::MatrixXd;

/// One party's private data: inputs one per row and their labels.
struct PartyDataset {
  PointSet x;
  Vector y;

  Index size() const { return x.rows(); }
  Index dim() const { return x.cols(); }
  bool empty() const { return x.rows() == 0; }
};

}  // namespace dclkr
