#pragma once

#include <Eigen/Dense>

namespace lrpprune {

/// Batch-major matrices: one row per sample.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

}  // namespace lrpprune
