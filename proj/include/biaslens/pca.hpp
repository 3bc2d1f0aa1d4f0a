// Principal component analysis for embedding reduction.
#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include "biaslens/common.hpp"

namespace biaslens {

struct PcaModel {
  Eigen::VectorXd mean;                      // input-dimension mean
  Eigen::VectorXd scale;                     // per-dimension divisor (all 1 unless standardized)
  Eigen::MatrixXd components;                // d_out x d_in, row-orthonormal
  Eigen::VectorXd explained_variance_ratio;  // d_out entries, nonincreasing
  Eigen::VectorXd all_variance_ratios;       // every computed eigenvalue / total variance
  int d_out = 0;
  bool standardized = false;

  // Fraction of total variance captured by the kept components.
  double variance_retained() const { return explained_variance_ratio.sum(); }

  nlohmann::json to_json() const;
  static PcaModel from_json(const nlohmann::json& j);
};

// Fits PCA on rows of X. Retains the smallest number of leading components
// reaching `variance_target`, capped at `cap` (and at min(d, n-1)).
//
// Components are eigenvectors of the sample covariance (n-1 denominator),
// sorted by descending eigenvalue, with a fixed sign convention: the entry of
// largest magnitude in each component is nonnegative (ties broken by earliest
// index). The decomposition runs on the d x d covariance when d <= n and on
// the n x n Gram matrix otherwise; results are identical.
PcaModel fit_pca(const Eigen::MatrixXd& X, double variance_target, int cap,
                 bool standardize = false);

// Projects rows of X: (X - mean) / scale * components^T.
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& X);

}  // namespace biaslens
