// Gaussian mixture fitting (full-covariance EM), model scoring and k selection.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "biaslens/common.hpp"

namespace biaslens {

struct GmmModel {
  int k = 0;
  Eigen::VectorXd weights;                   // simplex, every entry > 0
  Eigen::MatrixXd means;                     // k x d
  std::vector<Eigen::MatrixXd> covariances;  // k full d x d SPD matrices
  double log_likelihood = 0.0;
  int n_iter = 0;
  bool converged = false;

  int dim() const { return means.cols() > 0 ? static_cast<int>(means.cols()) : 0; }

  nlohmann::json to_json() const;
};

struct GmmOptions {
  int restarts = 5;
  uint64_t seed = 0;
  int max_iter = 200;
  double tol = 1e-6;        // relative log-likelihood improvement stop
  double cov_floor = 1e-6;  // added to covariance diagonals after each M-step
};

struct Assignment {
  std::vector<int> labels;      // argmax posterior, ties to the lowest index
  Eigen::MatrixXd posteriors;   // n x k, rows sum to 1
};

struct KCandidate {
  int k = 0;
  bool ok = false;
  std::string error;  // set when the fit for this k failed
  GmmModel model;
  double bic = 0.0;
  double silhouette = 0.0;
  int bic_rank = 0;  // 1 = lowest BIC
  int sil_rank = 0;  // 1 = highest silhouette
};

struct SelectionResult {
  std::vector<KCandidate> candidates;
  int chosen_k = 0;

  const KCandidate& chosen() const;
  nlohmann::json to_json() const;
};

// Best-of-restarts EM. Restart r runs with seed mix_seed(options.seed, r);
// the restart with the highest final log-likelihood wins (ties to the lowest
// restart index). Requires n >= k * (d + 1).
GmmModel fit_gmm(const Eigen::MatrixXd& X, int k, const GmmOptions& options);

// p * ln(n) - 2 * logL with p = (k - 1) + k*d + k*d*(d+1)/2.
double bic(const GmmModel& model, size_t n);
size_t gmm_free_parameters(int k, int d);

Assignment gmm_assign(const GmmModel& model, const Eigen::MatrixXd& X);

// Mean silhouette over (sub)sampled points, Euclidean distance. If n exceeds
// max_points, a cluster-stratified subsample of max_points is scored against
// the full set. Singleton-cluster points score 0. Requires >= 2 clusters.
double silhouette(const Eigen::MatrixXd& X, const std::vector<int>& labels, size_t max_points,
                  uint64_t seed);

// Fits every k in [k_min, k_max] (per-k seed = options.seed + k), ranks by BIC
// ascending and silhouette descending, and picks the smallest rank sum (ties
// to the smaller k). Failed fits are excluded and flagged.
SelectionResult select_k(const Eigen::MatrixXd& X, int k_min, int k_max, const GmmOptions& options,
                         size_t silhouette_max_points = 10000);

// Rank-sum choice over (bic, silhouette) pairs; exposed for direct testing.
// Returns the index of the winner and fills the rank vectors.
size_t choose_by_rank_sum(const std::vector<double>& bics, const std::vector<double>& silhouettes,
                          std::vector<int>& bic_ranks, std::vector<int>& sil_ranks);

}  // namespace biaslens
