#include "biaslens/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace biaslens {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Per-component Cholesky context for log-density evaluation.
struct ComponentDensity {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_det_half = 0.0;  // 0.5 * log det(Sigma)

  void init(const Eigen::MatrixXd& cov) {
    llt.compute(cov);
    if (llt.info() != Eigen::Success) {
      fail(ErrorCode::SingularComponent,
           "covariance not positive-definite after regularization floor");
    }
    log_det_half = 0.0;
    const auto& L = llt.matrixLLT();
    for (Eigen::Index i = 0; i < L.rows(); ++i) log_det_half += std::log(L(i, i));
  }
};

// Fills out(i, c) = log w_c + log N(x_i | mu_c, Sigma_c) for a block of rows.
void log_weighted_densities(const GmmModel& model, const std::vector<ComponentDensity>& densities,
                            const Eigen::MatrixXd& X, Eigen::MatrixXd& out) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  out.resize(n, model.k);
  for (int c = 0; c < model.k; ++c) {
    Eigen::MatrixXd centered = (X.rowwise() - model.means.row(c)).transpose();  // d x n
    densities[c].llt.matrixL().solveInPlace(centered);
    const Eigen::VectorXd sq = centered.colwise().squaredNorm();
    const double log_w = std::log(model.weights(c));
    const double constant = -0.5 * static_cast<double>(d) * kLog2Pi - densities[c].log_det_half;
    out.col(c) = (-0.5 * sq.array() + constant + log_w).matrix();
  }
}

// Row-wise log-sum-exp.
Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    out(i) = mx + std::log((m.row(i).array() - mx).exp().sum());
  }
  return out;
}

std::vector<ComponentDensity> make_densities(const GmmModel& model) {
  std::vector<ComponentDensity> densities(model.k);
  for (int c = 0; c < model.k; ++c) densities[c].init(model.covariances[c]);
  return densities;
}

// k-means++-style seeding: first mean uniform, then data rows weighted by
// squared distance to the nearest chosen mean.
Eigen::MatrixXd kmeanspp_means(const Eigen::MatrixXd& X, int k, Rng& rng) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd means(k, X.cols());
  means.row(0) = X.row(static_cast<Eigen::Index>(rng.index(static_cast<size_t>(n))));
  Eigen::VectorXd dist2 = (X.rowwise() - means.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      const double target = rng.uniform01() * total;
      double cum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += dist2(i);
        if (cum >= target) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<size_t>(n)));
    }
    means.row(c) = X.row(pick);
    dist2 = dist2.cwiseMin((X.rowwise() - means.row(c)).rowwise().squaredNorm());
  }
  return means;
}

GmmModel run_em(const Eigen::MatrixXd& X, int k, uint64_t seed, const GmmOptions& options) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  Rng rng(seed);

  GmmModel model;
  model.k = k;
  model.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  model.means = kmeanspp_means(X, k, rng);

  const Eigen::RowVectorXd col_mean = X.colwise().mean();
  const double pooled_variance =
      (X.rowwise() - col_mean).squaredNorm() / static_cast<double>(n * d);
  const Eigen::MatrixXd spherical =
      (std::max(pooled_variance, options.cov_floor)) * Eigen::MatrixXd::Identity(d, d);
  model.covariances.assign(k, spherical);

  double prev_ll = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd log_resp;  // n x k
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    // E-step
    const auto densities = make_densities(model);
    log_weighted_densities(model, densities, X, log_resp);
    const Eigen::VectorXd row_lse = log_sum_exp_rows(log_resp);
    model.log_likelihood = row_lse.sum();
    log_resp.colwise() -= row_lse;
    const Eigen::MatrixXd resp = log_resp.array().exp().matrix();

    model.n_iter = iter;
    if (std::isfinite(prev_ll)) {
      const double denom = std::max(std::abs(prev_ll), 1.0);
      if (model.log_likelihood - prev_ll < options.tol * denom) {
        model.converged = true;
        break;
      }
    }
    prev_ll = model.log_likelihood;

    // M-step
    Eigen::VectorXd nk = resp.colwise().sum();
    for (int c = 0; c < k; ++c) nk(c) = std::max(nk(c), 1e-300);
    model.weights = nk / nk.sum();
    model.means = (resp.transpose() * X).array().colwise() / nk.array();
    for (int c = 0; c < k; ++c) {
      const Eigen::MatrixXd centered = X.rowwise() - model.means.row(c);
      Eigen::MatrixXd cov =
          centered.transpose() * (centered.array().colwise() * resp.col(c).array()).matrix() / nk(c);
      cov = 0.5 * (cov + cov.transpose());  // keep exactly symmetric
      cov.diagonal().array() += options.cov_floor;
      model.covariances[c] = cov;
    }
  }
  if (!model.converged) {
    // Loop exhausted after an M-step; refresh the likelihood for the final parameters.
    const auto densities = make_densities(model);
    log_weighted_densities(model, densities, X, log_resp);
    model.log_likelihood = log_sum_exp_rows(log_resp).sum();
  }
  return model;
}

}  // namespace

GmmModel fit_gmm(const Eigen::MatrixXd& X, int k, const GmmOptions& options) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (k < 1) fail(ErrorCode::InvalidConfig, "k must be >= 1");
  if (n < static_cast<Eigen::Index>(k) * (d + 1)) {
    fail(ErrorCode::TooFewPoints, "need n >= k*(d+1) = " + std::to_string(k * (d + 1)) +
                                      " rows, got " + std::to_string(n));
  }
  const int restarts = std::max(options.restarts, 1);
  std::vector<GmmModel> runs(restarts);
  parallel_for(static_cast<size_t>(restarts), [&](size_t r) {
    runs[r] = run_em(X, k, mix_seed(options.seed, r), options);
  });
  size_t best = 0;
  for (size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].log_likelihood > runs[best].log_likelihood) best = r;
  }
  return runs[best];
}

size_t gmm_free_parameters(int k, int d) {
  return static_cast<size_t>(k - 1) + static_cast<size_t>(k) * d +
         static_cast<size_t>(k) * d * (d + 1) / 2;
}

double bic(const GmmModel& model, size_t n) {
  if (n < 1) fail(ErrorCode::InvalidConfig, "BIC needs n >= 1");
  const double p = static_cast<double>(gmm_free_parameters(model.k, model.dim()));
  return p * std::log(static_cast<double>(n)) - 2.0 * model.log_likelihood;
}

Assignment gmm_assign(const GmmModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.means.cols()) {
    fail(ErrorCode::DimensionMismatch, "input has " + std::to_string(X.cols()) +
                                           " columns, model expects " +
                                           std::to_string(model.means.cols()));
  }
  Assignment out;
  const auto densities = make_densities(model);
  Eigen::MatrixXd logp;
  log_weighted_densities(model, densities, X, logp);
  const Eigen::VectorXd lse = log_sum_exp_rows(logp);
  logp.colwise() -= lse;
  out.posteriors = logp.array().exp().matrix();
  // Normalize away residual rounding so each row sums to exactly 1.
  for (Eigen::Index i = 0; i < out.posteriors.rows(); ++i) {
    out.posteriors.row(i) /= out.posteriors.row(i).sum();
  }
  out.labels.resize(static_cast<size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < model.k; ++c) {
      if (out.posteriors(i, c) > out.posteriors(i, best)) best = c;
    }
    out.labels[static_cast<size_t>(i)] = best;
  }
  return out;
}

double silhouette(const Eigen::MatrixXd& X, const std::vector<int>& labels, size_t max_points,
                  uint64_t seed) {
  const size_t n = static_cast<size_t>(X.rows());
  if (labels.size() != n) fail(ErrorCode::DimensionMismatch, "labels/rows length mismatch");
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<size_t> cluster_size(static_cast<size_t>(k), 0);
  for (int l : labels) {
    if (l < 0) fail(ErrorCode::InvalidConfig, "negative cluster label");
    ++cluster_size[static_cast<size_t>(l)];
  }
  int distinct = 0;
  for (size_t s : cluster_size) {
    if (s > 0) ++distinct;
  }
  if (distinct < 2) fail(ErrorCode::SingleCluster, "silhouette needs >= 2 nonempty clusters");

  // Points to score: everything, or a cluster-stratified subsample.
  std::vector<size_t> sample;
  if (n <= max_points) {
    sample.resize(n);
    std::iota(sample.begin(), sample.end(), 0);
  } else {
    std::vector<std::vector<size_t>> by_cluster(static_cast<size_t>(k));
    for (size_t i = 0; i < n; ++i) by_cluster[static_cast<size_t>(labels[i])].push_back(i);
    // Proportional quotas (largest remainder), at least 1 per nonempty cluster.
    std::vector<size_t> quota(static_cast<size_t>(k), 0);
    std::vector<std::pair<double, size_t>> remainders;
    size_t assigned = 0;
    for (size_t c = 0; c < static_cast<size_t>(k); ++c) {
      if (cluster_size[c] == 0) continue;
      const double exact =
          static_cast<double>(max_points) * static_cast<double>(cluster_size[c]) / static_cast<double>(n);
      quota[c] = std::max<size_t>(1, static_cast<size_t>(exact));
      quota[c] = std::min(quota[c], cluster_size[c]);
      assigned += quota[c];
      remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
              });
    for (const auto& [frac, c] : remainders) {
      (void)frac;
      if (assigned >= max_points) break;
      if (quota[c] < cluster_size[c]) {
        ++quota[c];
        ++assigned;
      }
    }
    Rng rng(seed);
    for (size_t c = 0; c < static_cast<size_t>(k); ++c) {
      auto& members = by_cluster[c];
      // Partial Fisher-Yates: the first quota[c] positions are the sample.
      for (size_t i = 0; i < quota[c]; ++i) {
        const size_t j = i + rng.index(members.size() - i);
        std::swap(members[i], members[j]);
        sample.push_back(members[i]);
      }
    }
    std::sort(sample.begin(), sample.end());
  }

  // a and b are always computed against the full set.
  double total = 0.0;
  for (size_t si = 0; si < sample.size(); ++si) {
    const size_t i = sample[si];
    const int own = labels[i];
    std::vector<double> dist_sum(static_cast<size_t>(k), 0.0);
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dist = (X.row(static_cast<Eigen::Index>(i)) - X.row(static_cast<Eigen::Index>(j))).norm();
      dist_sum[static_cast<size_t>(labels[j])] += dist;
    }
    if (cluster_size[static_cast<size_t>(own)] <= 1) continue;  // singleton scores 0
    const double a =
        dist_sum[static_cast<size_t>(own)] / static_cast<double>(cluster_size[static_cast<size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < static_cast<size_t>(k); ++c) {
      if (static_cast<int>(c) == own || cluster_size[c] == 0) continue;
      b = std::min(b, dist_sum[c] / static_cast<double>(cluster_size[c]));
    }
    const double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(sample.size());
}

size_t choose_by_rank_sum(const std::vector<double>& bics, const std::vector<double>& silhouettes,
                          std::vector<int>& bic_ranks, std::vector<int>& sil_ranks) {
  const size_t m = bics.size();
  if (m == 0 || silhouettes.size() != m) fail(ErrorCode::InvalidConfig, "empty candidate list");
  auto ordinal_ranks = [m](const std::vector<double>& values, bool ascending) {
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return ascending ? values[a] < values[b] : values[a] > values[b];
    });
    std::vector<int> ranks(m);
    for (size_t pos = 0; pos < m; ++pos) ranks[order[pos]] = static_cast<int>(pos) + 1;
    return ranks;
  };
  bic_ranks = ordinal_ranks(bics, true);
  sil_ranks = ordinal_ranks(silhouettes, false);
  size_t best = 0;
  for (size_t i = 1; i < m; ++i) {
    if (bic_ranks[i] + sil_ranks[i] < bic_ranks[best] + sil_ranks[best]) best = i;
  }
  return best;
}

const KCandidate& SelectionResult::chosen() const {
  for (const auto& c : candidates) {
    if (c.ok && c.k == chosen_k) return c;
  }
  fail(ErrorCode::InvalidConfig, "selection has no chosen candidate");
}

SelectionResult select_k(const Eigen::MatrixXd& X, int k_min, int k_max, const GmmOptions& options,
                         size_t silhouette_max_points) {
  if (k_min < 2) fail(ErrorCode::SingleCluster, "k_min must be >= 2 (silhouette undefined for k=1)");
  if (k_max < k_min) fail(ErrorCode::InvalidConfig, "k_max < k_min");
  const size_t n = static_cast<size_t>(X.rows());

  SelectionResult result;
  result.candidates.resize(static_cast<size_t>(k_max - k_min + 1));
  parallel_for(result.candidates.size(), [&](size_t i) {
    const int k = k_min + static_cast<int>(i);
    KCandidate& cand = result.candidates[i];
    cand.k = k;
    try {
      GmmOptions per_k = options;
      per_k.seed = options.seed + static_cast<uint64_t>(k);  // stated per-k derivation
      cand.model = fit_gmm(X, k, per_k);
      cand.bic = bic(cand.model, n);
      const Assignment assign = gmm_assign(cand.model, X);
      cand.silhouette = silhouette(X, assign.labels, silhouette_max_points, per_k.seed);
      cand.ok = true;
    } catch (const Error& e) {
      cand.error = e.what();
    }
  });

  std::vector<size_t> ok_indices;
  std::vector<double> bics, sils;
  for (size_t i = 0; i < result.candidates.size(); ++i) {
    if (result.candidates[i].ok) {
      ok_indices.push_back(i);
      bics.push_back(result.candidates[i].bic);
      sils.push_back(result.candidates[i].silhouette);
    }
  }
  if (ok_indices.empty()) fail(ErrorCode::TooFewPoints, "every candidate k failed to fit");
  std::vector<int> bic_ranks, sil_ranks;
  const size_t winner = choose_by_rank_sum(bics, sils, bic_ranks, sil_ranks);
  for (size_t j = 0; j < ok_indices.size(); ++j) {
    result.candidates[ok_indices[j]].bic_rank = bic_ranks[j];
    result.candidates[ok_indices[j]].sil_rank = sil_ranks[j];
  }
  result.chosen_k = result.candidates[ok_indices[winner]].k;
  return result;
}

nlohmann::json GmmModel::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["log_likelihood"] = log_likelihood;
  j["n_iter"] = n_iter;
  j["converged"] = converged;
  j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
  auto mean_rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < means.rows(); ++r) {
    std::vector<double> row(static_cast<size_t>(means.cols()));
    for (Eigen::Index c = 0; c < means.cols(); ++c) row[static_cast<size_t>(c)] = means(r, c);
    mean_rows.push_back(row);
  }
  j["means"] = mean_rows;
  return j;
}

nlohmann::json SelectionResult::to_json() const {
  nlohmann::json j;
  j["chosen_k"] = chosen_k;
  auto arr = nlohmann::json::array();
  for (const auto& c : candidates) {
    nlohmann::json jc;
    jc["k"] = c.k;
    jc["ok"] = c.ok;
    if (c.ok) {
      jc["bic"] = c.bic;
      jc["silhouette"] = c.silhouette;
      jc["bic_rank"] = c.bic_rank;
      jc["sil_rank"] = c.sil_rank;
      jc["converged"] = c.model.converged;
      jc["n_iter"] = c.model.n_iter;
      jc["log_likelihood"] = c.model.log_likelihood;
    } else {
      jc["error"] = c.error;
    }
    arr.push_back(jc);
  }
  j["candidates"] = arr;
  return j;
}

}  // namespace biaslens
