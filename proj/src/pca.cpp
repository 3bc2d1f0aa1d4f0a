#include "biaslens/pca.hpp"

#include <algorithm>
#include <cmath>

namespace biaslens {

namespace {

void apply_sign_convention(Eigen::MatrixXd& components) {
  for (Eigen::Index r = 0; r < components.rows(); ++r) {
    Eigen::Index max_idx = 0;
    double max_abs = -1.0;
    for (Eigen::Index c = 0; c < components.cols(); ++c) {
      const double a = std::abs(components(r, c));
      if (a > max_abs) {
        max_abs = a;
        max_idx = c;
      }
    }
    if (components(r, max_idx) < 0) components.row(r) = -components.row(r);
  }
}

std::vector<double> json_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace

PcaModel fit_pca(const Eigen::MatrixXd& X, double variance_target, int cap, bool standardize) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2) fail(ErrorCode::InsufficientRows, "PCA needs at least 2 rows, got " + std::to_string(n));
  if (d < 1) fail(ErrorCode::InvalidConfig, "PCA needs at least 1 column");
  if (!(variance_target > 0.0 && variance_target <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "variance target must be in (0, 1]");
  }
  if (cap < 1) fail(ErrorCode::InvalidConfig, "component cap must be >= 1");

  PcaModel model;
  model.standardized = standardize;
  model.mean = X.colwise().mean();
  Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();

  model.scale = Eigen::VectorXd::Ones(d);
  if (standardize) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const double sd = std::sqrt(centered.col(c).squaredNorm() / static_cast<double>(n - 1));
      if (sd > 0) model.scale(c) = sd;
    }
    centered.array().rowwise() /= model.scale.transpose().array();
  }

  const double total_variance = centered.squaredNorm() / static_cast<double>(n - 1);
  if (!(total_variance > 0)) {
    fail(ErrorCode::DegenerateData, "all rows identical; PCA undefined");
  }

  Eigen::VectorXd eigenvalues;   // descending
  Eigen::MatrixXd eigenvectors;  // columns matching eigenvalues, in input space
  if (d <= n) {
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) fail(ErrorCode::DegenerateData, "eigendecomposition failed");
    eigenvalues = solver.eigenvalues().reverse();
    eigenvectors = solver.eigenvectors().rowwise().reverse();
  } else {
    // Gram route: eigenvectors u of (C C^T)/(n-1) map to components C^T u / sqrt((n-1) lambda).
    const Eigen::MatrixXd gram = centered * centered.transpose() / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) fail(ErrorCode::DegenerateData, "eigendecomposition failed");
    const Eigen::VectorXd lam = solver.eigenvalues().reverse();
    const Eigen::MatrixXd u = solver.eigenvectors().rowwise().reverse();
    const Eigen::Index m = std::min<Eigen::Index>(n - 1, lam.size());
    eigenvalues = lam.head(m);
    eigenvectors.resize(d, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double denom = std::sqrt(std::max(eigenvalues(i), 0.0) * static_cast<double>(n - 1));
      if (denom > 0) {
        eigenvectors.col(i) = centered.transpose() * u.col(i) / denom;
      } else {
        eigenvectors.col(i).setZero();
      }
    }
  }
  // Numerical noise can push tiny eigenvalues below zero.
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues(i) < 0) eigenvalues(i) = 0;
  }

  model.all_variance_ratios = eigenvalues / total_variance;

  const Eigen::Index max_out =
      std::min<Eigen::Index>({static_cast<Eigen::Index>(cap), d, n - 1, eigenvalues.size()});
  Eigen::Index needed = max_out;
  double cum = 0.0;
  // The slack absorbs summation rounding at partial targets; full retention
  // must keep every component carrying variance, so it gets none.
  const double target = variance_target < 1.0
                            ? variance_target * total_variance * (1.0 - 1e-12)
                            : total_variance;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    cum += eigenvalues(i);
    if (cum >= target) {
      needed = i + 1;
      break;
    }
  }
  model.d_out = static_cast<int>(std::min(needed, max_out));

  model.components = eigenvectors.leftCols(model.d_out).transpose();
  apply_sign_convention(model.components);
  model.explained_variance_ratio = model.all_variance_ratios.head(model.d_out);
  return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.mean.size()) {
    fail(ErrorCode::DimensionMismatch, "input has " + std::to_string(X.cols()) +
                                           " columns, model expects " +
                                           std::to_string(model.mean.size()));
  }
  Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();
  if (model.standardized) {
    centered.array().rowwise() /= model.scale.transpose().array();
  }
  return centered * model.components.transpose();
}

nlohmann::json PcaModel::to_json() const {
  nlohmann::json j;
  j["d_out"] = d_out;
  j["input_dim"] = mean.size();
  j["standardized"] = standardized;
  j["mean"] = json_vector(mean);
  j["scale"] = json_vector(scale);
  j["explained_variance_ratio"] = json_vector(explained_variance_ratio);
  j["all_variance_ratios"] = json_vector(all_variance_ratios);
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < components.rows(); ++r) {
    rows.push_back(json_vector(components.row(r)));
  }
  j["components"] = rows;  // row-major
  return j;
}

PcaModel PcaModel::from_json(const nlohmann::json& j) {
  PcaModel m;
  m.d_out = j.at("d_out").get<int>();
  m.standardized = j.value("standardized", false);
  m.mean = vector_from_json(j.at("mean"));
  m.scale = vector_from_json(j.at("scale"));
  m.explained_variance_ratio = vector_from_json(j.at("explained_variance_ratio"));
  m.all_variance_ratios = vector_from_json(j.at("all_variance_ratios"));
  const auto& rows = j.at("components");
  m.components.resize(static_cast<Eigen::Index>(rows.size()), m.mean.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    m.components.row(static_cast<Eigen::Index>(r)) = vector_from_json(rows[r]);
  }
  return m;
}

}  // namespace biaslens
