#include "oucv/regression.hpp"

#include <cmath>
#include <string>

#include "oucv/error.hpp"
#include "oucv/simulate.hpp"

namespace oucv {

namespace {

void check_shapes(const Design& design, std::span<const double> z, const Eigen::MatrixXd& F) {
  if (z.size() != design.size()) throw InvalidParameter("data length does not match design");
  if (static_cast<std::size_t>(F.rows()) != design.size()) {
    throw InvalidParameter("trend matrix has " + std::to_string(F.rows()) + " rows for " +
                           std::to_string(design.size()) + " points");
  }
  require_full_column_rank(F);
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

Eigen::MatrixXd apply(const Tridiagonal& P, const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd out(n, X.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out.row(i) = P.diag[k] * X.row(i);
    if (i > 0) out.row(i) += P.off[k - 1] * X.row(i - 1);
    if (i + 1 < n) out.row(i) += P.off[k] * X.row(i + 1);
  }
  return out;
}

Eigen::LLT<Eigen::MatrixXd> factor_normal(const Eigen::MatrixXd& M) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw LinearDependence("F' R^{-1} F is not positive definite");
  }
  return llt;
}

// Q z and diag(Q) without forming Q.
struct Projection {
  Eigen::VectorXd Qz;
  Eigen::VectorXd Qdiag;
};

Projection project(const Design& design, std::span<const double> z, double theta,
                   const Eigen::MatrixXd& F) {
  const Tridiagonal P = precision_matrix(design, theta);
  const Eigen::MatrixXd G = apply(P, F);  // rows g_i = (P F)_i
  const auto llt = factor_normal(F.transpose() * G);
  const Eigen::VectorXd Pz = Eigen::Map<const Eigen::VectorXd>(P.multiply(z).data(),
                                                               static_cast<Eigen::Index>(z.size()));
  Projection out;
  out.Qz = Pz - G * llt.solve(G.transpose() * as_vector(z));
  // g_i' M^{-1} g_i = |L^{-1} g_i|^2
  const Eigen::MatrixXd K = llt.matrixL().solve(G.transpose());
  out.Qdiag.resize(static_cast<Eigen::Index>(z.size()));
  for (Eigen::Index i = 0; i < out.Qdiag.size(); ++i) {
    out.Qdiag(i) = P.diag[static_cast<std::size_t>(i)] - K.col(i).squaredNorm();
    if (!(out.Qdiag(i) > 0.0)) {
      throw ConditioningError("projected precision has nonpositive diagonal at index " +
                              std::to_string(i + 1));
    }
  }
  return out;
}

Eigen::MatrixXd drop_row(const Eigen::MatrixXd& A, Eigen::Index i) {
  Eigen::MatrixXd out(A.rows() - 1, A.cols());
  out.topRows(i) = A.topRows(i);
  out.bottomRows(A.rows() - 1 - i) = A.bottomRows(A.rows() - 1 - i);
  return out;
}

Eigen::VectorXd drop_entry(const Eigen::VectorXd& v, Eigen::Index i) {
  Eigen::VectorXd out(v.size() - 1);
  out.head(i) = v.head(i);
  out.tail(v.size() - 1 - i) = v.tail(v.size() - 1 - i);
  return out;
}

Eigen::MatrixXd drop_row_col(const Eigen::MatrixXd& A, Eigen::Index i) {
  const Eigen::MatrixXd rows = drop_row(A, i);
  return drop_row(rows.transpose(), i).transpose();
}

// Kriging weights R_{-i}^{-1} r_{-i} and GLS coefficients on the deleted design.
struct DeletedSolve {
  Eigen::VectorXd weights;
  Eigen::VectorXd beta;
};

DeletedSolve deleted_solve(const Eigen::MatrixXd& R, const Eigen::MatrixXd& F,
                           const Eigen::VectorXd& z, Eigen::Index i) {
  const Eigen::MatrixXd Ri = drop_row_col(R, i);
  const Eigen::VectorXd ri = drop_entry(R.col(i), i);
  const Eigen::MatrixXd Fi = drop_row(F, i);
  const Eigen::VectorXd zi = drop_entry(z, i);
  Eigen::LLT<Eigen::MatrixXd> llt(Ri);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("deleted correlation matrix is not positive definite");
  }
  require_full_column_rank(Fi);
  const Eigen::MatrixXd RiF = llt.solve(Fi);
  const auto normal = factor_normal(Fi.transpose() * RiF);
  DeletedSolve out;
  out.beta = normal.solve(RiF.transpose() * zi);
  out.weights = llt.solve(ri);
  return out;
}

void require_dense_size(const Design& design) {
  if (design.size() > kDenseOracleMaxSize) {
    throw InvalidParameter("dense computation limited to n <= " +
                           std::to_string(kDenseOracleMaxSize));
  }
}

}  // namespace

Eigen::VectorXd gls_beta(const Design& design, std::span<const double> z, double theta,
                         const Eigen::MatrixXd& F) {
  check_shapes(design, z, F);
  const Eigen::MatrixXd G = apply(precision_matrix(design, theta), F);
  return factor_normal(F.transpose() * G).solve(G.transpose() * as_vector(z));
}

Eigen::MatrixXd gls_covariance(const Design& design, double theta, const Eigen::MatrixXd& F) {
  const Eigen::MatrixXd G = apply(precision_matrix(design, theta), F);
  const auto p = F.cols();
  return factor_normal(F.transpose() * G).solve(Eigen::MatrixXd::Identity(p, p));
}

LooSummary reg_loo_predictions(const Design& design, std::span<const double> z, double theta,
                               const Eigen::MatrixXd& F) {
  check_shapes(design, z, F);
  const auto proj = project(design, z, theta, F);
  LooSummary out;
  out.predictions.resize(z.size());
  out.normalized_variances.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out.predictions[i] = z[i] - proj.Qz(k) / proj.Qdiag(k);
    out.normalized_variances[i] = 1.0 / proj.Qdiag(k);
  }
  return out;
}

ScoreDecomposition reg_score_decomposition(const Design& design, std::span<const double> z,
                                           double theta, const Eigen::MatrixXd& F) {
  check_shapes(design, z, F);
  const auto proj = project(design, z, theta, F);
  ScoreDecomposition out;
  out.n = z.size();
  for (Eigen::Index i = 0; i < proj.Qz.size(); ++i) {
    out.L -= std::log(proj.Qdiag(i));
    out.Q += proj.Qz(i) * proj.Qz(i) / proj.Qdiag(i);
  }
  return out;
}

double reg_log_score_value(const Design& design, std::span<const double> z, double theta,
                           double sigma2, const Eigen::MatrixXd& F) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw NumericalFailure("sigma2 must be positive and finite");
  }
  return reg_score_decomposition(design, z, theta, F).at(sigma2);
}

Eigen::VectorXd loo_beta(const Design& design, std::span<const double> z, double theta,
                         const Eigen::MatrixXd& F, std::size_t i) {
  check_shapes(design, z, F);
  require_dense_size(design);
  if (i >= design.size()) throw InvalidParameter("deleted index out of range");
  const Eigen::MatrixXd R = covariance_matrix(design, theta);
  return deleted_solve(R, F, as_vector(z), static_cast<Eigen::Index>(i)).beta;
}

Eigen::VectorXd dense_loo_trend_predictions(const Design& design, std::span<const double> z,
                                            double theta, const Eigen::MatrixXd& F) {
  check_shapes(design, z, F);
  require_dense_size(design);
  const Eigen::MatrixXd R = covariance_matrix(design, theta);
  const Eigen::VectorXd zv = as_vector(z);
  const auto n = zv.size();
  Eigen::VectorXd pred(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = deleted_solve(R, F, zv, i);
    const Eigen::VectorXd resid = drop_entry(zv, i) - drop_row(F, i) * s.beta;
    pred(i) = F.row(i).dot(s.beta) + s.weights.dot(resid);
  }
  return pred;
}

double dense_oracle_reg_score(const Design& design, std::span<const double> z, double theta,
                              double sigma2, const Eigen::MatrixXd& F) {
  check_shapes(design, z, F);
  const Eigen::MatrixXd P = dense_precision(design, theta);
  const Eigen::MatrixXd PF = P * F;
  const Eigen::MatrixXd Q = P - PF * factor_normal(F.transpose() * PF).solve(PF.transpose());
  const Eigen::VectorXd pred = dense_loo_trend_predictions(design, z, theta, F);
  double total = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (!(Q(i, i) > 0.0)) throw ConditioningError("projected precision diagonal is nonpositive");
    const double var = sigma2 / Q(i, i);
    const double resid = z[static_cast<std::size_t>(i)] - pred(i);
    total += std::log(var) + resid * resid / var;
  }
  return total;
}

RegressionScore reg_log_score(const Design& design, std::span<const double> z, double theta,
                              double sigma2, const Eigen::MatrixXd& F,
                              std::optional<Eigen::VectorXd> beta_ref) {
  check_shapes(design, z, F);
  require_dense_size(design);
  const Eigen::VectorXd beta0 = beta_ref.value_or(Eigen::VectorXd::Zero(F.cols()));
  if (beta0.size() != F.cols()) throw InvalidParameter("reference coefficients have wrong size");

  RegressionScore out;
  out.value = reg_log_score_value(design, z, theta, sigma2, F);

  const Eigen::VectorXd zv = as_vector(z);
  const Eigen::VectorXd y = zv - F * beta0;
  out.base_score = log_score(design, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                             theta, sigma2);

  const Eigen::MatrixXd R = covariance_matrix(design, theta);
  const Eigen::MatrixXd P = dense_precision(design, theta);
  const Eigen::MatrixXd PF = P * F;
  const auto normal = factor_normal(F.transpose() * PF);
  const auto n = zv.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pii = P(i, i);
    // e_i' P F M^{-1} F' P e_i
    const double eps_bar = PF.row(i).dot(normal.solve(PF.row(i).transpose()));
    double y_pred = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) y_pred -= P(i, j) * y(j);
    }
    y_pred /= pii;
    const double resid = y(i) - y_pred;

    const auto s = deleted_solve(R, F, zv, i);
    const Eigen::RowVectorXd c = F.row(i) - s.weights.transpose() * drop_row(F, i);
    const double eps = c.dot(beta0 - s.beta);

    out.r1 += std::log(pii - eps_bar) - std::log(pii);
    out.r2 += pii * eps * eps;
    out.r3 += pii * eps * resid;
    out.r4 += eps_bar * (resid + eps) * (resid + eps);
  }
  return out;
}

EstimateResult estimate_cv_reg(const Design& design, std::span<const double> z,
                               const Eigen::MatrixXd& F, const ParameterBox& box) {
  check_shapes(design, z, F);
  return estimate_profile(
      [&](double theta) { return reg_score_decomposition(design, z, theta, F); }, box);
}

}  // namespace oucv
