#include "oucv/scoring.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "oucv/error.hpp"
#include "oucv/numerics.hpp"

namespace oucv {

namespace {

// Quantities attached to one gap D between neighbouring points, x = 2 theta D:
//   alpha = 1/(1 - e^{-x}), gamma = e^{-x} alpha = alpha - 1,
//   beta = e^{-x/2} alpha (minus the off-diagonal precision entry).
struct Link {
  double gap = 0.0;
  double rho = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double log_u = 0.0;  // log(1 - e^{-x})

  // theta-derivatives
  double dgamma() const { return -2.0 * gap * gamma * alpha; }
  double dbeta() const { return -gap * beta * (1.0 + 2.0 * gamma); }
};

Link make_link(double gap, double theta) {
  const double x = 2.0 * theta * gap;
  Link l;
  l.gap = gap;
  l.rho = std::exp(-theta * gap);
  l.alpha = 1.0 / num::one_minus_exp(x);
  l.gamma = num::inv_expm1(x);
  l.beta = l.rho * l.alpha;
  l.log_u = num::log_one_minus_exp(x);
  return l;
}

void check_inputs(const Design& design, std::span<const double> y, double theta) {
  if (y.size() != design.size()) {
    throw InvalidParameter("data length " + std::to_string(y.size()) +
                           " does not match design size " + std::to_string(design.size()));
  }
  if (design.size() < 3) throw InvalidDesign("scoring needs n >= 3");
  if (!std::isfinite(theta) || !(theta > 0.0)) {
    throw NumericalFailure("theta must be positive and finite", theta);
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) {
      throw NumericalFailure("nonfinite observation at index " + std::to_string(i + 1));
    }
  }
}

void check_sigma2(double sigma2) {
  if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) {
    throw NumericalFailure("sigma2 must be positive and finite");
  }
}

// Walks the points once, keeping only the two links around the current point.
// Visitor receives (i, precision diagonal, log of it, (R^{-1} y)_i) and the
// links to the left and right (null at the ends).
template <class Visitor>
void walk_points(const Design& design, std::span<const double> y, double theta, Visitor&& visit) {
  const std::size_t n = design.size();
  Link left;
  Link right = make_link(design.gap(1), theta);
  for (std::size_t i = 0; i < n; ++i) {
    const bool has_left = i > 0;
    const bool has_right = i + 1 < n;
    if (has_left) left = right;
    if (has_right && i > 0) right = make_link(design.gap(i + 1), theta);

    double d;
    double log_d;
    double w;
    if (!has_left) {
      d = right.alpha;
      log_d = -right.log_u;
      w = right.alpha * (y[0] - right.rho * y[1]);
    } else if (!has_right) {
      d = left.alpha;
      log_d = -left.log_u;
      w = left.alpha * (y[i] - left.rho * y[i - 1]);
    } else {
      d = 1.0 + left.gamma + right.gamma;
      log_d = std::log1p(left.gamma + right.gamma);
      // alpha_L W_i - beta_R W_{i+1} with innovations W_k = y_k - rho_k y_{k-1}
      w = left.alpha * (y[i] - left.rho * y[i - 1]) - right.beta * (y[i + 1] - right.rho * y[i]);
    }
    visit(i, d, log_d, w, has_left ? &left : nullptr, has_right ? &right : nullptr);
  }
}

}  // namespace

std::vector<double> Tridiagonal::multiply(std::span<const double> x) const {
  const std::size_t n = diag.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = diag[i] * x[i];
    if (i > 0) v += off[i - 1] * x[i - 1];
    if (i + 1 < n) v += off[i] * x[i + 1];
    out[i] = v;
  }
  return out;
}

Eigen::MatrixXd Tridiagonal::dense() const {
  const auto n = static_cast<Eigen::Index>(diag.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    M(i, i) = diag[static_cast<std::size_t>(i)];
    if (i + 1 < n) M(i, i + 1) = M(i + 1, i) = off[static_cast<std::size_t>(i)];
  }
  return M;
}

Tridiagonal precision_matrix(const Design& design, double theta) {
  const std::size_t n = design.size();
  Tridiagonal P;
  P.diag.assign(n, 0.0);
  P.off.assign(n - 1, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    const Link l = make_link(design.gap(k), theta);
    P.off[k - 1] = -l.beta;
    // corner entries are alpha, interior ones alpha_L + gamma_R = 1 + gamma_L + gamma_R
    P.diag[k - 1] += (k == 1) ? l.alpha : l.gamma;
    P.diag[k] += l.alpha;
  }
  return P;
}

LooSummary loo_predictions(const Design& design, std::span<const double> y, double theta) {
  check_inputs(design, y, theta);
  LooSummary out;
  out.predictions.resize(y.size());
  out.normalized_variances.resize(y.size());
  walk_points(design, y, theta,
              [&](std::size_t i, double d, double, double, const Link* l, const Link* r) {
                double num = 0.0;
                if (l) num += l->beta * y[i - 1];
                if (r) num += r->beta * y[i + 1];
                out.predictions[i] = num / d;
                out.normalized_variances[i] = 1.0 / d;
              });
  return out;
}

double ScoreDecomposition::at(double sigma2) const {
  return static_cast<double>(n) * std::log(sigma2) + L + Q / sigma2;
}

ScoreDecomposition score_decomposition(const Design& design, std::span<const double> y,
                                       double theta) {
  check_inputs(design, y, theta);
  ScoreDecomposition out;
  out.n = y.size();
  walk_points(design, y, theta,
              [&](std::size_t, double d, double log_d, double w, const Link*, const Link*) {
                out.L -= log_d;
                out.Q += w * w / d;
              });
  return out;
}

double log_score(const Design& design, std::span<const double> y, double theta, double sigma2) {
  check_sigma2(sigma2);
  return score_decomposition(design, y, theta).at(sigma2);
}

double score_gradient_theta(const Design& design, std::span<const double> y, double theta,
                            double sigma2) {
  check_inputs(design, y, theta);
  check_sigma2(sigma2);
  double dL = 0.0;
  double dQ = 0.0;
  walk_points(design, y, theta,
              [&](std::size_t i, double d, double, double w, const Link* l, const Link* r) {
                double dd = 0.0;
                double dw = 0.0;
                if (l) {
                  dd += l->dgamma();
                  dw -= l->dbeta() * y[i - 1];
                }
                if (r) {
                  dd += r->dgamma();
                  dw -= r->dbeta() * y[i + 1];
                }
                dw += dd * y[i];
                dL -= dd / d;
                dQ += 2.0 * w * dw / d - w * w * dd / (d * d);
              });
  return dL + dQ / sigma2;
}

ScoreDecomposition ml_decomposition(const Design& design, std::span<const double> y,
                                    double theta) {
  check_inputs(design, y, theta);
  const std::size_t n = design.size();
  ScoreDecomposition out;
  out.n = n;
  out.L = static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  out.Q = y[0] * y[0];
  for (std::size_t k = 1; k < n; ++k) {
    const Link l = make_link(design.gap(k), theta);
    const double innovation = y[k] - l.rho * y[k - 1];
    out.L += l.log_u;
    out.Q += l.alpha * innovation * innovation;
  }
  return out;
}

double ml_neg2loglik(const Design& design, std::span<const double> y, double theta,
                     double sigma2) {
  check_sigma2(sigma2);
  return ml_decomposition(design, y, theta).at(sigma2);
}

double ml_gradient_theta(const Design& design, std::span<const double> y, double theta,
                         double sigma2) {
  check_inputs(design, y, theta);
  check_sigma2(sigma2);
  double dL = 0.0;
  double dQ = 0.0;
  for (std::size_t k = 1; k < design.size(); ++k) {
    const Link l = make_link(design.gap(k), theta);
    const double innovation = y[k] - l.rho * y[k - 1];
    const double dinnovation = l.gap * l.rho * y[k - 1];
    dL += 2.0 * l.gap * l.gamma;
    dQ += l.dgamma() * innovation * innovation + 2.0 * l.alpha * innovation * dinnovation;
  }
  return dL + dQ / sigma2;
}

}  // namespace oucv
