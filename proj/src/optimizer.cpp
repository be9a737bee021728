#include "choiceforge/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "choiceforge/errors.hpp"

namespace choiceforge {

namespace {

double max_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Eigen::VectorXd as_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

BfgsResult maximize_bfgs(const SmoothObjective& objective, std::vector<double> x0, const BfgsOptions& options,
                         const Eigen::MatrixXd& initial_inverse_hessian,
                         const std::function<void(std::span<const double>)>& guard) {
  const auto n = static_cast<Eigen::Index>(x0.size());
  const bool seeded = initial_inverse_hessian.size() > 0;
  if (seeded && (initial_inverse_hessian.rows() != n || initial_inverse_hessian.cols() != n)) {
    throw InputError("inverse Hessian seed has wrong dimension");
  }
  const Eigen::MatrixXd seed = seeded ? initial_inverse_hessian : Eigen::MatrixXd::Identity(n, n);
  const bool scale_first_step = !seeded;

  // Work in minimization form: phi = -f, g = -grad f.
  std::vector<double> grad_buf(x0.size());
  std::vector<double> x_buf = std::move(x0);
  double f = objective(x_buf, grad_buf);
  Eigen::VectorXd x = as_eigen(x_buf);
  Eigen::VectorXd g = -as_eigen(grad_buf);
  Eigen::MatrixXd h = seed;

  BfgsResult result;
  int iter = 0;
  bool fresh = true;
  for (; iter < options.max_iterations; ++iter) {
    if (max_norm(g) < options.gradient_tolerance) break;

    Eigen::VectorXd d = -h * g;
    if (g.dot(d) >= 0.0) {
      h = seed;
      fresh = true;
      d = -h * g;
    }
    const double dn = max_norm(d);
    if (dn > options.max_step) d *= options.max_step / dn;

    const double slope = g.dot(d);
    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new(n), g_new(n);
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + alpha * d;
      std::copy(x_new.data(), x_new.data() + n, x_buf.begin());
      f_new = objective(x_buf, grad_buf);
      g_new = -as_eigen(grad_buf);
      if (std::isfinite(f_new) && -f_new <= -f + options.armijo * alpha * slope) {
        accepted = true;
        break;
      }
      // Near the optimum function differences fall below rounding; accept a
      // step that is flat in value but shrinks the gradient.
      if (std::isfinite(f_new) && std::abs(f_new - f) <= 1e-13 * std::max(1.0, std::abs(f)) &&
          max_norm(g_new) < max_norm(g)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (fresh) break;
      h = seed;
      fresh = true;
      continue;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    x = x_new;
    f = f_new;
    g = g_new;
    if (guard) guard(std::span<const double>(x.data(), static_cast<std::size_t>(n)));

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh && scale_first_step) h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      h += (rho * rho * y.dot(hy) + rho) * s * s.transpose() - rho * (hy * s.transpose() + s * hy.transpose());
      fresh = false;
    }
  }

  result.x.assign(x.data(), x.data() + n);
  result.value = f;
  result.gradient.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) result.gradient[static_cast<std::size_t>(i)] = -g[i];
  result.iterations = iter;
  result.gradient_norm = max_norm(g);
  result.converged = result.gradient_norm < options.gradient_tolerance;
  return result;
}

ScalarOptimum golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                                      double tolerance) {
  if (!(lo <= hi)) throw InputError("golden-section bracket is empty");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  ScalarOptimum best{fc >= fd ? c : d, std::max(fc, fd)};
  for (double edge : {lo, hi}) {
    const double fe = f(edge);
    if (fe > best.value) best = {edge, fe};
  }
  return best;
}

}  // namespace choiceforge
