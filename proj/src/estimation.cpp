#include "choiceforge/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "choiceforge/errors.hpp"
#include "choiceforge/kernels.hpp"
#include "choiceforge/optimizer.hpp"
#include "choiceforge/rng.hpp"

namespace choiceforge {

namespace {

using kernels::LongDesign;

BfgsOptions bfgs_options(const FitConfig& config) {
  BfgsOptions options;
  options.max_iterations = config.max_iterations;
  options.gradient_tolerance = config.gradient_tolerance;
  return options;
}

// Inverse of the information matrix when it is positive definite, otherwise
// the reciprocal of its diagonal (or empty when even that is unusable).
Eigen::MatrixXd inverse_curvature_seed(const Eigen::MatrixXd& info) {
  const Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
    if (inv.allFinite()) return inv;
  }
  Eigen::VectorXd d = info.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = d[i] > 0.0 ? 1.0 / d[i] : 1.0;
  return d.asDiagonal();
}

std::function<void(std::span<const double>)> separation_guard(const FitConfig& config,
                                                              const AttributeSchema& schema,
                                                              std::size_t n_checked) {
  return [cap = config.beta_cap, &schema, n_checked](std::span<const double> x) {
    for (std::size_t k = 0; k < n_checked && k < x.size(); ++k) {
      if (std::abs(x[k]) > cap) {
        const std::string name = k < schema.size() ? schema.names[k] : "constant " + std::to_string(k - schema.size() + 1);
        throw SeparationError("coefficient '" + name + "' exceeded the cap of " + std::to_string(cap) +
                              "; the data appear perfectly separated");
      }
    }
  };
}

BfgsResult fit_mnl_design(const LongDesign& design, const ParameterLayout& layout, const AttributeSchema& schema,
                          std::vector<double> start, std::span<const double> weights, const FitConfig& config) {
  const auto objective = [&](std::span<const double> theta, std::vector<double>& grad) {
    auto lg = kernels::mnl_parallel(design, theta, layout, weights);
    grad = std::move(lg.gradient);
    return lg.loglik;
  };
  const Eigen::MatrixXd seed = inverse_curvature_seed(kernels::mnl_information(design, start, layout, weights));
  return maximize_bfgs(objective, std::move(start), bfgs_options(config), seed,
                       separation_guard(config, schema, layout.size()));
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void check_identification(const ChoiceDataset& data) {
  const std::size_t k_count = data.schema.size();
  for (std::size_t k = 0; k < k_count; ++k) {
    bool within = false;
    bool across = false;
    bool seen = false;
    double first = 0.0;
    for (const auto& obs : data.observations) {
      const auto& alts = obs.scenario.alternatives;
      for (std::size_t j = 1; j < alts.size() && !within; ++j) {
        if (alts[j].values[k] != alts[0].values[k]) within = true;
      }
      if (obs.scenario.includes_outside_option && !across) {
        for (const auto& alt : alts) {
          if (!seen) {
            first = alt.values[k];
            seen = true;
          } else if (alt.values[k] != first) {
            across = true;
          }
        }
      }
      if (within || across) break;
    }
    if (!within && !across) {
      throw IdentificationError(data.schema.names[k],
                                "attribute '" + data.schema.names[k] + "' does not vary; its coefficient is not identified");
    }
  }
}

EstimationResult fit_mnl(const ChoiceDataset& data, const FitConfig& config) {
  data.validate();
  check_identification(data);
  const auto design = LongDesign::from_dataset(data);
  const auto layout = ParameterLayout::for_dataset(data, config.estimate_constants);

  const BfgsResult fit =
      fit_mnl_design(design, layout, data.schema, std::vector<double>(layout.size(), 0.0), {}, config);

  EstimationResult result;
  result.params = layout.unpack(fit.x);
  result.log_likelihood_at_optimum = fit.value;
  result.iterations = fit.iterations;
  result.converged = fit.converged;
  result.gradient_norm = fit.gradient_norm;
  try {
    result.standard_errors = standard_errors_from_information(kernels::mnl_information(design, fit.x, layout));
  } catch (const SingularityError&) {
    result.standard_errors.assign(layout.size(), std::numeric_limits<double>::quiet_NaN());
  }
  return result;
}

std::vector<double> standard_errors_from_information(const Eigen::MatrixXd& info) {
  if (info.rows() == 0) return {};
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  if (eig.info() != Eigen::Success) throw SingularityError("information matrix eigen-decomposition failed");
  const double max_ev = eig.eigenvalues().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  if (!(max_ev > 0.0) || !(min_ev > 1e-12 * max_ev)) {
    throw SingularityError("information matrix is singular or not positive definite");
  }
  const Eigen::MatrixXd cov =
      eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  std::vector<double> se(static_cast<std::size_t>(info.rows()));
  for (Eigen::Index i = 0; i < info.rows(); ++i) se[static_cast<std::size_t>(i)] = std::sqrt(cov(i, i));
  return se;
}

Eigen::MatrixXd finite_difference_information(
    const std::function<std::vector<double>(std::span<const double>)>& gradient, std::span<const double> at,
    double step) {
  const auto n = static_cast<Eigen::Index>(at.size());
  Eigen::MatrixXd hess(n, n);
  std::vector<double> x(at.begin(), at.end());
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    const double h = step * std::max(1.0, std::abs(at[sj]));
    x[sj] = at[sj] + h;
    const auto gp = gradient(x);
    x[sj] = at[sj] - h;
    const auto gm = gradient(x);
    x[sj] = at[sj];
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      hess(i, j) = (gp[si] - gm[si]) / (2.0 * h);
    }
  }
  return -0.5 * (hess + hess.transpose());
}

std::vector<double> standard_errors(const ParameterVector& params, const ChoiceDataset& data, HessianMethod method) {
  data.validate();
  params.validate(data.schema);
  const auto layout = ParameterLayout::for_params(params);
  const auto design = LongDesign::from_dataset(data);
  const auto theta = layout.pack(params);
  if (method == HessianMethod::analytic) {
    return standard_errors_from_information(kernels::mnl_information(design, theta, layout));
  }
  const auto grad = [&](std::span<const double> x) { return kernels::mnl_parallel(design, x, layout).gradient; };
  return standard_errors_from_information(finite_difference_information(grad, theta, 1e-5));
}

// --- latent class -----------------------------------------------------------

namespace {

struct ClassState {
  std::vector<std::vector<double>> thetas;
  std::vector<double> shares;
};

// Per-observation log-likelihood contributions and posterior weights.
double e_step(const LongDesign& design, const ParameterLayout& layout, const ClassState& state,
              std::vector<std::vector<double>>& posterior) {
  const std::size_t n_classes = state.thetas.size();
  const std::size_t n = design.n_obs();
  std::vector<std::vector<double>> log_joint(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    log_joint[c] = kernels::chosen_log_probabilities(design, state.thetas[c], layout);
    const double log_share = std::log(state.shares[c]);
    for (double& v : log_joint[c]) v += log_share;
  }
  posterior.assign(n_classes, std::vector<double>(n));
  std::vector<double> per_obs(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n); ++s) {
    const auto i = static_cast<std::size_t>(s);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_classes; ++c) m = std::max(m, log_joint[c][i]);
    double sum = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) sum += std::exp(log_joint[c][i] - m);
    const double lse = m + std::log(sum);
    per_obs[i] = lse;
    for (std::size_t c = 0; c < n_classes; ++c) posterior[c][i] = std::exp(log_joint[c][i] - lse);
  }
  // Fixed-order reduction keeps the trace independent of thread count.
  double total = 0.0;
  for (std::size_t b = 0; b < n; b += kernels::kBlockSize) {
    double part = 0.0;
    for (std::size_t i = b; i < std::min(n, b + kernels::kBlockSize); ++i) part += per_obs[i];
    total += part;
  }
  return total;
}

struct EmRun {
  ClassState state;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
};

EmRun run_em(const LongDesign& design, const ParameterLayout& layout, const AttributeSchema& schema,
             ClassState state, const LatentClassConfig& config) {
  EmRun run;
  std::vector<std::vector<double>> posterior;
  double ll = e_step(design, layout, state, posterior);
  run.trace.push_back(ll);
  const std::size_t n_classes = state.thetas.size();
  const auto n = static_cast<double>(design.n_obs());

  for (int iter = 0; iter < config.max_em_iterations; ++iter) {
    ClassState next = state;
    for (std::size_t c = 0; c < n_classes; ++c) {
      const double mass = std::accumulate(posterior[c].begin(), posterior[c].end(), 0.0);
      next.shares[c] = mass / n;
      if (next.shares[c] < config.degenerate_share) {
        run.degenerate = true;
        continue;
      }
      try {
        next.thetas[c] = fit_mnl_design(design, layout, schema, state.thetas[c], posterior[c], config.fit).x;
      } catch (const SeparationError&) {
        // A class whose weighted data separate keeps its previous
        // coefficients; a partial M-step still cannot lower the likelihood.
        run.degenerate = true;
      }
    }
    const double share_sum = std::accumulate(next.shares.begin(), next.shares.end(), 0.0);
    for (double& s : next.shares) s = std::max(s / share_sum, std::numeric_limits<double>::min());

    std::vector<std::vector<double>> next_posterior;
    const double next_ll = e_step(design, layout, next, next_posterior);
    run.iterations = iter + 1;
    if (next_ll < ll - 1e-10) {
      // A non-ascending step is rejected and the previous state kept.
      run.converged = true;
      break;
    }
    const double gain = next_ll - ll;
    state = std::move(next);
    posterior = std::move(next_posterior);
    ll = next_ll;
    run.trace.push_back(ll);
    if (gain < config.em_tolerance) {
      run.converged = true;
      break;
    }
  }
  run.state = std::move(state);
  return run;
}

// Gradient of the mixture log-likelihood in (class thetas..., share logits
// for classes 1..K-1 relative to class 0).
std::vector<double> mixture_gradient(const LongDesign& design, const ParameterLayout& layout,
                                     std::span<const double> packed, std::size_t n_classes) {
  const std::size_t dim = layout.size();
  ClassState state;
  state.thetas.resize(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    state.thetas[c].assign(packed.begin() + static_cast<std::ptrdiff_t>(c * dim),
                           packed.begin() + static_cast<std::ptrdiff_t>((c + 1) * dim));
  }
  std::vector<double> logits(n_classes, 0.0);
  for (std::size_t c = 1; c < n_classes; ++c) logits[c] = packed[n_classes * dim + c - 1];
  const double lse = log_sum_exp(logits);
  state.shares.resize(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) state.shares[c] = std::exp(logits[c] - lse);

  std::vector<std::vector<double>> posterior;
  e_step(design, layout, state, posterior);
  std::vector<double> grad(packed.size(), 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto g = kernels::mnl_parallel(design, state.thetas[c], layout, posterior[c]).gradient;
    std::copy(g.begin(), g.end(), grad.begin() + static_cast<std::ptrdiff_t>(c * dim));
    if (c >= 1) {
      const double mass = std::accumulate(posterior[c].begin(), posterior[c].end(), 0.0);
      grad[n_classes * dim + c - 1] = mass - static_cast<double>(design.n_obs()) * state.shares[c];
    }
  }
  return grad;
}

}  // namespace

double latent_class_log_likelihood(const ChoiceDataset& data, const std::vector<ParameterVector>& class_params,
                                   const std::vector<double>& shares) {
  if (class_params.empty() || class_params.size() != shares.size()) {
    throw InputError("latent class parameters and shares must be non-empty and aligned");
  }
  data.validate();
  const auto design = LongDesign::from_dataset(data);
  const auto layout = ParameterLayout::for_params(class_params.front());
  ClassState state;
  for (const auto& p : class_params) state.thetas.push_back(layout.pack(p));
  state.shares = shares;
  std::vector<std::vector<double>> posterior;
  return e_step(design, layout, state, posterior);
}

LatentClassResult fit_latent_class(const ChoiceDataset& data, int n_classes, const LatentClassConfig& config) {
  if (n_classes < 1) throw InputError("latent class model needs at least one class");
  if (config.n_starts < 1) throw InputError("latent class model needs at least one start");
  data.validate();
  check_identification(data);
  const auto design = LongDesign::from_dataset(data);
  const auto layout = ParameterLayout::for_dataset(data, config.fit.estimate_constants);
  const auto k = static_cast<std::size_t>(n_classes);

  const BfgsResult mnl =
      fit_mnl_design(design, layout, data.schema, std::vector<double>(layout.size(), 0.0), {}, config.fit);

  EmRun best;
  int best_start = -1;
  const int n_starts = n_classes == 1 ? 1 : config.n_starts;
  for (int s = 0; s < n_starts; ++s) {
    CounterRng rng(config.seed, static_cast<std::uint64_t>(s));
    ClassState start;
    start.shares.assign(k, 1.0 / static_cast<double>(k));
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> theta = mnl.x;
      if (k > 1) {
        for (double& v : theta) v *= 1.0 + config.perturbation * (2.0 * rng.uniform() - 1.0);
      }
      start.thetas.push_back(std::move(theta));
    }
    EmRun run = run_em(design, layout, data.schema, std::move(start), config);
    if (best_start < 0 || run.trace.back() > best.trace.back()) {
      best = std::move(run);
      best_start = s;
    }
  }

  // Canonical labels: descending price coefficient.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t price = data.schema.price_index;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return best.state.thetas[a][price] > best.state.thetas[b][price];
  });

  LatentClassResult result;
  std::vector<double> packed;
  for (std::size_t c : order) {
    result.class_params.push_back(layout.unpack(best.state.thetas[c]));
    result.class_shares.push_back(best.state.shares[c]);
    packed.insert(packed.end(), best.state.thetas[c].begin(), best.state.thetas[c].end());
  }
  for (std::size_t c = 1; c < k; ++c) packed.push_back(std::log(result.class_shares[c] / result.class_shares[0]));
  result.log_likelihood_trace = std::move(best.trace);
  result.log_likelihood = result.log_likelihood_trace.back();
  result.iterations = best.iterations;
  result.converged = best.converged;
  result.best_start = best_start;
  for (double s : result.class_shares) {
    if (s < config.degenerate_share) best.degenerate = true;
  }
  result.degenerate_class_warning = best.degenerate;

  const std::size_t dim = layout.size();
  result.class_standard_errors.assign(k, std::vector<double>(dim, std::numeric_limits<double>::quiet_NaN()));
  result.share_standard_errors.assign(k, std::numeric_limits<double>::quiet_NaN());
  try {
    const auto grad = [&](std::span<const double> x) { return mixture_gradient(design, layout, x, k); };
    const Eigen::MatrixXd info = finite_difference_information(grad, packed, 1e-5);
    const std::vector<double> se = standard_errors_from_information(info);
    for (std::size_t c = 0; c < k; ++c) {
      std::copy(se.begin() + static_cast<std::ptrdiff_t>(c * dim), se.begin() + static_cast<std::ptrdiff_t>((c + 1) * dim),
                result.class_standard_errors[c].begin());
    }
    // Delta method for softmax shares over the logit block.
    const Eigen::MatrixXd cov = info.inverse();
    const auto base = static_cast<Eigen::Index>(k * dim);
    for (std::size_t c = 0; c < k; ++c) {
      Eigen::VectorXd jac = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k - 1));
      for (std::size_t j = 1; j < k; ++j) {
        jac[static_cast<Eigen::Index>(j - 1)] =
            result.class_shares[c] * ((c == j ? 1.0 : 0.0) - result.class_shares[j]);
      }
      const auto m = static_cast<Eigen::Index>(k - 1);
      result.share_standard_errors[c] = k == 1 ? 0.0 : std::sqrt(jac.dot(cov.block(base, base, m, m) * jac));
    }
  } catch (const SingularityError&) {
    // Left as NaN: the mixture is not locally identified at this optimum.
  }
  return result;
}

// --- mixed logit -------------------------------------------------------------

double simulated_log_likelihood(const ChoiceDataset& data, const ParameterVector& means,
                                const std::vector<double>& stddevs, const std::vector<std::size_t>& random_indices,
                                const HaltonDrawOptions& draws) {
  data.validate();
  means.validate(data.schema);
  if (stddevs.size() != random_indices.size()) throw InputError("one standard deviation per random coefficient");
  if (draws.n_draws < 1) throw InputError("at least one draw per observation is required");
  const auto design = LongDesign::from_dataset(data);
  kernels::MixedLayout layout{ParameterLayout::for_params(means), random_indices};
  auto theta = layout.base.pack(means);
  theta.insert(theta.end(), stddevs.begin(), stddevs.end());
  const auto z = halton_normal_draws(design.n_obs(), random_indices.size(), draws);
  return kernels::mixed_parallel(design, theta, layout, z).loglik;
}

MixedLogitResult fit_mixed_logit(const ChoiceDataset& data, std::vector<std::size_t> random_indices,
                                 const MixedLogitConfig& config) {
  if (config.n_draws < 1) throw InputError("at least one draw per observation is required");
  data.validate();
  check_identification(data);
  if (random_indices.empty()) random_indices.push_back(data.schema.price_index);
  std::sort(random_indices.begin(), random_indices.end());
  random_indices.erase(std::unique(random_indices.begin(), random_indices.end()), random_indices.end());
  for (std::size_t idx : random_indices) {
    if (idx >= data.schema.size()) throw InputError("random coefficient index outside schema");
  }

  const auto design = LongDesign::from_dataset(data);
  kernels::MixedLayout layout{ParameterLayout::for_dataset(data, config.fit.estimate_constants), random_indices};
  const std::size_t n_base = layout.base.size();
  const std::size_t n_random = random_indices.size();

  const BfgsResult mnl =
      fit_mnl_design(design, layout.base, data.schema, std::vector<double>(n_base, 0.0), {}, config.fit);

  HaltonDrawOptions draw_options;
  draw_options.n_draws = config.n_draws;
  draw_options.seed = config.seed;
  const auto draws = halton_normal_draws(design.n_obs(), n_random, draw_options);

  MixedLogitResult result;
  result.random_indices = random_indices;
  result.draws_per_observation = config.n_draws;

  std::vector<double> theta;
  if (config.constrain_stddev_zero) {
    theta = mnl.x;
    theta.resize(n_base + n_random, 0.0);
    std::vector<double> full(theta);
    const auto eval = [&](std::span<const double> x) {
      std::copy(x.begin(), x.end(), full.begin());
      return kernels::mixed_parallel(design, full, layout, draws);
    };
    std::vector<double> grad_buf;
    const auto objective = [&](std::span<const double> x, std::vector<double>& grad) {
      auto lg = eval(x);
      lg.gradient.resize(n_base);
      grad = std::move(lg.gradient);
      return lg.loglik;
    };
    const auto fit = maximize_bfgs(objective, mnl.x, bfgs_options(config.fit),
                                   inverse_curvature_seed(kernels::mnl_information(design, mnl.x, layout.base)),
                                   separation_guard(config.fit, data.schema, n_base));
    std::copy(fit.x.begin(), fit.x.end(), theta.begin());
    result.simulated_log_likelihood = fit.value;
    result.iterations = fit.iterations;
    result.converged = fit.converged;
    result.gradient_norm = fit.gradient_norm;
    try {
      const auto grad = [&](std::span<const double> x) {
        auto g = eval(x).gradient;
        g.resize(n_base);
        return g;
      };
      result.mean_standard_errors = standard_errors_from_information(finite_difference_information(grad, fit.x));
    } catch (const SingularityError&) {
      result.mean_standard_errors.assign(n_base, std::numeric_limits<double>::quiet_NaN());
    }
    result.stddev_standard_errors.assign(n_random, 0.0);
  } else {
    theta = mnl.x;
    for (std::size_t idx : random_indices) {
      const double mu = std::abs(mnl.x[idx]);
      theta.push_back(mu > 0.0 ? 0.1 * mu : 0.1);
    }
    const auto objective = [&](std::span<const double> x, std::vector<double>& grad) {
      auto lg = kernels::mixed_parallel(design, x, layout, draws);
      grad = std::move(lg.gradient);
      return lg.loglik;
    };
    Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(layout.size()),
                                                 static_cast<Eigen::Index>(layout.size()));
    const auto base_seed = inverse_curvature_seed(kernels::mnl_information(design, mnl.x, layout.base));
    const auto nb = static_cast<Eigen::Index>(n_base);
    seed.topLeftCorner(nb, nb) = base_seed;
    for (std::size_t d = 0; d < n_random; ++d) {
      const auto i = static_cast<Eigen::Index>(n_base + d);
      seed(i, i) = base_seed(static_cast<Eigen::Index>(random_indices[d]), static_cast<Eigen::Index>(random_indices[d]));
    }
    const auto fit = maximize_bfgs(objective, theta, bfgs_options(config.fit), seed,
                                   separation_guard(config.fit, data.schema, n_base));
    theta = fit.x;
    result.simulated_log_likelihood = fit.value;
    result.iterations = fit.iterations;
    result.converged = fit.converged;
    result.gradient_norm = fit.gradient_norm;
    try {
      const auto grad = [&](std::span<const double> x) { return kernels::mixed_parallel(design, x, layout, draws).gradient; };
      const auto se = standard_errors_from_information(finite_difference_information(grad, theta));
      result.mean_standard_errors.assign(se.begin(), se.begin() + static_cast<std::ptrdiff_t>(n_base));
      result.stddev_standard_errors.assign(se.begin() + static_cast<std::ptrdiff_t>(n_base), se.end());
    } catch (const SingularityError&) {
      result.mean_standard_errors.assign(n_base, std::numeric_limits<double>::quiet_NaN());
      result.stddev_standard_errors.assign(n_random, std::numeric_limits<double>::quiet_NaN());
    }
  }

  result.mean_params = layout.base.unpack(std::span<const double>(theta.data(), n_base));
  result.mean_betas = result.mean_params.betas;
  result.stddev_betas.assign(data.schema.size(), 0.0);
  for (std::size_t d = 0; d < n_random; ++d) result.stddev_betas[random_indices[d]] = std::abs(theta[n_base + d]);
  return result;
}

}  // namespace choiceforge
