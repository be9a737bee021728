#include "choiceforge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "choiceforge/errors.hpp"

namespace choiceforge::kernels {

namespace {

std::size_t block_count(std::size_t n_obs) { return (n_obs + kBlockSize - 1) / kBlockSize; }

double weight_of(std::span<const double> weights, std::size_t i) { return weights.empty() ? 1.0 : weights[i]; }

void check_inputs(const LongDesign& design, std::span<const double> theta, const ParameterLayout& layout,
                  std::span<const double> weights) {
  if (layout.n_attributes != design.n_attributes) throw SchemaError("layout does not match design attributes");
  if (theta.size() != layout.size()) throw SchemaError("free-parameter vector does not match layout");
  if (!weights.empty() && weights.size() != design.n_obs()) throw InputError("one weight per observation required");
}

// Utilities of the inside rows of observation i into `v`; returns the max
// over effective alternatives (the outside option contributes 0).
double row_utilities(const LongDesign& d, std::size_t i, const double* betas, const double* constants,
                     std::size_t n_constants, double* v) {
  const std::size_t begin = d.offsets[i];
  const std::size_t n = d.rows_of(i);
  const std::size_t k_count = d.n_attributes;
  double vmax = d.has_outside[i] ? 0.0 : -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = d.row(begin + r);
    const std::uint32_t a = d.alt_index[begin + r];
    double u = (a >= 1 && a <= n_constants) ? constants[a - 1] : 0.0;
    for (std::size_t k = 0; k < k_count; ++k) u += betas[k] * x[k];
    v[r] = u;
    vmax = std::max(vmax, u);
  }
  return vmax;
}

// Converts utilities to probabilities in place; returns ln of the chosen
// alternative's probability.
double to_probabilities(const LongDesign& d, std::size_t i, double vmax, double* v) {
  const std::size_t n = d.rows_of(i);
  const std::uint32_t chosen = d.chosen[i];
  const double v_chosen = chosen < n ? v[chosen] : 0.0;
  double denom = d.has_outside[i] ? std::exp(-vmax) : 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    v[r] = std::exp(v[r] - vmax);
    denom += v[r];
  }
  for (std::size_t r = 0; r < n; ++r) v[r] /= denom;
  return v_chosen - vmax - std::log(denom);
}

double mnl_observation(const LongDesign& d, std::size_t i, std::span<const double> theta,
                       const ParameterLayout& layout, double w, double* grad, std::vector<double>& scratch) {
  const std::size_t n = d.rows_of(i);
  if (scratch.size() < n) scratch.resize(n);
  double* p = scratch.data();
  const double* betas = theta.data();
  const double* constants = theta.data() + layout.n_attributes;
  const double vmax = row_utilities(d, i, betas, constants, layout.n_constants, p);
  const double log_p = to_probabilities(d, i, vmax, p);

  const std::size_t begin = d.offsets[i];
  const std::uint32_t chosen = d.chosen[i];
  for (std::size_t r = 0; r < n; ++r) {
    const double coef = w * ((r == chosen ? 1.0 : 0.0) - p[r]);
    const double* x = d.row(begin + r);
    for (std::size_t k = 0; k < layout.n_attributes; ++k) grad[k] += coef * x[k];
    const std::uint32_t a = d.alt_index[begin + r];
    if (a >= 1 && a <= layout.n_constants) grad[layout.n_attributes + a - 1] += coef;
  }
  return w * log_p;
}

}  // namespace

LongDesign LongDesign::from_dataset(const ChoiceDataset& data) {
  LongDesign d;
  d.n_attributes = data.schema.size();
  d.offsets.reserve(data.size() + 1);
  d.offsets.push_back(0);
  d.chosen.reserve(data.size());
  d.has_outside.reserve(data.size());
  for (const auto& obs : data.observations) {
    const auto& alts = obs.scenario.alternatives;
    for (std::size_t j = 0; j < alts.size(); ++j) {
      if (alts[j].values.size() != d.n_attributes) throw SchemaError("alternative does not match dataset schema");
      d.x.insert(d.x.end(), alts[j].values.begin(), alts[j].values.end());
      d.alt_index.push_back(static_cast<std::uint32_t>(j));
    }
    if (obs.chosen_index >= obs.scenario.effective_size()) throw InputError("chosen index out of range");
    d.offsets.push_back(d.alt_index.size());
    d.has_outside.push_back(obs.scenario.includes_outside_option ? 1 : 0);
    d.chosen.push_back(static_cast<std::uint32_t>(obs.chosen_index));
  }
  return d;
}

LoglikGrad mnl_serial(const LongDesign& design, std::span<const double> theta, const ParameterLayout& layout,
                      std::span<const double> weights) {
  check_inputs(design, theta, layout, weights);
  LoglikGrad out;
  out.gradient.assign(layout.size(), 0.0);
  std::vector<double> scratch;
  for (std::size_t i = 0; i < design.n_obs(); ++i) {
    out.loglik += mnl_observation(design, i, theta, layout, weight_of(weights, i), out.gradient.data(), scratch);
  }
  return out;
}

LoglikGrad mnl_parallel(const LongDesign& design, std::span<const double> theta, const ParameterLayout& layout,
                        std::span<const double> weights) {
  check_inputs(design, theta, layout, weights);
  const std::size_t n_blocks = block_count(design.n_obs());
  const std::size_t dim = layout.size();
  std::vector<double> block_ll(n_blocks, 0.0);
  std::vector<double> block_grad(n_blocks * dim, 0.0);

#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_blocks); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * kBlockSize;
      const std::size_t hi = std::min(design.n_obs(), lo + kBlockSize);
      double* grad = block_grad.data() + static_cast<std::size_t>(b) * dim;
      double ll = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        ll += mnl_observation(design, i, theta, layout, weight_of(weights, i), grad, scratch);
      }
      block_ll[static_cast<std::size_t>(b)] = ll;
    }
  }

  LoglikGrad out;
  out.gradient.assign(dim, 0.0);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    out.loglik += block_ll[b];
    for (std::size_t k = 0; k < dim; ++k) out.gradient[k] += block_grad[b * dim + k];
  }
  return out;
}

Eigen::MatrixXd mnl_information(const LongDesign& design, std::span<const double> theta,
                                const ParameterLayout& layout, std::span<const double> weights) {
  check_inputs(design, theta, layout, weights);
  const std::size_t n_blocks = block_count(design.n_obs());
  const auto dim = static_cast<Eigen::Index>(layout.size());
  std::vector<Eigen::MatrixXd> partial(n_blocks, Eigen::MatrixXd::Zero(dim, dim));

#pragma omp parallel
  {
    std::vector<double> p;
    Eigen::VectorXd zbar(dim), z(dim);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_blocks); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * kBlockSize;
      const std::size_t hi = std::min(design.n_obs(), lo + kBlockSize);
      Eigen::MatrixXd& info = partial[static_cast<std::size_t>(b)];
      for (std::size_t i = lo; i < hi; ++i) {
        const std::size_t n = design.rows_of(i);
        if (p.size() < n) p.resize(n);
        const double vmax =
            row_utilities(design, i, theta.data(), theta.data() + layout.n_attributes, layout.n_constants, p.data());
        to_probabilities(design, i, vmax, p.data());
        const std::size_t begin = design.offsets[i];
        auto fill = [&](std::size_t r) {
          z.setZero();
          const double* x = design.row(begin + r);
          for (std::size_t k = 0; k < layout.n_attributes; ++k) z[static_cast<Eigen::Index>(k)] = x[k];
          const std::uint32_t a = design.alt_index[begin + r];
          if (a >= 1 && a <= layout.n_constants) z[static_cast<Eigen::Index>(layout.n_attributes + a - 1)] = 1.0;
        };
        zbar.setZero();
        double p_inside = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          fill(r);
          zbar += p[r] * z;
          p_inside += p[r];
        }
        const double w = weight_of(weights, i);
        for (std::size_t r = 0; r < n; ++r) {
          fill(r);
          z -= zbar;
          info.noalias() += (w * p[r]) * z * z.transpose();
        }
        if (design.has_outside[i]) info.noalias() += (w * (1.0 - p_inside)) * zbar * zbar.transpose();
      }
    }
  }

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& m : partial) total += m;
  return total;
}

std::vector<double> chosen_log_probabilities(const LongDesign& design, std::span<const double> theta,
                                             const ParameterLayout& layout) {
  check_inputs(design, theta, layout, {});
  std::vector<double> out(design.n_obs());
#pragma omp parallel
  {
    std::vector<double> p;
#pragma omp for schedule(static)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(design.n_obs()); ++s) {
      const auto i = static_cast<std::size_t>(s);
      const std::size_t n = design.rows_of(i);
      if (p.size() < n) p.resize(n);
      const double vmax =
          row_utilities(design, i, theta.data(), theta.data() + layout.n_attributes, layout.n_constants, p.data());
      out[i] = to_probabilities(design, i, vmax, p.data());
    }
  }
  return out;
}

namespace {

struct MixedScratch {
  std::vector<double> betas;
  std::vector<double> probs;     // [draw][row]
  std::vector<double> log_pc;    // per draw
};

double mixed_observation(const LongDesign& d, std::size_t i, std::span<const double> theta,
                         const MixedLayout& layout, const DrawSet& draws, double* grad, MixedScratch& s) {
  const std::size_t n = d.rows_of(i);
  const std::size_t n_draws = draws.n_draws;
  const std::size_t n_dims = layout.random_indices.size();
  const std::size_t k_count = layout.base.n_attributes;
  const double* constants = theta.data() + k_count;
  const double* stddev = theta.data() + layout.base.size();

  s.betas.resize(k_count);
  s.probs.resize(n_draws * n);
  s.log_pc.resize(n_draws);

  double lmax = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < n_draws; ++r) {
    std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(k_count), s.betas.begin());
    const double* z = draws.at(i, r);
    for (std::size_t dim = 0; dim < n_dims; ++dim) s.betas[layout.random_indices[dim]] += stddev[dim] * z[dim];
    double* p = s.probs.data() + r * n;
    const double vmax = row_utilities(d, i, s.betas.data(), constants, layout.base.n_constants, p);
    s.log_pc[r] = to_probabilities(d, i, vmax, p);
    lmax = std::max(lmax, s.log_pc[r]);
  }

  double scaled_sum = 0.0;
  for (std::size_t r = 0; r < n_draws; ++r) {
    s.log_pc[r] = std::exp(s.log_pc[r] - lmax);
    scaled_sum += s.log_pc[r];
  }

  const std::size_t begin = d.offsets[i];
  const std::uint32_t chosen = d.chosen[i];
  for (std::size_t r = 0; r < n_draws; ++r) {
    const double omega = s.log_pc[r] / scaled_sum;
    const double* p = s.probs.data() + r * n;
    const double* z = draws.at(i, r);
    for (std::size_t row = 0; row < n; ++row) {
      const double coef = omega * ((row == chosen ? 1.0 : 0.0) - p[row]);
      const double* x = d.row(begin + row);
      for (std::size_t k = 0; k < k_count; ++k) grad[k] += coef * x[k];
      const std::uint32_t a = d.alt_index[begin + row];
      if (a >= 1 && a <= layout.base.n_constants) grad[k_count + a - 1] += coef;
      for (std::size_t dim = 0; dim < n_dims; ++dim) {
        grad[layout.base.size() + dim] += coef * x[layout.random_indices[dim]] * z[dim];
      }
    }
  }
  return lmax + std::log(scaled_sum / static_cast<double>(n_draws));
}

void check_mixed(const LongDesign& design, std::span<const double> theta, const MixedLayout& layout,
                 const DrawSet& draws) {
  if (layout.base.n_attributes != design.n_attributes) throw SchemaError("layout does not match design attributes");
  if (theta.size() != layout.size()) throw SchemaError("free-parameter vector does not match mixed layout");
  if (draws.n_obs != design.n_obs() || draws.n_dims != layout.random_indices.size() || draws.n_draws < 1) {
    throw InputError("draw set does not match design");
  }
  for (std::size_t idx : layout.random_indices) {
    if (idx >= layout.base.n_attributes) throw SchemaError("random coefficient index outside schema");
  }
}

}  // namespace

LoglikGrad mixed_serial(const LongDesign& design, std::span<const double> theta, const MixedLayout& layout,
                        const DrawSet& draws) {
  check_mixed(design, theta, layout, draws);
  LoglikGrad out;
  out.gradient.assign(layout.size(), 0.0);
  MixedScratch scratch;
  for (std::size_t i = 0; i < design.n_obs(); ++i) {
    out.loglik += mixed_observation(design, i, theta, layout, draws, out.gradient.data(), scratch);
  }
  return out;
}

LoglikGrad mixed_parallel(const LongDesign& design, std::span<const double> theta, const MixedLayout& layout,
                          const DrawSet& draws) {
  check_mixed(design, theta, layout, draws);
  const std::size_t n_blocks = block_count(design.n_obs());
  const std::size_t dim = layout.size();
  std::vector<double> block_ll(n_blocks, 0.0);
  std::vector<double> block_grad(n_blocks * dim, 0.0);

#pragma omp parallel
  {
    MixedScratch scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_blocks); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * kBlockSize;
      const std::size_t hi = std::min(design.n_obs(), lo + kBlockSize);
      double* grad = block_grad.data() + static_cast<std::size_t>(b) * dim;
      double ll = 0.0;
      for (std::size_t i = lo; i < hi; ++i) ll += mixed_observation(design, i, theta, layout, draws, grad, scratch);
      block_ll[static_cast<std::size_t>(b)] = ll;
    }
  }

  LoglikGrad out;
  out.gradient.assign(dim, 0.0);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    out.loglik += block_ll[b];
    for (std::size_t k = 0; k < dim; ++k) out.gradient[k] += block_grad[b * dim + k];
  }
  return out;
}

}  // namespace choiceforge::kernels
