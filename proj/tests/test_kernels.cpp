#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>
#include <cstring>

#include "choiceforge/estimation.hpp"
#include "choiceforge/halton.hpp"
#include "choiceforge/kernels.hpp"
#include "test_support.hpp"

using namespace choiceforge;
using namespace choiceforge::kernels;

namespace {

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

struct ThreadScope {
  int saved = omp_get_max_threads();
  explicit ThreadScope(int n) { omp_set_num_threads(n); }
  ~ThreadScope() { omp_set_num_threads(saved); }
};

}  // namespace

TEST(MnlKernel, ParallelAgreesWithSerial) {
  // 1,500 observations span several 256-observation blocks.
  const auto data = cftest::random_dataset(3, 1500, 5, 3, true);
  const auto p = cftest::random_params(4, 5, 3);
  const auto layout = ParameterLayout::for_params(p);
  const auto design = LongDesign::from_dataset(data);
  const auto theta = layout.pack(p);
  const auto s = mnl_serial(design, theta, layout);
  const auto q = mnl_parallel(design, theta, layout);
  EXPECT_NEAR(q.loglik, s.loglik, 1e-9 * std::abs(s.loglik));
  for (std::size_t i = 0; i < s.gradient.size(); ++i) EXPECT_NEAR(q.gradient[i], s.gradient[i], 1e-9);
}

TEST(MnlKernel, BitIdenticalAcrossThreadCounts) {
  const auto data = cftest::random_dataset(5, 2000, 4, 2, true);
  const auto p = cftest::random_params(6, 4, 0);
  const auto layout = ParameterLayout::for_params(p);
  const auto design = LongDesign::from_dataset(data);
  const auto theta = layout.pack(p);
  LoglikGrad one;
  LoglikGrad four;
  {
    ThreadScope t(1);
    one = mnl_parallel(design, theta, layout);
  }
  {
    ThreadScope t(4);
    four = mnl_parallel(design, theta, layout);
  }
  EXPECT_TRUE(bitwise_equal(one.loglik, four.loglik));
  for (std::size_t i = 0; i < one.gradient.size(); ++i) EXPECT_TRUE(bitwise_equal(one.gradient[i], four.gradient[i]));
}

TEST(MnlKernel, WeightsScaleContributions) {
  const auto data = cftest::random_dataset(8, 300, 3, 2, false);
  const auto p = cftest::random_params(9, 3, 0);
  const auto layout = ParameterLayout::for_params(p);
  const auto design = LongDesign::from_dataset(data);
  const auto theta = layout.pack(p);
  const std::vector<double> twos(data.size(), 2.0);
  const auto unit = mnl_serial(design, theta, layout);
  const auto doubled = mnl_parallel(design, theta, layout, twos);
  EXPECT_NEAR(doubled.loglik, 2.0 * unit.loglik, 1e-9);
}

TEST(MnlInformation, MatchesFiniteDifferenceOfGradient) {
  const auto data = cftest::random_dataset(10, 400, 4, 3, true);
  const auto p = cftest::random_params(11, 4, 3);
  const auto layout = ParameterLayout::for_params(p);
  const auto design = LongDesign::from_dataset(data);
  const auto theta = layout.pack(p);
  const Eigen::MatrixXd info = mnl_information(design, theta, layout);
  const Eigen::MatrixXd fd = finite_difference_information(
      [&](std::span<const double> t) { return mnl_serial(design, t, layout).gradient; }, theta);
  EXPECT_LT((info - fd).cwiseAbs().maxCoeff(), 1e-5 * info.cwiseAbs().maxCoeff());
}

TEST(ChosenLogProbabilities, SumToLogLikelihood) {
  const auto data = cftest::random_dataset(12, 200, 3, 3, true);
  const auto p = cftest::random_params(13, 3, 0);
  const auto layout = ParameterLayout::for_params(p);
  const auto design = LongDesign::from_dataset(data);
  const auto theta = layout.pack(p);
  const auto lp = chosen_log_probabilities(design, theta, layout);
  double sum = 0.0;
  for (double v : lp) sum += v;
  EXPECT_NEAR(sum, mnl_serial(design, theta, layout).loglik, 1e-10);
}

TEST(MixedKernel, ParallelAgreesWithSerialAndIsThreadInvariant) {
  const auto data = cftest::random_dataset(14, 700, 4, 2, true);
  const auto p = cftest::random_params(15, 4, 0);
  MixedLayout layout{ParameterLayout::for_params(p), {1, 3}};
  auto theta = layout.base.pack(p);
  theta.push_back(0.4);
  theta.push_back(-0.3);
  const auto design = LongDesign::from_dataset(data);
  const auto draws = halton_normal_draws(data.size(), 2, HaltonDrawOptions{50, 3, 10, true});
  const auto s = mixed_serial(design, theta, layout, draws);
  LoglikGrad one;
  LoglikGrad four;
  {
    ThreadScope t(1);
    one = mixed_parallel(design, theta, layout, draws);
  }
  {
    ThreadScope t(4);
    four = mixed_parallel(design, theta, layout, draws);
  }
  EXPECT_NEAR(one.loglik, s.loglik, 1e-9 * std::abs(s.loglik));
  EXPECT_TRUE(bitwise_equal(one.loglik, four.loglik));
  for (std::size_t i = 0; i < s.gradient.size(); ++i) {
    EXPECT_NEAR(one.gradient[i], s.gradient[i], 1e-8);
    EXPECT_TRUE(bitwise_equal(one.gradient[i], four.gradient[i]));
  }
}

TEST(MixedKernel, GradientMatchesFiniteDifferences) {
  const auto data = cftest::random_dataset(16, 150, 3, 3, true);
  const auto p = cftest::random_params(17, 3, 0);
  MixedLayout layout{ParameterLayout::for_params(p), {0, 2}};
  auto theta = layout.base.pack(p);
  theta.push_back(0.5);
  theta.push_back(0.2);
  const auto design = LongDesign::from_dataset(data);
  const auto draws = halton_normal_draws(data.size(), 2, HaltonDrawOptions{20, 1, 10, true});
  const auto g = mixed_serial(design, theta, layout, draws).gradient;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto up = theta;
    auto dn = theta;
    up[i] += 1e-5;
    dn[i] -= 1e-5;
    const double fd =
        (mixed_serial(design, up, layout, draws).loglik - mixed_serial(design, dn, layout, draws).loglik) / 2e-5;
    EXPECT_TRUE(cftest::relative_close(g[i], fd, 1e-6, 1e-2)) << i << ": " << g[i] << " vs " << fd;
  }
}

TEST(MixedKernel, ZeroStddevEqualsMnl) {
  const auto data = cftest::random_dataset(18, 300, 4, 2, true);
  const auto p = cftest::random_params(19, 4, 0);
  MixedLayout layout{ParameterLayout::for_params(p), {3}};
  auto theta = layout.base.pack(p);
  const double mnl = mnl_serial(LongDesign::from_dataset(data), theta, layout.base).loglik;
  theta.push_back(0.0);
  const auto draws = halton_normal_draws(data.size(), 1, HaltonDrawOptions{30, 2, 10, true});
  EXPECT_NEAR(mixed_parallel(LongDesign::from_dataset(data), theta, layout, draws).loglik, mnl, 1e-10);
}
