// Serial vs OpenMP likelihood kernels on a synthetic dataset.
// Usage: bench_kernels [n_observations] [repetitions]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <functional>

#include "choiceforge/halton.hpp"
#include "choiceforge/kernels.hpp"
#include "choiceforge/synth.hpp"

using namespace choiceforge;

namespace {

double time_it(int reps, const std::function<double()>& f) {
  double sink = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) sink += f();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (sink == 0.123456789) std::puts("");
  return secs / reps;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 200000;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 5;

  const auto spec = virtual_traveling_default();
  const auto data = generate_dataset(spec, generate_scenarios(spec, n, spec.levels_per_attribute));
  const auto design = kernels::LongDesign::from_dataset(data);
  const auto layout = ParameterLayout::for_params(spec.class_params[0]);
  const auto theta = layout.pack(spec.class_params[0]);

  kernels::MixedLayout mixed{layout, {spec.schema.price_index}};
  auto mixed_theta = theta;
  mixed_theta.push_back(0.2);
  const std::size_t mixed_n = std::min<std::size_t>(n, 20000);
  const auto mixed_data = generate_dataset(spec, generate_scenarios(spec, mixed_n, spec.levels_per_attribute));
  const auto mixed_design = kernels::LongDesign::from_dataset(mixed_data);
  const auto draws = halton_normal_draws(mixed_n, 1, HaltonDrawOptions{100});

  std::printf("threads available: %d\n", omp_get_max_threads());
  const double ms = time_it(reps, [&] { return kernels::mnl_serial(design, theta, layout).loglik; });
  const double mp = time_it(reps, [&] { return kernels::mnl_parallel(design, theta, layout).loglik; });
  std::printf("mnl   n=%zu  serial %.4fs  parallel %.4fs  speedup %.2fx\n", n, ms, mp, ms / mp);
  const double xs = time_it(reps, [&] { return kernels::mixed_serial(mixed_design, mixed_theta, mixed, draws).loglik; });
  const double xp =
      time_it(reps, [&] { return kernels::mixed_parallel(mixed_design, mixed_theta, mixed, draws).loglik; });
  std::printf("mixed n=%zu draws=100  serial %.4fs  parallel %.4fs  speedup %.2fx\n", mixed_n, xs, xp, xs / xp);
  return 0;
}
