#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>
#include <map>
#include <sstream>

#include "choiceforge/errors.hpp"
#include "choiceforge/estimation.hpp"
#include "choiceforge/io.hpp"
#include "choiceforge/synth.hpp"

using namespace choiceforge;

namespace {

std::string to_csv(const ChoiceDataset& d) {
  std::ostringstream out;
  io::write_dataset_csv(out, d);
  return out.str();
}

ChoiceDataset from_csv(const std::string& text) {
  std::istringstream in(text);
  return io::read_dataset_csv(in);
}

}  // namespace

TEST(GenerateScenarios, TwoLevelsAreBalanced) {
  const auto spec = virtual_traveling_default();
  const auto scenarios = generate_scenarios(spec, 100, 2);
  ASSERT_EQ(scenarios.size(), 100u);
  for (std::size_t k = 0; k < spec.schema.size(); ++k) {
    for (std::size_t j = 0; j < spec.n_alternatives; ++j) {
      std::map<double, int> counts;
      for (const auto& s : scenarios) ++counts[s.alternatives[j].values[k]];
      ASSERT_EQ(counts.size(), 2u);
      for (const auto& [level, n] : counts) EXPECT_TRUE(n >= 49 && n <= 51) << spec.schema.names[k];
    }
  }
}

TEST(GenerateScenarios, OddSizesStayWithinOne) {
  const auto spec = virtual_traveling_default();
  const auto scenarios = generate_scenarios(spec, 333, 5);
  for (std::size_t k = 0; k < spec.schema.size(); ++k) {
    std::map<double, int> counts;
    for (const auto& s : scenarios) {
      for (const auto& a : s.alternatives) ++counts[a.values[k]];
    }
    int lo = 1 << 30;
    int hi = 0;
    for (const auto& [level, n] : counts) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    EXPECT_LE(hi - lo, 1);
  }
}

TEST(GenerateScenarios, LevelsOnBoundsAndNoAllTopScenario) {
  const auto spec = virtual_traveling_default();
  for (const auto& s : generate_scenarios(spec, 500, 2)) {
    bool all_top = true;
    for (const auto& a : s.alternatives) {
      for (std::size_t k = 0; k < spec.schema.size(); ++k) {
        EXPECT_TRUE(a.values[k] == spec.bounds[k].lower || a.values[k] == spec.bounds[k].upper);
        if (k != spec.schema.price_index && a.values[k] != spec.bounds[k].upper) all_top = false;
      }
    }
    EXPECT_FALSE(all_top);
  }
}

TEST(GenerateScenarios, RejectsDegenerateRequests) {
  const auto spec = virtual_traveling_default();
  EXPECT_THROW(generate_scenarios(spec, 100, 1), InputError);
  EXPECT_THROW(generate_scenarios(spec, 0, 5), InputError);
  EXPECT_THROW(recovery_report(spec, Estimator::mnl, 0), InputError);
  EXPECT_THROW(named_spec("no-such-spec"), InputError);
}

TEST(GenerateDataset, DeterministicAndThreadIndependent) {
  auto spec = named_spec("virtual-traveling-mixed");
  spec.seed = 77;
  const auto scenarios = generate_scenarios(spec, 3000, 5);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const std::string a = to_csv(generate_dataset(spec, scenarios));
  omp_set_num_threads(4);
  const std::string b = to_csv(generate_dataset(spec, scenarios));
  omp_set_num_threads(saved);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, to_csv(generate_dataset(spec, generate_scenarios(spec, 3000, 5))));
}

TEST(GenerateDataset, AlwaysIdentifiable) {
  for (const auto& name : named_spec_list()) {
    const auto spec = named_spec(name);
    const auto data = generate_dataset(spec, generate_scenarios(spec, 200, spec.levels_per_attribute));
    EXPECT_NO_THROW(check_identification(data)) << name;
  }
}

TEST(GenerateDataset, HugePriceAversionPicksOutsideOption) {
  auto spec = virtual_traveling_default();
  spec.class_params[0].betas[spec.schema.price_index] = -100.0;
  const auto data = generate_dataset(spec, generate_scenarios(spec, 5000, 5));
  std::size_t outside = 0;
  for (const auto& obs : data.observations) outside += obs.chosen_index == obs.scenario.outside_index();
  EXPECT_GT(static_cast<double>(outside) / data.size(), 0.999);
}

TEST(GenerateDataset, FrequenciesMatchModelProbabilities) {
  auto spec = virtual_traveling_default();
  spec.seed = 8;
  const auto data = generate_dataset(spec, generate_scenarios(spec, 20000, 5));
  const std::size_t effective = spec.n_alternatives + 1;
  std::vector<double> freq(effective, 0.0);
  std::vector<double> prob(effective, 0.0);
  for (const auto& obs : data.observations) {
    freq[obs.chosen_index] += 1.0;
    const auto p = choice_probabilities(spec.class_params[0], obs.scenario);
    for (std::size_t j = 0; j < effective; ++j) prob[j] += p[j];
  }
  const double n = static_cast<double>(data.size());
  for (std::size_t j = 0; j < effective; ++j) EXPECT_NEAR(freq[j] / n, prob[j] / n, 4.0 / std::sqrt(n));
}

TEST(GenerateDataset, ChainSpecCarriesConstructs) {
  const auto spec = named_spec("virtual-traveling-chain");
  const auto data = generate_dataset(spec, generate_scenarios(spec, 50, 5));
  EXPECT_EQ(data.construct_names, (std::vector<std::string>{"authenticity", "enjoyment", "involvement"}));
  for (const auto& obs : data.observations) {
    for (const auto& a : obs.scenario.alternatives) EXPECT_EQ(a.constructs.size(), 3u);
  }
}

TEST(RecoveryReport, MnlSpecPasses) {
  const auto r = recovery_report(virtual_traveling_default(), Estimator::mnl, 5000);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.coordinates.size(), 5u);
}

TEST(RecoveryReport, MisspecifiedModelHasLowerLikelihood) {
  const auto spec = named_spec("virtual-traveling-two-class");
  RecoveryOptions one;
  one.n_classes = 1;
  const auto mis = recovery_report(spec, Estimator::latent_class, 4000, one);
  const auto right = recovery_report(spec, Estimator::latent_class, 4000);
  EXPECT_FALSE(mis.comparable);
  EXPECT_LT(mis.log_likelihood, right.log_likelihood);
}

TEST(DatasetCsv, RoundTripsExactly) {
  for (const auto& name : named_spec_list()) {
    const auto spec = named_spec(name);
    const auto data = generate_dataset(spec, generate_scenarios(spec, 100, spec.levels_per_attribute));
    const std::string text = to_csv(data);
    const auto back = from_csv(text);
    EXPECT_EQ(back.schema, data.schema);
    EXPECT_EQ(back.construct_names, data.construct_names);
    ASSERT_EQ(back.size(), data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      EXPECT_EQ(back.observations[i].chosen_index, data.observations[i].chosen_index);
      ASSERT_EQ(back.observations[i].scenario.alternatives.size(), data.observations[i].scenario.alternatives.size());
      for (std::size_t j = 0; j < data.observations[i].scenario.alternatives.size(); ++j) {
        EXPECT_EQ(back.observations[i].scenario.alternatives[j].values,
                  data.observations[i].scenario.alternatives[j].values);
        EXPECT_EQ(back.observations[i].scenario.alternatives[j].constructs,
                  data.observations[i].scenario.alternatives[j].constructs);
      }
    }
    EXPECT_EQ(to_csv(back), text);
  }
}

TEST(DatasetCsv, ErrorsNameRowAndColumn) {
  const std::string header = "obs_id,alt_id,chosen,x,price\n";
  const auto fails_at = [&](const std::string& body, std::size_t row, const std::string& column) {
    try {
      from_csv(header + body);
      ADD_FAILURE() << "accepted: " << body;
    } catch (const io::CsvError& e) {
      EXPECT_EQ(e.row(), row) << e.what();
      EXPECT_EQ(e.column(), column) << e.what();
    }
  };
  fails_at("1,1,1,abc,2\n1,2,0,1,2\n", 2, "x");
  fails_at("1,1,1,1,2\n1,2,0,1,-2\n", 3, "price");
  fails_at("1,1,1,1,2\n1,2,1,1,2\n", 2, "chosen");
  fails_at("1,1,0,1,2\n1,2,0,1,2\n", 2, "chosen");
  fails_at("1,1,1,1,2\n1,1,0,1,2\n", 3, "alt_id");
  fails_at("1,1,1,1,2\n1,2,0,1\n", 3, "");
  fails_at("1,1,2,1,2\n", 2, "chosen");
  fails_at("2,1,1,1,2\n2,2,0,1,2\n1,1,1,1,2\n", 4, "obs_id");
  EXPECT_THROW(from_csv("obs_id,alt_id,chosen,x,cost\n1,1,1,1,2\n1,2,0,1,2\n"), io::CsvError);
  EXPECT_THROW(from_csv(""), io::CsvError);
}

TEST(DatasetCsv, OutsideOptionRowsUseAltZero) {
  const auto d = from_csv("obs_id,alt_id,chosen,x,price\n1,0,1,0,0\n1,1,0,0.5,2\n2,0,0,0,0\n2,1,1,1.5,3\n");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_TRUE(d.observations[0].scenario.includes_outside_option);
  EXPECT_EQ(d.observations[0].chosen_index, 1u);
  EXPECT_EQ(d.observations[1].chosen_index, 0u);
}

TEST(NumberFormat, ExactAndSignificant) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.123, -2.5}) EXPECT_EQ(io::parse_double(io::format_exact(v)), v);
  EXPECT_EQ(io::format_significant(1.0 / 3.0, 9), "0.333333333");
  EXPECT_EQ(io::format_significant(2.0, 9), "2");
}
