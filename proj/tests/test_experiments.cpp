#include <cmath>
#include <string>

#include "doctest.h"
#include "forrlab/experiments.hpp"
#include "forrlab/stochastic.hpp"
#include "forrlab/wht.hpp"

using namespace forrlab;

namespace {

// Small enough to run in seconds; exercises every section of the suite.
ExperimentConfig tiny_suite_config() {
  ExperimentConfig c;
  c.experiment = "suite";
  c.N = 1 << 10;
  c.k = 2;
  c.epsilon = 0.01;
  c.trials = 24;
  c.seed = 7;
  c.verifier_trials = 400;
  c.dynkin_N = 16;
  c.tau_N = 64;
  c.tau_trials = 16;
  c.advantage_trials = 300;
  c.advantage_random_k1 = 2;
  c.advantage_random_k2 = 1;
  c.identity_trials = 200;
  return c;
}

}  // namespace

TEST_CASE("config json round trip and overrides") {
  ExperimentConfig c;
  c.experiment = "concentration";
  c.N = 1 << 12;
  c.k = 3;
  c.epsilon = 0.02;
  c.seed = 99;
  c.thr_rounding = 0.07;
  const auto j = c.to_json();
  const auto back = ExperimentConfig::from_json(j);
  CHECK(back.experiment == c.experiment);
  CHECK(back.N == c.N);
  CHECK(back.k == c.k);
  CHECK(back.epsilon == c.epsilon);
  CHECK(back.seed == c.seed);
  CHECK(back.thr_rounding == c.thr_rounding);
}

TEST_CASE("config accepts the paper epsilon keyword") {
  const auto c = ExperimentConfig::from_json(
      {{"experiment", "tau-tail"}, {"N", 1024}, {"epsilon", "paper"}});
  CHECK(c.epsilon_paper_default);
  CHECK(c.resolved_epsilon() == doctest::Approx(0.005152482288889155).epsilon(1e-12));
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  c.N = 24;  // not twice a power of two
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.N = 16;
  c.format = "xml";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.format = "csv";
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("defaults resolve per experiment") {
  ExperimentConfig c;
  c.experiment = "tau-tail";
  CHECK(c.resolved_N() == 1024);
  CHECK(c.resolved_epsilon() == doctest::Approx(default_epsilon(1024, 1)));
  c.experiment = "concentration";
  CHECK(c.resolved_N() == (std::size_t{1} << 20));
  CHECK(c.resolved_epsilon() == 0.01);
  CHECK(c.resolved_delta() == doctest::Approx(0.01 / 64.0));
  CHECK(c.endpoint_sampling());
  c.N = 256;
  CHECK_FALSE(c.endpoint_sampling());
  c.sampler = "endpoint";
  CHECK(c.endpoint_sampling());
}

TEST_CASE("suite output is deterministic across runs and worker counts") {
  auto c = tiny_suite_config();
  c.workers = 1;
  const std::string first = run_suite(c).to_csv();
  const std::string second = run_suite(c).to_csv();
  CHECK(first == second);

  auto c4 = tiny_suite_config();
  c4.workers = 3;
  const std::string third = run_suite(c4).to_csv();
  CHECK(first == third);
}

TEST_CASE("csv rendering uses full precision and recomputable verdicts") {
  auto c = tiny_suite_config();
  ResultTable t;
  t.provenance = {{"config", c.to_json()}};
  t.rows.push_back(make_row("metric_a", 1.0 / 3.0, 0.001, 0.9, "le"));
  t.rows.push_back(make_row("metric_b", 0.95, 0.001, 0.9, "ge"));
  const std::string csv = t.to_csv();
  CHECK(csv.find("0.33333333333333331") != std::string::npos);
  CHECK(csv.find("metric_a,") != std::string::npos);
  CHECK(csv.find(",pass\n") != std::string::npos);

  // Verdicts recompute from the emitted numbers alone.
  for (const auto& row : t.rows) {
    const bool expected = row.comparison == "le" ? row.estimate <= row.threshold
                                                 : row.estimate >= row.threshold;
    CHECK(row.pass == expected);
  }

  const std::string js = t.to_json_string();
  CHECK(js.find("\"metric\": \"metric_a\"") != std::string::npos);
}

TEST_CASE("an unnormalized transform trips the sanity rows") {
  const std::vector<std::size_t> sizes = {8, 64};
  const TransformFn good = [](std::span<double> v) { fwht(v); };
  const TransformFn broken = [](std::span<double> v) { fwht_unnormalized(v); };
  CHECK(parseval_max_rel_error(good, sizes, 3, 5) <= 1e-12);
  CHECK(parseval_max_rel_error(broken, sizes, 3, 5) > 1.0);
  CHECK(transform_vs_naive_max_abs_error(good, sizes, 3, 5) <= 1e-10);
  CHECK(transform_vs_naive_max_abs_error(broken, sizes, 3, 5) > 1.0);
}

TEST_CASE("tau tail stress and monotonicity in the horizon") {
  ExperimentConfig stress;
  stress.experiment = "tau-tail";
  stress.N = 16;
  stress.epsilon = 1.0;
  stress.delta = 1.0 / 64.0;
  stress.trials = 60;
  stress.seed = 11;
  const auto table = run_tau_tail(stress);
  REQUIRE(table.rows[0].metric == "tau_early_stop_frequency");
  CHECK(table.rows[0].estimate > 0.9);

  // Same delta and seed, shorter horizon: the exit indicator can only fall.
  ExperimentConfig shorter = stress;
  shorter.epsilon = 0.25;
  const auto table2 = run_tau_tail(shorter);
  CHECK(table2.rows[0].estimate <= table.rows[0].estimate);
}

TEST_CASE("concentration runner emits the expected rows") {
  ExperimentConfig c;
  c.experiment = "concentration";
  c.N = 1 << 8;
  c.k = 2;
  c.epsilon = 0.01;
  c.trials = 30;
  c.seed = 13;
  c.sampler = "endpoint";
  const auto table = run_concentration(c);
  REQUIRE(table.rows.size() == 7);
  CHECK(table.rows[0].metric == "phi_d1_ge_3eps4");
  CHECK(table.rows[2].metric == "phi_uniform_le_eps4");
  CHECK(table.rows[3].metric == "fk_correct_even");
  CHECK(table.rows[5].metric == "fk_correct_odd");
  for (const auto& row : table.rows) {
    CHECK(row.estimate >= 0.0);
    CHECK(row.estimate <= 1.0);
  }
}

TEST_CASE("rounding runner reports a frequency row") {
  ExperimentConfig c;
  c.experiment = "rounding";
  c.N = 1 << 8;
  c.epsilon = 0.05;
  c.trials = 40;
  c.seed = 17;
  c.sampler = "endpoint";
  const auto table = run_rounding(c);
  REQUIRE(table.rows[0].metric == "rounding_violation_frequency");
  // At N=256 the rounding noise SD is ~1/16 = 0.0625 against a threshold of
  // eps/4 = 0.0125, so violations are common; the row reports honestly.
  CHECK(table.rows[0].estimate >= 0.0);
  CHECK(table.rows[0].std_error >= 0.0);
}

TEST_CASE("experiment dispatch rejects unknown names") {
  ExperimentConfig c;
  c.experiment = "nope";
  CHECK_THROWS_AS(run_experiment(c), std::invalid_argument);
}
