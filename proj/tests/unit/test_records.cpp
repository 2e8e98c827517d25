#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "dynwalk/errors.hpp"
#include "dynwalk/experiment.hpp"

using namespace dynwalk;

TEST_CASE("key=value grammar") {
  std::istringstream in("# comment\n  n = 8 \n\nexperiment=cycles\n");
  const KeyValues kv = parse_key_values(in);
  CHECK(kv.at("n") == "8");
  CHECK(kv.at("experiment") == "cycles");
  std::istringstream dup("n = 8\nn = 9\n");
  try {
    parse_key_values(dup, "cfg");
    FAIL("duplicate accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("cfg:2") != std::string::npos);
  }
  std::istringstream bad("just words\n");
  CHECK_THROWS_AS(parse_key_values(bad), Error);
}

TEST_CASE("experiment config split") {
  const ExperimentConfig c =
      experiment_config_from_kv({{"experiment", "cycles"}, {"n", "100"}, {"graphs", "3"}, {"jobs", "2"}});
  CHECK(c.params.n == 100);
  CHECK(c.overrides.at("graphs") == "3");
  CHECK(c.jobs == 2);
  CHECK_THROWS_AS(experiment_config_from_kv({{"experiment", "nope"}}), Error);
  CHECK_THROWS_AS(experiment_config_from_kv({{"experiment", "cycles"}, {"jobs", "0"}}), Error);
}

TEST_CASE("result record round trip") {
  ResultRecord r;
  r.timestamp = "2020-01-01T00:00:00Z";
  r.git_describe = "abc";
  r.config = {{"n", "8"}};
  r.params = Json{{"n", 8}};
  r.derived_constants = nullptr;
  r.metrics = Json{{"x", 1.5}, {"list", Json::array({1, 2})}};
  r.verdicts = {{"a", "pass"}, {"b", "warn"}};
  const ResultRecord back = ResultRecord::from_json(Json::parse(r.to_json().dump()));
  CHECK(back == r);
  CHECK(verdict_exit_code(r) == 0);
  r.verdicts["c"] = "fail";
  CHECK(verdict_exit_code(r) == kExitFailVerdict);
  CHECK_THROWS_AS(ResultRecord::from_json(Json{{"schema_version", 1}}), Error);
}

TEST_CASE("timestamp honours SOURCE_DATE_EPOCH") {
  setenv("SOURCE_DATE_EPOCH", "86400", 1);
  CHECK(result_timestamp() == "1970-01-02T00:00:00Z");
  unsetenv("SOURCE_DATE_EPOCH");
}

TEST_CASE("exit codes by error kind") {
  CHECK(exit_code_for(ErrorKind::InvalidConfig) == 1);
  CHECK(exit_code_for(ErrorKind::ParseError) == 1);
  CHECK(exit_code_for(ErrorKind::InfeasibleDegree) == 2);
  CHECK(exit_code_for(ErrorKind::BudgetExceeded) == 3);
}

TEST_CASE("unknown experiment knobs are rejected") {
  ExperimentConfig c;
  c.experiment = "cycles";
  c.params.n = 100;
  c.overrides = {{"graphs", "2"}, {"typo", "1"}};
  CHECK_THROWS_AS(execute_experiment(c), Error);
}

TEST_CASE("same config twice gives identical output") {
  setenv("SOURCE_DATE_EPOCH", "0", 1);
  ExperimentConfig c;
  c.experiment = "cycles";
  c.params.n = 200;
  c.params.seed = 4;
  c.overrides = {{"graphs", "5"}};
  const ExperimentOutput a = execute_experiment(c);
  const ExperimentOutput b = execute_experiment(c);
  CHECK(a.detail_csv == b.detail_csv);
  CHECK(a.summary.to_json().dump() == b.summary.to_json().dump());
  unsetenv("SOURCE_DATE_EPOCH");
}

TEST_CASE("cut fraction experiment runs on a tiny grid") {
  ExperimentConfig c;
  c.experiment = "cut_fraction";
  c.params.n = 20;
  c.params.q = 1;
  c.overrides = {{"p_values", "0.2"}, {"q_values", "1"}, {"mu_values", "1"}, {"replicas", "2"}, {"horizon", "3"}};
  const ExperimentOutput out = execute_experiment(c);
  REQUIRE(out.summary.verdicts.size() == 1);
  CHECK(out.detail_csv.rfind("p,q,mu", 0) == 0);
}
