#include <catch_amalgamated.hpp>

#include <sstream>

#include "ineq/config.hpp"
#include "ineq/csv.hpp"

using namespace ineq;

namespace {

std::vector<std::vector<std::string>> read_all(const std::string& text) {
  std::istringstream in(text);
  csv_reader r(in, "test");
  r.expect_header({"a", "b"});
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string_view> f;
  while (r.next(f)) rows.emplace_back(f.begin(), f.end());
  return rows;
}

}  // namespace

TEST_CASE("csv reader basics") {
  const auto rows = read_all("\xEF\xBB\xBF" "a,b\r\n1,2\r\n\r\n\"x,y\",\"say \"\"hi\"\"\"\n3,\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"1", "2"});
  CHECK(rows[1] == std::vector<std::string>{"x,y", "say \"hi\""});
  CHECK(rows[2] == std::vector<std::string>{"3", ""});
}

TEST_CASE("csv header mismatch is reported with the header text") {
  try {
    read_all("a,c\n1,2\n");
    FAIL("expected header error");
  } catch (const validation_error& e) {
    CHECK(e.code() == errc::data_error);
    CHECK(std::string(e.what()).find("'a,c'") != std::string::npos);
  }
  CHECK_THROWS_AS(read_all(""), validation_error);
}

TEST_CASE("csv byte budget stops at a line boundary") {
  std::istringstream in("1,2\n3,4\n5,6\n");
  csv_reader r(in, "part", 8);
  std::vector<std::string_view> f;
  int rows = 0;
  while (r.next(f)) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("number parsing") {
  CHECK(parse_double("1.5") == 1.5);
  CHECK(parse_double(" +2e3 ") == 2000.0);
  CHECK(parse_double("-0.25") == -0.25);
  CHECK_FALSE(parse_double(""));
  CHECK_FALSE(parse_double("abc"));
  CHECK_FALSE(parse_double("1.5x"));
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"") == "\"q\"\"\"");
}

TEST_CASE("experiment config parsing") {
  const auto doc = nlohmann::json::parse(R"({
    "experiments": [{
      "experiment_id": "e1",
      "control_variant": "control",
      "segments": [{"segment_id": "all", "designed_fractions": {"control": 0.5, "treatment": 0.5}, "n_seg": 100}],
      "metrics": ["sessions"],
      "epsilons": [0.2, 0.5],
      "population": {"n_all": 1000, "rest_totals": [
        {"metric": "sessions", "epsilon": 0.5, "x_rest": 10, "y_rest": 5},
        {"metric": "sessions", "epsilon": 0.5, "x_rest": 20, "y_rest": 6, "segment_id": "all"}
      ]}
    }]})");
  const auto cfgs = parse_experiment_configs(doc);
  REQUIRE(cfgs.size() == 1);
  const auto& c = cfgs[0];
  CHECK(c.experiment_id == "e1");
  CHECK(c.epsilons.size() == 2);
  CHECK(c.segments[0].n_seg == 100u);
  REQUIRE(c.population);
  CHECK(c.population->find_rest("sessions", 0.5, "all")->x_rest == 20);
  CHECK(c.population->find_rest("sessions", 0.5, "other")->x_rest == 10);
  CHECK(c.population->find_rest("sessions", 0.2, "all") == nullptr);
}

TEST_CASE("experiment config rejects bad documents") {
  auto rejects = [](const char* text) {
    try {
      parse_experiment_configs(nlohmann::json::parse(text));
    } catch (const validation_error&) {
      return true;
    }
    return false;
  };
  const char* base_tail = R"("metrics": ["m"], "epsilons": [0.5])";
  CHECK(rejects(R"({})"));
  CHECK(rejects(R"({"experiments": [{"control_variant": "c"}]})"));
  CHECK(rejects((std::string(R"({"experiments": [{"experiment_id": "e", "control_variant": "c",
      "segments": [{"segment_id": "s", "designed_fractions": {"c": 0.5, "t": 0.4}}], )") +
                 base_tail + "}]}")
                    .c_str()));
  CHECK(rejects((std::string(R"({"experiments": [{"experiment_id": "e", "control_variant": "x",
      "segments": [{"segment_id": "s", "designed_fractions": {"c": 0.5, "t": 0.5}}], )") +
                 base_tail + "}]}")
                    .c_str()));
  CHECK(rejects(R"({"experiments": [{"experiment_id": "e", "control_variant": "c",
      "segments": [{"segment_id": "s", "designed_fractions": {"c": 1}}], "metrics": ["m"], "epsilons": [1.5]}]})"));
  const std::string one = R"({"experiment_id": "e", "control_variant": "c",
      "segments": [{"segment_id": "s", "designed_fractions": {"c": 1}}], "metrics": ["m"], "epsilons": [0.5]})";
  CHECK_FALSE(rejects((R"({"experiments": [)" + one + "]}").c_str()));
  CHECK(rejects((R"({"experiments": [)" + one + "," + one + "]}").c_str()));
}

TEST_CASE("config file errors") {
  CHECK_THROWS_AS(load_experiment_configs("/nonexistent/config.json"), io_error);
}
