#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mrfcs/harness.hpp"

using namespace mrfcs;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig c;
  c.side = 8;
  c.phantom_kind = "nested";
  c.grid_mode = "on-grid";
  c.grid_preset = "custom";
  c.grid_t1 = {300.0, 600.0, 900.0, 1200.0, 1500.0};
  c.grid_t2 = {40.0, 80.0};
  c.grid_df = {0.0};
  c.p_values = {2};
  c.l_values = {12};
  c.max_iters = 5;
  c.seed = 99;
  c.output_dir = out_dir;
  return c;
}

}  // namespace

TEST_CASE("sequences regenerate bitwise from their seed") {
  const ExcitationSequence a = generate_sequence(64, 10.0, 10.0, 1234);
  const ExcitationSequence b = generate_sequence(64, 10.0, 10.0, 1234);
  const ExcitationSequence c = generate_sequence(64, 10.0, 10.0, 1235);
  CHECK((a.flip_angles == b.flip_angles).all());
  CHECK((a.repetition_times == b.repetition_times).all());
  CHECK(!(a.flip_angles == c.flip_angles).all());
  CHECK((a.repetition_times == 10.0).all());
}

TEST_CASE("flip angle spread matches the requested deviation") {
  const ExcitationSequence seq = generate_sequence(1000, 10.0, 10.0, 77);
  const double mean = seq.flip_angles.mean();
  const double std_rad = std::sqrt((seq.flip_angles - mean).square().mean());
  const double std_deg = std_rad * 180.0 / std::numbers::pi;
  CHECK(std_deg > 9.0);
  CHECK(std_deg < 11.0);
}

TEST_CASE("a vanishing deviation gives vanishing flip angles") {
  const ExcitationSequence seq = generate_sequence(32, 1e-30, 10.0, 5);
  CHECK((seq.flip_angles.abs() < 1e-20).all());
}

TEST_CASE("jittered repetition times stay within the jitter window") {
  const ExcitationSequence seq = generate_sequence(100, 10.0, 10.0, 6, 2.0);
  CHECK((seq.repetition_times >= 10.0).all());
  CHECK((seq.repetition_times < 12.0).all());
}

TEST_CASE("signal-to-error ratio formula") {
  Eigen::VectorXd x(4), zero(4);
  x << 1.0, -2.0, 3.0, 0.5;
  zero.setZero();
  const Eigen::Array<bool, Eigen::Dynamic, 1> all =
      Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(4, true);

  CHECK(std::isinf(ser_db(x, x, all)));
  CHECK(ser_db(x, zero, all) == doctest::Approx(0.0));

  // an error of a tenth of the signal norm is exactly 20 dB
  Eigen::VectorXd hat = x;
  hat[0] += 0.1 * x.norm();
  CHECK(ser_db(x, hat, all) == doctest::Approx(20.0).epsilon(1e-12));

  Eigen::Array<bool, Eigen::Dynamic, 1> none =
      Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(4, false);
  CHECK_THROWS_AS(ser_db(x, hat, none), ConfigError);

  // masked entries do not contribute
  Eigen::VectorXd corrupted = x;
  corrupted[3] = 1e6;
  Eigen::Array<bool, Eigen::Dynamic, 1> mask = all;
  mask[3] = false;
  CHECK(std::isinf(ser_db(x, corrupted, mask)));
}

TEST_CASE("gap comparisons treat two exact recoveries as equal") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(ser_gap_db(inf, inf) == 0.0);
  CHECK(ser_gap_db(inf, 10.0) == inf);
  CHECK(ser_gap_db(10.0, 12.0) == doctest::Approx(-2.0));
}

TEST_CASE("axis specs expand ranges and lists") {
  CHECK(parse_axis("100:20:160") == std::vector<double>{100.0, 120.0, 140.0, 160.0});
  CHECK(parse_axis("1,2,5") == std::vector<double>{1.0, 2.0, 5.0});
  CHECK(parse_axis("10:5:20,50") == std::vector<double>{10.0, 15.0, 20.0, 50.0});
  CHECK_THROWS_AS(parse_axis(""), ConfigError);
  CHECK_THROWS_AS(parse_axis("10:0:20"), ConfigError);
}

TEST_CASE("configs round-trip through JSON and reject unknown keys") {
  ExperimentConfig c = tiny_config("out");
  c.algorithms = {"blip", "oracle"};
  const std::string text = c.canonical_json();
  const ExperimentConfig back = ExperimentConfig::from_json(text);
  CHECK(back.canonical_json() == text);
  CHECK(back.hash() == c.hash());

  ExperimentConfig other = c;
  other.seed += 1;
  CHECK(other.hash() != c.hash());

  CHECK_THROWS_AS(ExperimentConfig::from_json("{\"sides\": 8}"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json("not json"), ConfigError);

  ExperimentConfig bad = c;
  bad.p_values = {3};  // does not divide 8
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("identical configs produce byte-identical result tables") {
  const ExperimentConfig c1 = tiny_config("test_out_a");
  const ExperimentConfig c2 = tiny_config("test_out_b");
  run_experiment(c1);
  run_experiment(c2);
  const std::string a = slurp("test_out_a/results.csv");
  const std::string b = slurp("test_out_b/results.csv");
  CHECK(a == b);
  CHECK(a.find("ser_x_db") != std::string::npos);
  std::filesystem::remove_all("test_out_a");
  std::filesystem::remove_all("test_out_b");
}

TEST_CASE("a degenerate single-pulse full-aliasing cell still completes") {
  ExperimentConfig c = tiny_config("test_out_degenerate");
  c.p_values = {8};  // one k-space row per readout
  c.l_values = {1};
  c.algorithms = {"mrf-rescaled", "blip", "oracle"};
  const MetricsRecord record = run_experiment(c);
  REQUIRE(record.cells.size() == 1);
  const AlgorithmMetrics* blip = record.cells[0].find("blip");
  REQUIRE(blip != nullptr);
  CHECK(std::isfinite(blip->ser_x_db));
  std::filesystem::remove_all("test_out_degenerate");
}

TEST_CASE("a cached dictionary drives the experiment and fixes the sequence") {
  ParameterGrid g;
  g.t1 = {300.0, 600.0, 900.0, 1200.0, 1500.0};
  g.t2 = {40.0, 80.0};
  g.df = {0.0};
  const ExcitationSequence seq = generate_sequence(12, 10.0, 10.0, 404);
  build_dictionary(g, seq).save("test_cached.mrfd");

  ExperimentConfig c = tiny_config("test_out_cached");
  c.dictionary_path = "test_cached.mrfd";
  c.algorithms = {"blip", "oracle"};
  const MetricsRecord record = run_experiment(c);
  REQUIRE(record.cells.size() == 1);
  CHECK(record.cells[0].sequence_seed == sequence_hash(seq));

  ExperimentConfig again = c;
  again.output_dir = "test_out_cached2";
  run_experiment(again);
  CHECK(slurp("test_out_cached/results.csv") == slurp("test_out_cached2/results.csv"));

  ExperimentConfig wrong = c;
  wrong.l_values = {16};
  CHECK_THROWS_AS(run_experiment(wrong), ConfigError);
  ExperimentConfig two = c;
  two.l_values = {12, 16};
  CHECK_THROWS_AS(two.validate(), ConfigError);

  std::filesystem::remove("test_cached.mrfd");
  std::filesystem::remove_all("test_out_cached");
  std::filesystem::remove_all("test_out_cached2");
}

TEST_CASE("the oracle is never beaten by the iterated reconstruction") {
  ExperimentConfig c = tiny_config("test_out_oracle");
  c.grid_mode = "off-grid";
  c.l_values = {16};
  c.algorithms = {"blip", "oracle"};
  const MetricsRecord record = run_experiment(c);
  const auto& cell = record.cells[0];
  CHECK(ser_gap_db(cell.find("oracle")->ser_x_db, cell.find("blip")->ser_x_db) >= -1e-9);
  std::filesystem::remove_all("test_out_oracle");
}

TEST_CASE("flatness rows include the analytic identity for basis chords") {
  // a one-hot chord has lambda = 1, so lambda^-2 / L = 1 / L
  CVector basis = CVector::Zero(25);
  basis[3] = Complex{2.0, 0.0};
  const double lam = chord_flatness(basis);
  CHECK(1.0 / (lam * lam * 25.0) == doctest::Approx(1.0 / 25.0));
}

TEST_CASE("flatness report emits one row per distinct tissue pair and length") {
  const auto rows = flatness_report(TissueTable::mni(), 10.0, 10.0, 3, {40, 80},
                                    "test_flatness.csv");
  CHECK(rows.size() == 20);
  const std::string csv = slurp("test_flatness.csv");
  CHECK(csv.find("tissue_a,tissue_b,L,lambda") != std::string::npos);
  std::filesystem::remove("test_flatness.csv");
}

TEST_CASE("isometry report rejects unknown matrix kinds and writes stats") {
  CHECK_THROWS_AS(isometry_report(4, 16, 10, 1, "diag", {0.5}), ConfigError);
  const McIsometryStats stats = isometry_report(4, 32, 2000, 1, "flat", {0.5},
                                                "test_isometry.csv");
  CHECK(std::abs(stats.mean - 1.0) < 0.05);
  const std::string csv = slurp("test_isometry.csv");
  CHECK(csv.find("tail_frequency") != std::string::npos);
  std::filesystem::remove("test_isometry.csv");
}

TEST_CASE("experiment outputs include per-cell metadata and optional maps") {
  ExperimentConfig c = tiny_config("test_out_maps");
  c.write_maps = true;
  c.algorithms = {"blip"};
  run_experiment(c);
  CHECK(std::filesystem::exists("test_out_maps/results.csv"));
  CHECK(std::filesystem::exists("test_out_maps/cell_p2_L12.json"));
  CHECK(std::filesystem::exists("test_out_maps/blip_p2_L12_maps.csv"));
  CHECK(std::filesystem::exists("test_out_maps/blip_p2_L12_meta.json"));
  const std::string meta = slurp("test_out_maps/cell_p2_L12.json");
  CHECK(meta.find("config_hash") != std::string::npos);
  CHECK(meta.find("runtime_s") != std::string::npos);
  std::filesystem::remove_all("test_out_maps");
}
