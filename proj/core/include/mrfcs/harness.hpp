#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mrfcs/dictionary.hpp"
#include "mrfcs/phantom.hpp"
#include "mrfcs/recon.hpp"
#include "mrfcs/sampling.hpp"
#include "mrfcs/types.hpp"

namespace mrfcs {

// IR-SSFP excitation with i.i.d. Gaussian flip angles, sigma in degrees, and
// uniformly spaced repetition times (optionally jittered by U[0, jitter)).
ExcitationSequence generate_sequence(Index length, double sigma_alpha_deg, double tr_ms,
                                     std::uint64_t seed, double tr_jitter_ms = 0.0);

// 20 log10(|x| / |x - x_hat|) over masked entries; exact match returns the
// +infinity sentinel, an all-zero estimate gives 0 dB. Empty masks throw.
double ser_db(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat,
              const Eigen::Array<bool, Eigen::Dynamic, 1>& mask);
double ser_db(const CVector& x, const CVector& x_hat,
              const Eigen::Array<bool, Eigen::Dynamic, 1>& mask);
// Over all entries of the masked rows.
double ser_rows_db(const CMatrix& x, const CMatrix& x_hat,
                   const Eigen::Array<bool, Eigen::Dynamic, 1>& mask);

// a - b with the sentinel folded in: two infinities gap to zero.
double ser_gap_db(double a, double b);

Eigen::VectorXd nan_to_zero(const Eigen::VectorXd& v);

struct ExperimentConfig {
  // phantom
  std::string phantom_kind = "nested";  // nested | uniform | brainweb
  int side = 64;
  std::string brainweb_path;
  int brainweb_slice = 40;
  std::string grid_mode = "on-grid";  // verbatim | on-grid | off-grid
  double off_grid_fraction = 0.03;
  bool quadratic_phase = false;
  double corner_phase_deg = 45.0;
  // dictionary grid
  std::string grid_preset = "reference";  // reference | custom
  std::vector<double> grid_t1, grid_t2, grid_df;
  // cached dictionary artifact; replaces grid and excitation sequence and
  // restricts the sweep to the single cell it was built for
  std::string dictionary_path;
  // excitation
  double sigma_alpha_deg = 10.0;
  double tr_ms = 10.0;
  double tr_jitter_ms = 0.0;
  // sampling
  std::string sampling = "epi";  // epi | variable-density
  std::vector<int> p_values = {8};
  std::vector<Index> l_values = {200};
  // reconstruction
  std::vector<std::string> algorithms = {"mrf", "mrf-rescaled", "blip", "oracle"};
  std::string density_model = "real";  // real | complex
  std::string step_mode = "adaptive";  // adaptive | fixed-unit | fixed-nm
  int max_iters = 20;
  double kappa = 0.99;
  double stop_rel_change = 1e-8;
  std::optional<Index> wavelet_keep;
  // reproducibility and output
  std::uint64_t seed = 20260808;
  std::string output_dir = "mrfcs-out";
  bool write_maps = false;

  void validate() const;
  std::string canonical_json() const;
  std::uint64_t hash() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);
};

struct AlgorithmMetrics {
  std::string algorithm;
  double ser_x_db = 0.0;
  double ser_rho_db = 0.0;
  double ser_t1_db = 0.0;
  double ser_t2_db = 0.0;
  int iterations = 0;
  double final_consistency = 0.0;
  std::vector<double> consistency_errors;
  double runtime_s = 0.0;
};

struct CellMetrics {
  int side = 0;
  int p = 0;
  Index length = 0;
  std::uint64_t sequence_seed = 0;
  std::uint64_t shift_seed = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::vector<AlgorithmMetrics> algorithms;

  const AlgorithmMetrics* find(const std::string& algorithm) const;
};

struct MetricsRecord {
  std::vector<CellMetrics> cells;
};

// Runs the configured sweep: phantom -> sequence -> dictionary -> acquisition
// -> reconstructions -> SER metrics. Emits one CSV row per (cell, algorithm)
// into <output_dir>/results.csv plus a JSON metadata sidecar per cell; rows
// are flushed as cells finish. CSV content is a pure function of the config,
// wall-clock timings live only in the sidecars.
MetricsRecord run_experiment(const ExperimentConfig& config);

// Chord flatness of the pairwise tissue response differences as a function of
// sequence length; emits one CSV row per (pair, L). Identical-parameter pairs
// are skipped.
struct FlatnessRow {
  std::string tissue_a, tissue_b;
  Index length;
  double lambda;
  double inv_lambda_sq_over_length;
};
std::vector<FlatnessRow> flatness_report(const TissueTable& table, double sigma_alpha_deg,
                                         double tr_ms, std::uint64_t seed,
                                         const std::vector<Index>& l_values,
                                         const std::string& csv_path = "");

// Monte Carlo chord-isometry run over a synthetic alias matrix: "flat" rows
// are unit-modulus random phases, "random" rows are complex Gaussian.
McIsometryStats isometry_report(Index p, Index length, Index trials, std::uint64_t seed,
                                const std::string& matrix_kind,
                                const std::vector<double>& eps_levels,
                                const std::string& csv_path = "");

// Maps and metadata of one reconstruction, written as CSV + JSON.
void write_recon_result(const ReconResult& result, const std::string& dir,
                        const std::string& prefix);

// "start:step:stop" ranges (comma separated) or plain comma-separated values.
std::vector<double> parse_axis(const std::string& spec);

}  // namespace mrfcs
