#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrfcs/harness.hpp"

namespace {

using namespace mrfcs;

std::vector<Index> parse_lengths(const std::string& spec) {
  std::vector<Index> out;
  for (const double v : parse_axis(spec)) out.push_back(static_cast<Index>(v));
  return out;
}

std::vector<int> parse_ints(const std::string& spec) {
  std::vector<int> out;
  for (const double v : parse_axis(spec)) out.push_back(static_cast<int>(v));
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string token;
  std::stringstream ss(s);
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

void apply_output_dir_env(ExperimentConfig& config) {
  if (const char* dir = std::getenv("MRFCS_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
    config.output_dir = dir;
  }
}

int run_dict_build(const std::string& grid_preset, const std::string& t1_spec,
                   const std::string& t2_spec, const std::string& df_spec, Index length,
                   double sigma, double tr, std::uint64_t seed, const std::string& out,
                   const std::string& csv_out) {
  ParameterGrid grid;
  if (grid_preset == "reference") {
    grid = ParameterGrid::reference();
  } else {
    grid.t1 = parse_axis(t1_spec);
    grid.t2 = parse_axis(t2_spec);
    grid.df = parse_axis(df_spec);
  }
  const ExcitationSequence seq = generate_sequence(length, sigma, tr, seed);
  const BlochDictionary dict = build_dictionary(grid, seq);
  dict.save(out);
  if (!csv_out.empty()) dict.save_csv(csv_out);
  std::cout << "dictionary: " << dict.size() << " atoms x " << dict.length()
            << " readouts -> " << out << "\n";
  return 0;
}

int run_phantom(const ExperimentConfig& base, const std::string& out_dir) {
  const TissueTable table = TissueTable::mni();
  PhantomMaps maps;
  if (base.phantom_kind == "brainweb") {
    maps = load_brainweb(base.brainweb_path, base.brainweb_slice, table);
  } else {
    const ParameterGrid grid = ParameterGrid::reference();
    maps = synthetic_phantom(base.side,
                             base.phantom_kind == "uniform" ? PhantomLayout::Uniform
                                                            : PhantomLayout::Nested,
                             table,
                             base.grid_mode == "verbatim"  ? GridMode::Verbatim
                             : base.grid_mode == "on-grid" ? GridMode::OnGrid
                                                           : GridMode::OffGrid,
                             &grid, base.off_grid_fraction);
  }
  std::filesystem::create_directories(out_dir);
  write_maps_csv(maps, out_dir + "/maps.csv");
  for (const char* which : {"rho", "t1", "t2"}) {
    write_map_pgm(maps, which, out_dir + "/" + which + ".pgm");
  }
  std::cout << "phantom: " << maps.side << "x" << maps.side << ", "
            << (maps.rho.array() > 0.0).count() << " foreground voxels -> " << out_dir << "\n";
  return 0;
}

void print_record(const MetricsRecord& record) {
  for (const auto& cell : record.cells) {
    std::cout << "p=" << cell.p << " L=" << cell.length << "\n";
    for (const auto& m : cell.algorithms) {
      std::cout << "  " << m.algorithm << ": SER(x)=" << m.ser_x_db
                << " dB, SER(rho)=" << m.ser_rho_db << " dB, SER(T1)=" << m.ser_t1_db
                << " dB, SER(T2)=" << m.ser_t2_db << " dB, iters=" << m.iterations << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed-sensing toolkit for transient-response quantitative MRI"};
  app.require_subcommand(1);

  // dict build
  auto* dict_cmd = app.add_subcommand("dict", "Dictionary operations");
  dict_cmd->require_subcommand(1);
  auto* dict_build = dict_cmd->add_subcommand("build", "Simulate and cache a dictionary");
  std::string db_grid = "reference", db_t1, db_t2, db_df = "0";
  Index db_length = 200;
  double db_sigma = 10.0, db_tr = 10.0;
  std::uint64_t db_seed = 20260808;
  std::string db_out = "dictionary.mrfd", db_csv;
  dict_build->add_option("--grid", db_grid, "reference or custom");
  dict_build->add_option("--t1", db_t1, "custom T1 axis, e.g. 100:20:2000,2300:300:6000");
  dict_build->add_option("--t2", db_t2, "custom T2 axis");
  dict_build->add_option("--df", db_df, "custom off-resonance axis (Hz)");
  dict_build->add_option("--length", db_length, "sequence length L");
  dict_build->add_option("--sigma-alpha", db_sigma, "flip-angle std dev (degrees)");
  dict_build->add_option("--tr", db_tr, "repetition time (ms)");
  dict_build->add_option("--seed", db_seed, "sequence seed");
  dict_build->add_option("--out", db_out, "output file");
  dict_build->add_option("--csv", db_csv, "also write a CSV dump");

  // phantom gen | load
  auto* phantom_cmd = app.add_subcommand("phantom", "Ground-truth phantom maps");
  phantom_cmd->require_subcommand(1);
  auto* phantom_gen = phantom_cmd->add_subcommand("gen", "Synthetic phantom");
  ExperimentConfig pg;
  std::string pg_out = "phantom-out";
  phantom_gen->add_option("--side", pg.side, "image side (power of two)");
  phantom_gen->add_option("--layout", pg.phantom_kind, "nested or uniform");
  phantom_gen->add_option("--mode", pg.grid_mode, "verbatim, on-grid or off-grid");
  phantom_gen->add_option("--off-grid-frac", pg.off_grid_fraction, "off-grid perturbation");
  phantom_gen->add_option("--out", pg_out, "output directory");
  auto* phantom_load = phantom_cmd->add_subcommand("load", "BrainWeb crisp segmentation");
  ExperimentConfig pl;
  pl.phantom_kind = "brainweb";
  pl.side = 256;
  std::string pl_out = "phantom-out";
  phantom_load->add_option("--brainweb", pl.brainweb_path, "raw 181x217x181 byte volume")
      ->required();
  phantom_load->add_option("--slice", pl.brainweb_slice, "axial slice index");
  phantom_load->add_option("--out", pl_out, "output directory");

  // run | sweep
  ExperimentConfig rc;
  std::string rc_config, rc_p, rc_l, rc_algorithms;
  bool rc_quadratic = false;
  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", rc_config, "JSON config file");
    cmd->add_option("--seed", rc.seed, "master seed");
    cmd->add_option("--side", rc.side, "image side");
    cmd->add_option("--phantom", rc.phantom_kind, "nested, uniform or brainweb");
    cmd->add_option("--brainweb", rc.brainweb_path, "BrainWeb volume path");
    cmd->add_option("--grid-mode", rc.grid_mode, "verbatim, on-grid or off-grid");
    cmd->add_option("--dict", rc.dictionary_path, "cached dictionary file (fixes the sequence)");
    cmd->add_option("--p", rc_p, "undersampling factor(s), e.g. 8 or 4,8,16");
    cmd->add_option("--L", rc_l, "sequence length(s), e.g. 200 or 25,50,100:100:400");
    cmd->add_option("--algorithms", rc_algorithms, "comma-separated algorithm list");
    cmd->add_option("--density-model", rc.density_model, "real or complex");
    cmd->add_option("--sampling", rc.sampling, "epi or variable-density");
    cmd->add_option("--step-mode", rc.step_mode, "adaptive, fixed-unit or fixed-nm");
    cmd->add_option("--max-iters", rc.max_iters, "iteration cap");
    cmd->add_flag("--quadratic-phase", rc_quadratic, "apply the quadratic density phase");
    cmd->add_option("--output-dir", rc.output_dir, "output directory");
  };
  auto* run_cmd = app.add_subcommand("run", "Single end-to-end experiment");
  add_run_options(run_cmd);
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep over L and/or p");
  add_run_options(sweep_cmd);

  // flatness
  auto* flat_cmd = app.add_subcommand("flatness", "Tissue-pair chord flatness vs L");
  std::string fl_l = "100:100:1000", fl_out = "flatness.csv";
  double fl_sigma = 10.0, fl_tr = 10.0;
  std::uint64_t fl_seed = 20260808;
  flat_cmd->add_option("--L", fl_l, "sequence lengths");
  flat_cmd->add_option("--sigma-alpha", fl_sigma, "flip-angle std dev (degrees)");
  flat_cmd->add_option("--tr", fl_tr, "repetition time (ms)");
  flat_cmd->add_option("--seed", fl_seed, "sequence seed");
  flat_cmd->add_option("--out", fl_out, "output CSV");

  // isometry-mc
  auto* mc_cmd = app.add_subcommand("isometry-mc", "Monte Carlo chord isometry check");
  Index mc_p = 4, mc_len = 1000, mc_trials = 100000;
  std::string mc_kind = "flat", mc_eps = "0.25,0.5", mc_out = "isometry.csv";
  std::uint64_t mc_seed = 20260808;
  mc_cmd->add_option("--p", mc_p, "aliasing factor");
  mc_cmd->add_option("--length", mc_len, "sequence length");
  mc_cmd->add_option("--trials", mc_trials, "Monte Carlo trials");
  mc_cmd->add_option("--kind", mc_kind, "flat or random");
  mc_cmd->add_option("--eps", mc_eps, "tail thresholds");
  mc_cmd->add_option("--seed", mc_seed, "seed");
  mc_cmd->add_option("--out", mc_out, "output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dict_build->parsed()) {
      return run_dict_build(db_grid, db_t1, db_t2, db_df, db_length, db_sigma, db_tr, db_seed,
                            db_out, db_csv);
    }
    if (phantom_gen->parsed()) return run_phantom(pg, pg_out);
    if (phantom_load->parsed()) return run_phantom(pl, pl_out);
    if (run_cmd->parsed() || sweep_cmd->parsed()) {
      ExperimentConfig config = rc_config.empty() ? ExperimentConfig{}
                                                  : ExperimentConfig::from_json_file(rc_config);
      // Flag overrides sit on top of the config file.
      CLI::App* active = run_cmd->parsed() ? run_cmd : sweep_cmd;
      if (active->count("--seed")) config.seed = rc.seed;
      if (active->count("--side")) config.side = rc.side;
      if (active->count("--phantom")) config.phantom_kind = rc.phantom_kind;
      if (active->count("--brainweb")) config.brainweb_path = rc.brainweb_path;
      if (active->count("--grid-mode")) config.grid_mode = rc.grid_mode;
      if (active->count("--dict")) config.dictionary_path = rc.dictionary_path;
      if (active->count("--density-model")) config.density_model = rc.density_model;
      if (active->count("--sampling")) config.sampling = rc.sampling;
      if (active->count("--step-mode")) config.step_mode = rc.step_mode;
      if (active->count("--max-iters")) config.max_iters = rc.max_iters;
      if (active->count("--output-dir")) config.output_dir = rc.output_dir;
      if (active->count("--quadratic-phase")) config.quadratic_phase = rc_quadratic;
      if (active->count("--p")) config.p_values = parse_ints(rc_p);
      if (active->count("--L")) config.l_values = parse_lengths(rc_l);
      if (active->count("--algorithms")) config.algorithms = split_csv(rc_algorithms);
      apply_output_dir_env(config);
      if (run_cmd->parsed()) {
        if (config.p_values.size() != 1 || config.l_values.size() != 1) {
          throw ConfigError("run: exactly one p and one L (use sweep for lists)");
        }
        config.write_maps = true;
      }
      const MetricsRecord record = run_experiment(config);
      print_record(record);
      std::cout << "results -> " << config.output_dir << "/results.csv\n";
      return 0;
    }
    if (flat_cmd->parsed()) {
      const auto rows = flatness_report(TissueTable::mni(), fl_sigma, fl_tr, fl_seed,
                                        parse_lengths(fl_l), fl_out);
      std::cout << rows.size() << " chord rows -> " << fl_out << "\n";
      return 0;
    }
    if (mc_cmd->parsed()) {
      std::vector<double> eps;
      for (const double e : parse_axis(mc_eps)) eps.push_back(e);
      const McIsometryStats stats = isometry_report(mc_p, mc_len, mc_trials, mc_seed, mc_kind,
                                                    eps, mc_out);
      std::cout << "mean ratio " << stats.mean << " over " << mc_trials << " trials";
      for (const auto& t : stats.tails) {
        std::cout << "; P(|r-1|>" << t.eps << ")=" << t.frequency << " (bound " << t.bound
                  << ")";
      }
      std::cout << " -> " << mc_out << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
