#include "mrfcs/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mrfcs/bloch.hpp"
#include "mrfcs/rng.hpp"

namespace mrfcs {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ExcitationSequence generate_sequence(Index length, double sigma_alpha_deg, double tr_ms,
                                     std::uint64_t seed, double tr_jitter_ms) {
  if (length < 1) throw ConfigError("generate_sequence: length must be at least 1");
  if (!(sigma_alpha_deg > 0.0)) throw ConfigError("generate_sequence: sigma must be positive");
  if (!(tr_ms > 0.0)) throw ConfigError("generate_sequence: TR must be positive");
  if (tr_jitter_ms < 0.0) throw ConfigError("generate_sequence: negative TR jitter");
  Rng rng(seed);
  ExcitationSequence seq;
  seq.flip_angles.resize(length);
  seq.repetition_times.resize(length);
  for (Index l = 0; l < length; ++l) {
    seq.flip_angles[l] = deg2rad(sigma_alpha_deg * rng.gaussian());
    seq.repetition_times[l] = tr_ms;
  }
  if (tr_jitter_ms > 0.0) {
    for (Index l = 0; l < length; ++l) {
      seq.repetition_times[l] += tr_jitter_ms * rng.uniform01();
    }
  }
  return seq;
}

namespace {

double ser_from_norms(double ref2, double err2) {
  if (err2 == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ref2 / err2);
}

}  // namespace

double ser_db(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat,
              const Eigen::Array<bool, Eigen::Dynamic, 1>& mask) {
  if (x.size() != x_hat.size() || x.size() != mask.size()) {
    throw ConfigError("ser_db: shape mismatch");
  }
  double ref2 = 0.0, err2 = 0.0;
  bool any = false;
  for (Index i = 0; i < x.size(); ++i) {
    if (!mask[i]) continue;
    any = true;
    ref2 += x[i] * x[i];
    const double d = x[i] - x_hat[i];
    err2 += d * d;
  }
  if (!any) throw ConfigError("ser_db: empty mask");
  return ser_from_norms(ref2, err2);
}

double ser_db(const CVector& x, const CVector& x_hat,
              const Eigen::Array<bool, Eigen::Dynamic, 1>& mask) {
  if (x.size() != x_hat.size() || x.size() != mask.size()) {
    throw ConfigError("ser_db: shape mismatch");
  }
  double ref2 = 0.0, err2 = 0.0;
  bool any = false;
  for (Index i = 0; i < x.size(); ++i) {
    if (!mask[i]) continue;
    any = true;
    ref2 += std::norm(x[i]);
    err2 += std::norm(x[i] - x_hat[i]);
  }
  if (!any) throw ConfigError("ser_db: empty mask");
  return ser_from_norms(ref2, err2);
}

double ser_rows_db(const CMatrix& x, const CMatrix& x_hat,
                   const Eigen::Array<bool, Eigen::Dynamic, 1>& mask) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols() || x.rows() != mask.size()) {
    throw ConfigError("ser_rows_db: shape mismatch");
  }
  double ref2 = 0.0, err2 = 0.0;
  bool any = false;
  for (Index i = 0; i < x.rows(); ++i) {
    if (!mask[i]) continue;
    any = true;
    ref2 += x.row(i).squaredNorm();
    err2 += (x.row(i) - x_hat.row(i)).squaredNorm();
  }
  if (!any) throw ConfigError("ser_rows_db: empty mask");
  return ser_from_norms(ref2, err2);
}

double ser_gap_db(double a, double b) {
  if (std::isinf(a) && std::isinf(b) && a > 0 && b > 0) return 0.0;
  return a - b;
}

Eigen::VectorXd nan_to_zero(const Eigen::VectorXd& v) {
  Eigen::VectorXd out = v;
  for (Index i = 0; i < out.size(); ++i) {
    if (std::isnan(out[i])) out[i] = 0.0;
  }
  return out;
}

std::vector<double> parse_axis(const std::string& spec) {
  std::vector<double> values;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    const auto c1 = token.find(':');
    if (c1 == std::string::npos) {
      values.push_back(std::stod(token));
      continue;
    }
    const auto c2 = token.find(':', c1 + 1);
    if (c2 == std::string::npos) {
      throw ConfigError("parse_axis: expected start:step:stop in '" + token + "'");
    }
    const double start = std::stod(token.substr(0, c1));
    const double step = std::stod(token.substr(c1 + 1, c2 - c1 - 1));
    const double stop = std::stod(token.substr(c2 + 1));
    if (!(step > 0.0)) throw ConfigError("parse_axis: step must be positive");
    for (int i = 0;; ++i) {
      const double v = start + step * i;
      if (v > stop + 1e-9 * step) break;
      values.push_back(v);
    }
  }
  if (values.empty()) throw ConfigError("parse_axis: no values in '" + spec + "'");
  return values;
}

void ExperimentConfig::validate() const {
  if (side <= 0 || (side & (side - 1)) != 0) {
    throw ConfigError("config: side must be a power of two");
  }
  if (phantom_kind != "nested" && phantom_kind != "uniform" && phantom_kind != "brainweb") {
    throw ConfigError("config: unknown phantom kind '" + phantom_kind + "'");
  }
  if (phantom_kind == "brainweb") {
    if (brainweb_path.empty()) throw ConfigError("config: brainweb phantom needs a path");
    if (side != 256) throw ConfigError("config: brainweb phantom is 256x256");
  }
  if (grid_mode != "verbatim" && grid_mode != "on-grid" && grid_mode != "off-grid") {
    throw ConfigError("config: unknown grid mode '" + grid_mode + "'");
  }
  if (grid_preset != "reference" && grid_preset != "custom") {
    throw ConfigError("config: unknown grid preset '" + grid_preset + "'");
  }
  if (grid_preset == "custom" && (grid_t1.empty() || grid_t2.empty() || grid_df.empty())) {
    throw ConfigError("config: custom grid needs t1, t2 and df values");
  }
  if (!dictionary_path.empty() && l_values.size() != 1) {
    throw ConfigError("config: a cached dictionary fixes the sequence, so exactly one L");
  }
  if (sampling != "epi" && sampling != "variable-density") {
    throw ConfigError("config: unknown sampling pattern '" + sampling + "'");
  }
  if (density_model != "real" && density_model != "complex") {
    throw ConfigError("config: unknown density model '" + density_model + "'");
  }
  if (step_mode != "adaptive" && step_mode != "fixed-unit" && step_mode != "fixed-nm") {
    throw ConfigError("config: unknown step mode '" + step_mode + "'");
  }
  if (p_values.empty() || l_values.empty()) {
    throw ConfigError("config: need at least one p and one L");
  }
  for (const int p : p_values) {
    if (p < 1 || side % p != 0) {
      throw ConfigError("config: side must be divisible by p=" + std::to_string(p));
    }
  }
  for (const Index l : l_values) {
    if (l < 1) throw ConfigError("config: sequence length must be positive");
  }
  if (algorithms.empty()) throw ConfigError("config: no algorithms selected");
  for (const auto& a : algorithms) {
    if (a != "mrf" && a != "mrf-rescaled" && a != "blip" && a != "blip-reg" && a != "oracle") {
      throw ConfigError("config: unknown algorithm '" + a + "'");
    }
  }
  if (!(sigma_alpha_deg > 0.0) || !(tr_ms > 0.0)) {
    throw ConfigError("config: sigma_alpha and TR must be positive");
  }
}

namespace {

json axis_to_json(const std::vector<double>& v) { return json(v); }

std::vector<double> axis_from_json(const json& j, const char* name) {
  if (j.is_string()) return parse_axis(j.get<std::string>());
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& e : j) out.push_back(e.get<double>());
    return out;
  }
  throw ConfigError(std::string("config: ") + name + " must be an array or range string");
}

}  // namespace

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["phantom_kind"] = phantom_kind;
  j["side"] = side;
  j["brainweb_path"] = brainweb_path;
  j["brainweb_slice"] = brainweb_slice;
  j["grid_mode"] = grid_mode;
  j["off_grid_fraction"] = off_grid_fraction;
  j["quadratic_phase"] = quadratic_phase;
  j["corner_phase_deg"] = corner_phase_deg;
  j["grid_preset"] = grid_preset;
  j["grid_t1"] = axis_to_json(grid_t1);
  j["grid_t2"] = axis_to_json(grid_t2);
  j["grid_df"] = axis_to_json(grid_df);
  j["dictionary_path"] = dictionary_path;
  j["sigma_alpha_deg"] = sigma_alpha_deg;
  j["tr_ms"] = tr_ms;
  j["tr_jitter_ms"] = tr_jitter_ms;
  j["sampling"] = sampling;
  j["p_values"] = p_values;
  std::vector<long long> ls;
  for (const Index l : l_values) ls.push_back(static_cast<long long>(l));
  j["l_values"] = ls;
  j["algorithms"] = algorithms;
  j["density_model"] = density_model;
  j["step_mode"] = step_mode;
  j["max_iters"] = max_iters;
  j["kappa"] = kappa;
  j["stop_rel_change"] = stop_rel_change;
  if (wavelet_keep.has_value()) {
    j["wavelet_keep"] = static_cast<long long>(*wavelet_keep);
  } else {
    j["wavelet_keep"] = nullptr;
  }
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["write_maps"] = write_maps;
  return j.dump();
}

std::uint64_t ExperimentConfig::hash() const {
  // identifies the experiment itself, not where its files land
  ExperimentConfig neutral = *this;
  neutral.output_dir.clear();
  neutral.write_maps = false;
  return fnv1a(neutral.canonical_json());
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  static const std::set<std::string> known = {
      "phantom_kind", "side", "brainweb_path", "brainweb_slice", "grid_mode",
      "off_grid_fraction", "quadratic_phase", "corner_phase_deg", "grid_preset",
      "grid_t1", "grid_t2", "grid_df", "dictionary_path", "sigma_alpha_deg", "tr_ms",
      "tr_jitter_ms",
      "sampling", "p_values", "l_values", "algorithms", "density_model", "step_mode",
      "max_iters", "kappa", "stop_rel_change", "wavelet_keep", "seed", "output_dir",
      "write_maps"};
  for (const auto& [key, value] : j.items()) {
    if (known.find(key) == known.end()) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  ExperimentConfig c;
  try {
    if (j.contains("phantom_kind")) c.phantom_kind = j["phantom_kind"].get<std::string>();
    if (j.contains("side")) c.side = j["side"].get<int>();
    if (j.contains("brainweb_path")) c.brainweb_path = j["brainweb_path"].get<std::string>();
    if (j.contains("brainweb_slice")) c.brainweb_slice = j["brainweb_slice"].get<int>();
    if (j.contains("grid_mode")) c.grid_mode = j["grid_mode"].get<std::string>();
    if (j.contains("off_grid_fraction")) c.off_grid_fraction = j["off_grid_fraction"].get<double>();
    if (j.contains("quadratic_phase")) c.quadratic_phase = j["quadratic_phase"].get<bool>();
    if (j.contains("corner_phase_deg")) c.corner_phase_deg = j["corner_phase_deg"].get<double>();
    if (j.contains("grid_preset")) c.grid_preset = j["grid_preset"].get<std::string>();
    if (j.contains("grid_t1")) c.grid_t1 = axis_from_json(j["grid_t1"], "grid_t1");
    if (j.contains("grid_t2")) c.grid_t2 = axis_from_json(j["grid_t2"], "grid_t2");
    if (j.contains("grid_df")) c.grid_df = axis_from_json(j["grid_df"], "grid_df");
    if (j.contains("dictionary_path")) c.dictionary_path = j["dictionary_path"].get<std::string>();
    if (j.contains("sigma_alpha_deg")) c.sigma_alpha_deg = j["sigma_alpha_deg"].get<double>();
    if (j.contains("tr_ms")) c.tr_ms = j["tr_ms"].get<double>();
    if (j.contains("tr_jitter_ms")) c.tr_jitter_ms = j["tr_jitter_ms"].get<double>();
    if (j.contains("sampling")) c.sampling = j["sampling"].get<std::string>();
    if (j.contains("p_values")) c.p_values = j["p_values"].get<std::vector<int>>();
    if (j.contains("l_values")) {
      c.l_values.clear();
      for (const auto& e : j["l_values"]) c.l_values.push_back(e.get<long long>());
    }
    if (j.contains("algorithms")) c.algorithms = j["algorithms"].get<std::vector<std::string>>();
    if (j.contains("density_model")) c.density_model = j["density_model"].get<std::string>();
    if (j.contains("step_mode")) c.step_mode = j["step_mode"].get<std::string>();
    if (j.contains("max_iters")) c.max_iters = j["max_iters"].get<int>();
    if (j.contains("kappa")) c.kappa = j["kappa"].get<double>();
    if (j.contains("stop_rel_change")) c.stop_rel_change = j["stop_rel_change"].get<double>();
    if (j.contains("wavelet_keep") && !j["wavelet_keep"].is_null()) {
      c.wavelet_keep = j["wavelet_keep"].get<long long>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("write_maps")) c.write_maps = j["write_maps"].get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad field type: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

const AlgorithmMetrics* CellMetrics::find(const std::string& algorithm) const {
  for (const auto& a : algorithms) {
    if (a.algorithm == algorithm) return &a;
  }
  return nullptr;
}

namespace {

ParameterGrid make_grid(const ExperimentConfig& config) {
  if (config.grid_preset == "reference") return ParameterGrid::reference();
  ParameterGrid g;
  g.t1 = config.grid_t1;
  g.t2 = config.grid_t2;
  g.df = config.grid_df;
  g.validate();
  return g;
}

GridMode grid_mode_of(const std::string& name) {
  if (name == "verbatim") return GridMode::Verbatim;
  if (name == "on-grid") return GridMode::OnGrid;
  return GridMode::OffGrid;
}

PhantomMaps make_phantom(const ExperimentConfig& config, const TissueTable& table,
                         const ParameterGrid& grid) {
  if (config.phantom_kind == "brainweb") {
    return load_brainweb(config.brainweb_path, config.brainweb_slice, table);
  }
  const PhantomLayout layout =
      config.phantom_kind == "uniform" ? PhantomLayout::Uniform : PhantomLayout::Nested;
  return synthetic_phantom(config.side, layout, table, grid_mode_of(config.grid_mode), &grid,
                           config.off_grid_fraction);
}

StepMode step_mode_of(const std::string& name) {
  if (name == "fixed-unit") return StepMode::FixedUnit;
  if (name == "fixed-nm") return StepMode::FixedNOverM;
  return StepMode::Adaptive;
}

struct TissueResponse {
  std::string name;
  double rho, t1, t2;
  CVector response;  // rho * B(theta)
};

std::vector<TissueResponse> tissue_responses(const TissueTable& table,
                                             const ExcitationSequence& seq) {
  std::vector<TissueResponse> out;
  for (const auto& row : table.rows) {
    if (row.rho == 0.0) continue;
    bool dup = false;
    for (const auto& t : out) {
      if (t.rho == row.rho && t.t1 == row.t1 && t.t2 == row.t2) dup = true;
    }
    if (dup) continue;
    VoxelParams p;
    p.t1 = row.t1;
    p.t2 = row.t2;
    p.rho = Complex{row.rho, 0.0};
    out.push_back({row.name, row.rho, row.t1, row.t2, simulate_response(p, seq)});
  }
  return out;
}

std::string csv_header() {
  return "schema_version,config_hash,lib_version,master_seed,seq_seed,shift_seed,"
         "side,p,L,pattern,grid_mode,density_model,step_mode,algorithm,iterations,"
         "ser_x_db,ser_rho_db,ser_t1_db,ser_t2_db,final_consistency,lambda_min,lambda_max";
}

}  // namespace

MetricsRecord run_experiment(const ExperimentConfig& config) {
  config.validate();
  fs::create_directories(config.output_dir);
  const TissueTable table = TissueTable::mni();
  std::optional<BlochDictionary> cached;
  if (!config.dictionary_path.empty()) {
    cached = BlochDictionary::load(config.dictionary_path);
  }
  const ParameterGrid grid = cached ? cached->grid() : make_grid(config);

  PhantomMaps maps = make_phantom(config, table, grid);
  if (config.quadratic_phase) {
    maps = apply_quadratic_phase(std::move(maps), deg2rad(config.corner_phase_deg));
  }
  const auto mask = maps.foreground();
  CVector rho_true(maps.voxels());
  for (Index i = 0; i < maps.voxels(); ++i) {
    Complex r{maps.rho[i], 0.0};
    if (maps.phase.size() == maps.voxels()) {
      r *= Complex{std::cos(maps.phase[i]), std::sin(maps.phase[i])};
    }
    rho_true[i] = r;
  }

  const std::string hash = hex64(config.hash());
  std::ofstream csv(fs::path(config.output_dir) / "results.csv", std::ios::trunc);
  if (!csv) throw ConfigError("run_experiment: cannot write results.csv");
  csv << "# mrfcs results v1\n";
  csv << "# config " << hash << "\n";
  csv << csv_header() << "\n";

  const DensityModel model =
      config.density_model == "complex" ? DensityModel::Complex : DensityModel::Real;

  MetricsRecord record;
  int cell_p = 0;
  Index cell_l = 0;
  auto cell_id = [&cell_p, &cell_l] {
    return "cell p=" + std::to_string(cell_p) + " L=" + std::to_string(cell_l) + ": ";
  };
  try {
  for (const int p : config.p_values) {
    for (const Index L : config.l_values) {
      cell_p = p;
      cell_l = L;
      CellMetrics cell;
      cell.side = config.side;
      cell.p = p;
      cell.length = L;
      cell.shift_seed = Rng::derive(config.seed, "shifts:p=" + std::to_string(p) +
                                                     ":L=" + std::to_string(L));
      ExcitationSequence seq;
      BlochDictionary built;
      if (cached) {
        if (cached->length() != L) {
          throw ConfigError("cached dictionary was built for L=" +
                            std::to_string(cached->length()));
        }
        seq = cached->sequence();
        cell.sequence_seed = sequence_hash(seq);
      } else {
        cell.sequence_seed = Rng::derive(config.seed, "sequence:L=" + std::to_string(L));
        seq = generate_sequence(L, config.sigma_alpha_deg, config.tr_ms, cell.sequence_seed,
                                config.tr_jitter_ms);
        built = build_dictionary(grid, seq);
      }
      const BlochDictionary& dict = cached ? *cached : built;
      const ImageSequence x_true = maps_to_sequence(maps, seq);
      const SamplingSchedule schedule =
          config.sampling == "epi"
              ? SamplingSchedule::random_epi(config.side, p, L, cell.shift_seed)
              : SamplingSchedule::variable_density(config.side, p, L, cell.shift_seed);
      const KSpaceSequence Y = forward(x_true, schedule);

      cell.lambda_min = std::numeric_limits<double>::infinity();
      cell.lambda_max = 0.0;
      const auto tissues = tissue_responses(table, seq);
      for (std::size_t a = 0; a < tissues.size(); ++a) {
        for (std::size_t b = a + 1; b < tissues.size(); ++b) {
          const double lam = chord_flatness(tissues[a].response - tissues[b].response);
          cell.lambda_min = std::min(cell.lambda_min, lam);
          cell.lambda_max = std::max(cell.lambda_max, lam);
        }
      }

      for (const auto& name : config.algorithms) {
        const auto t0 = std::chrono::steady_clock::now();
        ReconResult result;
        if (name == "oracle") {
          result = oracle_estimate(x_true, dict, model);
        } else if (name == "mrf") {
          result = mrf_reconstruct(Y, dict, model, false);
        } else if (name == "mrf-rescaled") {
          result = mrf_reconstruct(Y, dict, model, true);
        } else {
          ReconConfig rc;
          rc.max_iters = config.max_iters;
          rc.kappa = config.kappa;
          rc.step_mode = step_mode_of(config.step_mode);
          rc.density_model = model;
          rc.stop_rel_change = config.stop_rel_change;
          rc.regularize = name == "blip-reg";
          rc.wavelet_keep = config.wavelet_keep;
          result = blip_reconstruct(Y, dict, rc);
        }
        const auto t1 = std::chrono::steady_clock::now();

        AlgorithmMetrics m;
        m.algorithm = name;
        m.runtime_s = std::chrono::duration<double>(t1 - t0).count();
        m.iterations = result.iterations;
        m.consistency_errors = result.consistency_errors;
        m.final_consistency = result.consistency_errors.empty()
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : result.consistency_errors.back();
        m.ser_x_db = ser_rows_db(x_true.x, result.x_hat.x, mask);
        m.ser_rho_db = ser_db(rho_true, result.rho, mask);
        m.ser_t1_db = ser_db(maps.t1, nan_to_zero(result.t1), mask);
        m.ser_t2_db = ser_db(maps.t2, nan_to_zero(result.t2), mask);
        cell.algorithms.push_back(std::move(m));

        if (config.write_maps) {
          write_recon_result(result, config.output_dir,
                             name + "_p" + std::to_string(p) + "_L" + std::to_string(L));
        }
      }

      const AlgorithmMetrics* oracle = cell.find("oracle");
      const AlgorithmMetrics* blip = cell.find("blip");
      if (oracle != nullptr && blip != nullptr &&
          ser_gap_db(oracle->ser_x_db, blip->ser_x_db) < -1e-9) {
        throw NumericalError("run_experiment: oracle SER fell below BLIP SER");
      }

      for (const auto& m : cell.algorithms) {
        csv << "1," << hash << "," << kVersion << "," << config.seed << ","
            << cell.sequence_seed << "," << cell.shift_seed << "," << config.side << "," << p
            << "," << L << "," << config.sampling << "," << config.grid_mode << ","
            << config.density_model << "," << config.step_mode << "," << m.algorithm << ","
            << m.iterations << "," << fmt_g(m.ser_x_db) << "," << fmt_g(m.ser_rho_db) << ","
            << fmt_g(m.ser_t1_db) << "," << fmt_g(m.ser_t2_db) << ","
            << fmt_g(m.final_consistency) << "," << fmt_g(cell.lambda_min) << ","
            << fmt_g(cell.lambda_max) << "\n";
      }
      csv.flush();

      json meta;
      meta["config_hash"] = hash;
      meta["lib_version"] = kVersion;
      meta["config"] = json::parse(config.canonical_json());
      meta["cell"] = {{"p", p},
                      {"L", static_cast<long long>(L)},
                      {"seq_seed", cell.sequence_seed},
                      {"shift_seed", cell.shift_seed}};
      json algs = json::array();
      for (const auto& m : cell.algorithms) {
        algs.push_back({{"algorithm", m.algorithm},
                        {"iterations", m.iterations},
                        {"runtime_s", m.runtime_s},
                        {"ser_x_db", m.ser_x_db},
                        {"ser_rho_db", m.ser_rho_db},
                        {"ser_t1_db", m.ser_t1_db},
                        {"ser_t2_db", m.ser_t2_db},
                        {"consistency_errors", m.consistency_errors}});
      }
      meta["algorithms"] = algs;
      std::ofstream mf(fs::path(config.output_dir) /
                       ("cell_p" + std::to_string(p) + "_L" + std::to_string(L) + ".json"));
      mf << meta.dump(2) << "\n";

      record.cells.push_back(std::move(cell));
    }
  }
  } catch (const ConfigError& e) {
    throw ConfigError(cell_id() + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(cell_id() + e.what());
  }
  return record;
}

std::vector<FlatnessRow> flatness_report(const TissueTable& table, double sigma_alpha_deg,
                                         double tr_ms, std::uint64_t seed,
                                         const std::vector<Index>& l_values,
                                         const std::string& csv_path) {
  table.validate();
  std::vector<FlatnessRow> rows;
  for (const Index L : l_values) {
    const ExcitationSequence seq = generate_sequence(
        L, sigma_alpha_deg, tr_ms, Rng::derive(seed, "flatness:L=" + std::to_string(L)));
    const auto tissues = tissue_responses(table, seq);
    for (std::size_t a = 0; a < tissues.size(); ++a) {
      for (std::size_t b = a + 1; b < tissues.size(); ++b) {
        const CVector chord = tissues[a].response - tissues[b].response;
        if (chord.norm() == 0.0) continue;
        const double lam = chord_flatness(chord);
        rows.push_back({tissues[a].name, tissues[b].name, L, lam,
                        1.0 / (lam * lam * static_cast<double>(L))});
      }
    }
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw ConfigError("flatness_report: cannot open " + csv_path);
    out << "tissue_a,tissue_b,L,lambda,inv_lambda_sq_over_L\n";
    for (const auto& r : rows) {
      out << r.tissue_a << "," << r.tissue_b << "," << r.length << "," << fmt_g(r.lambda)
          << "," << fmt_g(r.inv_lambda_sq_over_length) << "\n";
    }
  }
  return rows;
}

McIsometryStats isometry_report(Index p, Index length, Index trials, std::uint64_t seed,
                                const std::string& matrix_kind,
                                const std::vector<double>& eps_levels,
                                const std::string& csv_path) {
  if (matrix_kind != "flat" && matrix_kind != "random") {
    throw ConfigError("isometry_report: matrix kind must be flat or random");
  }
  Rng rng(Rng::derive(seed, "mc-matrix"));
  CMatrix U(p, length);
  for (Index k = 0; k < p; ++k) {
    for (Index i = 0; i < length; ++i) {
      if (matrix_kind == "flat") {
        const double a = 2.0 * std::numbers::pi * rng.uniform01();
        U(k, i) = Complex{std::cos(a), std::sin(a)};
      } else {
        U(k, i) = Complex{rng.gaussian(), rng.gaussian()};
      }
    }
  }
  const McIsometryStats stats =
      mc_chord_isometry(U, trials, Rng::derive(seed, "mc-trials"), eps_levels);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw ConfigError("isometry_report: cannot open " + csv_path);
    out << "kind,p,L,trials,mean,min_ratio,max_ratio,flatness,eps,tail_frequency,bound\n";
    for (const auto& t : stats.tails) {
      out << matrix_kind << "," << p << "," << length << "," << trials << ","
          << fmt_g(stats.mean) << "," << fmt_g(stats.min_ratio) << ","
          << fmt_g(stats.max_ratio) << "," << fmt_g(stats.flatness) << "," << fmt_g(t.eps)
          << "," << fmt_g(t.frequency) << "," << fmt_g(t.bound) << "\n";
    }
  }
  return stats;
}

void write_recon_result(const ReconResult& result, const std::string& dir,
                        const std::string& prefix) {
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / (prefix + "_maps.csv"));
  if (!out) throw ConfigError("write_recon_result: cannot open maps csv");
  const int side = result.x_hat.side;
  out << "voxel,row,col,atom,rho_re,rho_im,t1_ms,t2_ms,df_hz\n";
  for (Index i = 0; i < result.rho.size(); ++i) {
    out << i << "," << (side > 0 ? i / side : 0) << "," << (side > 0 ? i % side : 0) << ","
        << result.atom[i] << "," << fmt_g(result.rho[i].real()) << ","
        << fmt_g(result.rho[i].imag()) << "," << fmt_g(result.t1[i]) << ","
        << fmt_g(result.t2[i]) << "," << fmt_g(result.df[i]) << "\n";
  }
  json meta;
  meta["iterations"] = result.iterations;
  meta["consistency_errors"] = result.consistency_errors;
  std::ofstream mf(fs::path(dir) / (prefix + "_meta.json"));
  mf << meta.dump(2) << "\n";
}

}  // namespace mrfcs
