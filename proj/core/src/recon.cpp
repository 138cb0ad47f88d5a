#include "mrfcs/recon.hpp"

#include <cmath>
#include <limits>

#include "mrfcs/wavelet.hpp"

namespace mrfcs {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Projected {
  Eigen::VectorXi atom;
  CVector rho;
  CMatrix x;
};

Index resolve_keep(const ReconConfig& config, Index n_voxels) {
  if (config.wavelet_keep.has_value()) {
    const Index k = *config.wavelet_keep;
    if (k < 0 || k > n_voxels) {
      throw ConfigError("recon: wavelet_keep must lie in [0, N]");
    }
    return k;
  }
  return static_cast<Index>(std::llround(12000.0 * static_cast<double>(n_voxels) / 65536.0));
}

Eigen::VectorXd clamped_scores_to_pseudo_density(const Eigen::VectorXd& z, int side,
                                                 Index keep) {
  const Index n = z.size();
  if (keep >= n) return z;  // identity threshold, exact
  const Eigen::MatrixXd z_img = Eigen::Map<const Eigen::MatrixXd>(z.data(), side, side);
  const Eigen::MatrixXd coeffs = haar2(z_img);
  const Eigen::VectorXd kept =
      hard_threshold(Eigen::Map<const Eigen::VectorXd>(coeffs.data(), n), keep);
  const Eigen::MatrixXd back = ihaar2(Eigen::Map<const Eigen::MatrixXd>(kept.data(), side, side));
  return Eigen::Map<const Eigen::VectorXd>(back.data(), n).cwiseMax(0.0);
}

Projected project_model(const CMatrix& X, int side, const BlochDictionary& dict,
                        const ReconConfig& config, Index keep) {
  const Index N = X.rows();
  Projected out;
  out.rho.resize(N);
  if (config.density_model == DensityModel::Complex) {
    project_rows_complex(X, dict, out.atom, out.rho);
  } else {
    Eigen::VectorXd z;
    project_rows_real(X, dict, out.atom, z);
    if (config.regularize) {
      z = clamped_scores_to_pseudo_density(z, side, keep);
    }
    for (Index i = 0; i < N; ++i) {
      out.rho[i] = Complex{z[i] / dict.norms()[out.atom[i]], 0.0};
    }
  }
  out.x.resize(N, X.cols());
  for (Index i = 0; i < N; ++i) {
    out.x.row(i) = out.rho[i] * dict.atoms().row(out.atom[i]);
  }
  return out;
}

void fill_maps(ReconResult& result, const Projected& proj, const BlochDictionary& dict) {
  const Index N = proj.atom.size();
  result.atom.resize(N);
  result.t1.resize(N);
  result.t2.resize(N);
  result.df.resize(N);
  result.rho = proj.rho;
  for (Index i = 0; i < N; ++i) {
    if (proj.rho[i] == Complex{0.0, 0.0}) {
      result.atom[i] = -1;
      result.t1[i] = kNan;
      result.t2[i] = kNan;
      result.df[i] = kNan;
      continue;
    }
    result.atom[i] = proj.atom[i];
    const VoxelParams p = lut_lookup(proj.atom[i], dict);
    result.t1[i] = p.t1;
    result.t2[i] = p.t2;
    result.df[i] = p.off_resonance;
  }
}

}  // namespace

void ReconConfig::validate() const {
  if (max_iters < 1) throw ConfigError("recon: max_iters must be at least 1");
  if (!(kappa > 0.0) || !(kappa < 1.0)) throw ConfigError("recon: kappa must lie in (0,1)");
  if (!(stop_rel_change >= 0.0)) throw ConfigError("recon: negative stopping tolerance");
  if (regularize && density_model == DensityModel::Complex) {
    throw ConfigError("recon: the regularized projection needs the real density model");
  }
}

StepDecision adaptive_step(double mu, double kappa, double delta_sq, double h_delta_sq) {
  if (h_delta_sq == 0.0) {
    return {true, std::numeric_limits<double>::infinity()};
  }
  const double omega = kappa * delta_sq / h_delta_sq;
  return {mu <= omega, omega};
}

ReconResult blip_reconstruct(const KSpaceSequence& Y, const BlochDictionary& dict,
                             const ReconConfig& config) {
  config.validate();
  const SamplingSchedule& schedule = Y.schedule;
  schedule.validate();
  const int side = schedule.image_side;
  const Index N = static_cast<Index>(side) * side;
  const Index L = schedule.readouts();
  const Index M = schedule.samples_per_readout();
  if (dict.length() != L) throw ConfigError("blip: dictionary length does not match readouts");
  if (Y.y.rows() != M || Y.y.cols() != L) throw ConfigError("blip: measurement shape mismatch");
  const Index keep = resolve_keep(config, N);

  const double mu0 =
      config.step_mode == StepMode::FixedUnit ? 1.0 : static_cast<double>(N) / static_cast<double>(M);
  const double y_norm2 = Y.y.squaredNorm();

  ImageSequence X;
  X.side = side;
  X.x = CMatrix::Zero(N, L);
  CMatrix residual = Y.y - forward(X, schedule).y;

  ReconResult result;
  Projected proj;
  double prev_err = 1.0;  // consistency of X^0 = 0
  for (int n = 0; n < config.max_iters; ++n) {
    KSpaceSequence r;
    r.schedule = schedule;
    r.y = residual;
    const ImageSequence grad = adjoint(r);

    double mu = mu0;
    int halvings = 0;
    Projected cand;
    ImageSequence delta;
    delta.side = side;
    bool moved = true;
    while (true) {
      cand = project_model(X.x + mu * grad.x, side, dict, config, keep);
      if (config.step_mode != StepMode::Adaptive) break;
      delta.x = cand.x - X.x;
      const double d2 = delta.x.squaredNorm();
      if (d2 == 0.0) {
        moved = false;
        break;
      }
      const double hd2 = forward(delta, schedule).y.squaredNorm();
      if (adaptive_step(mu, config.kappa, d2, hd2).accept) break;
      mu *= 0.5;
      if (++halvings > 20) {
        throw NumericalError("blip: step size underflow after 20 halvings");
      }
    }

    X.x = std::move(cand.x);
    proj.atom = std::move(cand.atom);
    proj.rho = std::move(cand.rho);
    result.iterations = n + 1;

    residual = Y.y - forward(X, schedule).y;
    const double err = y_norm2 > 0.0 ? residual.squaredNorm() / y_norm2 : 0.0;
    result.consistency_errors.push_back(err);
    // guaranteed by the accept/shrink rule; the slack only absorbs rounding
    // jitter once the error reaches the floating-point floor
    if (config.step_mode == StepMode::Adaptive && err > prev_err * (1.0 + 1e-12) + 1e-28) {
      throw NumericalError("blip: consistency error increased from " + std::to_string(prev_err) +
                           " to " + std::to_string(err) + " at iteration " +
                           std::to_string(n + 1));
    }
    if (!moved || err == 0.0) break;
    if (prev_err > 0.0 && std::abs(err - prev_err) / prev_err < config.stop_rel_change) break;
    prev_err = err;
  }

  proj.x = std::move(X.x);
  fill_maps(result, proj, dict);
  result.x_hat.side = side;
  result.x_hat.x = std::move(proj.x);
  return result;
}

ReconResult mrf_reconstruct(const KSpaceSequence& Y, const BlochDictionary& dict,
                            DensityModel model, bool rescaled) {
  ReconConfig config;
  config.max_iters = 1;
  config.step_mode = rescaled ? StepMode::FixedNOverM : StepMode::FixedUnit;
  config.density_model = model;
  config.regularize = false;
  return blip_reconstruct(Y, dict, config);
}

ReconResult oracle_estimate(const ImageSequence& x_true, const BlochDictionary& dict,
                            DensityModel model) {
  x_true.validate();
  if (dict.length() != x_true.length()) {
    throw ConfigError("oracle: dictionary length does not match sequence");
  }
  ReconConfig config;
  config.density_model = model;
  config.regularize = false;
  Projected proj = project_model(x_true.x, x_true.side, dict, config, x_true.voxels());
  ReconResult result;
  fill_maps(result, proj, dict);
  result.x_hat.side = x_true.side;
  result.x_hat.x = std::move(proj.x);
  return result;
}

RegularizedProjection project_regularized(const CMatrix& X, int side,
                                          const BlochDictionary& dict, Index keep) {
  if (keep < 0 || keep > X.rows()) throw ConfigError("project_regularized: keep out of range");
  RegularizedProjection out;
  Eigen::VectorXd z;
  project_rows_real(X, dict, out.atom, z);
  out.pseudo_density = clamped_scores_to_pseudo_density(z, side, keep);
  return out;
}

}  // namespace mrfcs
