#pragma once

#include <optional>
#include <vector>

#include "mrfcs/dictionary.hpp"
#include "mrfcs/sampling.hpp"
#include "mrfcs/types.hpp"

namespace mrfcs {

enum class StepMode { FixedUnit, FixedNOverM, Adaptive };
enum class DensityModel { Real, Complex };

struct ReconConfig {
  int max_iters = 20;
  double kappa = 0.99;
  StepMode step_mode = StepMode::Adaptive;
  DensityModel density_model = DensityModel::Real;
  bool regularize = false;
  // Retained wavelet coefficients; defaults to 12000 scaled by N / 256^2.
  std::optional<Index> wavelet_keep;
  // Stop when the relative change of the consistency error drops below this.
  double stop_rel_change = 1e-8;

  void validate() const;
};

// Parameter maps plus the model-consistent image sequence they came from.
// Background voxels (recovered density 0) carry atom -1 and NaN parameters.
// consistency_errors[k] is |Y - h(X^{k+1})|^2 / |Y|^2, one entry per iteration.
struct ReconResult {
  Eigen::VectorXi atom;
  Eigen::VectorXd t1;
  Eigen::VectorXd t2;
  Eigen::VectorXd df;
  CVector rho;
  ImageSequence x_hat;
  int iterations = 0;
  std::vector<double> consistency_errors;
};

// Iterated projection: X^{n+1} = P(X^n + mu h^H(Y - h X^n)) from X^0 = 0,
// where P projects each voxel row onto the dictionary cone (optionally with
// the wavelet-thresholded pseudo-density when regularization is on). Stops at
// max_iters or when the consistency error stagnates. Adaptive stepping starts
// each iteration at mu = N/M and halves until mu <= omega; more than 20
// halvings raise NumericalError.
ReconResult blip_reconstruct(const KSpaceSequence& Y, const BlochDictionary& dict,
                             const ReconConfig& config);

// Matched-filter baseline: zero-filled adjoint image (scaled by N/M when
// rescaled is set) followed by one projection; identical to a single
// fixed-step iteration of blip_reconstruct.
ReconResult mrf_reconstruct(const KSpaceSequence& Y, const BlochDictionary& dict,
                            DensityModel model, bool rescaled);

// Projection of the fully sampled truth; separates discretization error from
// the compressed-sensing error.
ReconResult oracle_estimate(const ImageSequence& x_true, const BlochDictionary& dict,
                            DensityModel model);

// Accept/shrink rule for the adaptive step: omega = kappa |dX|^2 / |h dX|^2,
// accept when mu <= omega. A zero denominator with a nonzero numerator
// accepts (omega = infinity); callers treat dX = 0 as converged.
struct StepDecision {
  bool accept;
  double omega;
};
StepDecision adaptive_step(double mu, double kappa, double delta_sq, double h_delta_sq);

// Joint projection onto (wavelet-sparse pseudo-density) x (normalized atoms),
// real non-negative model: per-voxel argmax of the normalized correlation,
// hard thresholding of the clamped correlation image in the Haar domain,
// negative pseudo-densities clamped to zero. keep >= N skips the transform.
struct RegularizedProjection {
  Eigen::VectorXi atom;
  Eigen::VectorXd pseudo_density;
};
RegularizedProjection project_regularized(const CMatrix& X, int side,
                                          const BlochDictionary& dict, Index keep);

}  // namespace mrfcs
