#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mrfcs {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr const char* kVersion = "0.1.0";

// Invalid input or configuration. CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure while running. CLI exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tissue parameters of one voxel. Relaxation times in milliseconds,
// off-resonance in Hz. rho is the proton density: real non-negative in the
// idealized model, complex when the complex-density model is enabled.
// rho == 0 marks a background voxel whose response is the zero sequence.
struct VoxelParams {
  double t1 = 1000.0;
  double t2 = 100.0;
  double off_resonance = 0.0;
  Complex rho{1.0, 0.0};

  void validate() const;
};

// Flip angles (radians) and repetition times (ms) for L pulses.
// The echo time is fixed at TE_l = TR_l / 2.
struct ExcitationSequence {
  Eigen::ArrayXd flip_angles;
  Eigen::ArrayXd repetition_times;

  Index length() const { return flip_angles.size(); }
  void validate() const;
};

// Net magnetization (m^x, m^y, m^z) per unit equilibrium magnitude.
// Equilibrium is (0,0,1); an inversion-recovery sequence starts at (0,0,-1).
struct MagnetizationState {
  Eigen::Vector3d m{0.0, 0.0, -1.0};
};

// N x L magnetization sequence for a side x side image.
// Voxel i sits at image row i / side, column i % side.
struct ImageSequence {
  int side = 0;
  CMatrix x;

  Index voxels() const { return x.rows(); }
  Index length() const { return x.cols(); }
  void validate() const;
};

}  // namespace mrfcs
