#pragma once

#include "mrfcs/types.hpp"

namespace mrfcs {

// One repetition of the discrete magnetization dynamics: free precession and
// relaxation over tr_ms, then an instantaneous rotation by flip_rad about x.
// The off-resonance phase accrued over the interval is 2*pi*df*TR (TR in s).
MagnetizationState step_magnetization(const MagnetizationState& state, double flip_rad,
                                      double tr_ms, const VoxelParams& params);

// Complex transverse sample m^x + j m^y at the echo time TE = tr_ms / 2,
// evolved from the post-pulse state.
Complex readout(const MagnetizationState& state, double tr_ms, const VoxelParams& params);

// Length-L unit-density response B(theta); starts from the inverted state.
CVector simulate_unit_response(const VoxelParams& params, const ExcitationSequence& seq);

// rho * B(theta). rho enters as an exact scale factor of the unit response.
CVector simulate_response(const VoxelParams& params, const ExcitationSequence& seq);

// Free evolution of the continuous Bloch equations over dt_ms with adaptive
// Dormand-Prince integration. The static field never appears explicitly:
// gamma and B0 are absorbed into the off-resonance frequency, which sets the
// rotating-frame precession rate.
Eigen::Vector3d ode_evolve(const Eigen::Vector3d& m, double dt_ms,
                           const VoxelParams& params, double tol);

// Verification oracle for the discrete recursion: integrates the continuous
// equations between pulses (pulses applied as instantaneous rotations) and
// samples at each echo time. Test use only.
CVector ode_oracle_response(const VoxelParams& params, const ExcitationSequence& seq,
                            double tol = 1e-9);

}  // namespace mrfcs
