#include "mrfcs/bloch.hpp"

#include <cmath>
#include <numbers>

namespace mrfcs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_step_inputs(const MagnetizationState& state, double flip_rad, double tr_ms,
                       const VoxelParams& params) {
  params.validate();
  if (!std::isfinite(flip_rad)) throw ConfigError("bloch: non-finite flip angle");
  if (!std::isfinite(tr_ms) || tr_ms <= 0.0) throw ConfigError("bloch: TR must be positive");
  if (!state.m.allFinite()) throw ConfigError("bloch: non-finite magnetization state");
}

// Relax toward equilibrium and precess by phi about z over an interval with
// decay factors e2 (transverse) and e1 (longitudinal).
Eigen::Vector3d relax_precess(const Eigen::Vector3d& m, double e1, double e2, double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double tx = e2 * m.x();
  const double ty = e2 * m.y();
  return {c * tx - s * ty, s * tx + c * ty, e1 * m.z() + (1.0 - e1)};
}

Eigen::Vector3d rotate_x(const Eigen::Vector3d& m, double alpha) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  return {m.x(), c * m.y() - s * m.z(), s * m.y() + c * m.z()};
}

}  // namespace

MagnetizationState step_magnetization(const MagnetizationState& state, double flip_rad,
                                      double tr_ms, const VoxelParams& params) {
  check_step_inputs(state, flip_rad, tr_ms, params);
  const double e1 = std::exp(-tr_ms / params.t1);
  const double e2 = std::exp(-tr_ms / params.t2);
  const double phi = kTwoPi * params.off_resonance * tr_ms * 1e-3;
  MagnetizationState next;
  next.m = rotate_x(relax_precess(state.m, e1, e2, phi), flip_rad);
  // Relaxation is contractive toward equilibrium only when T2 <= T1; grid
  // points with T2 > T1 are allowed and may leave the unit ball.
  if (params.t2 <= params.t1 && next.m.norm() > 1.0 + 1e-9) {
    throw NumericalError("bloch: magnetization left the unit ball");
  }
  return next;
}

Complex readout(const MagnetizationState& state, double tr_ms, const VoxelParams& params) {
  check_step_inputs(state, 0.0, tr_ms, params);
  const double te = 0.5 * tr_ms;
  const double e1 = std::exp(-te / params.t1);
  const double e2 = std::exp(-te / params.t2);
  const double phi = kTwoPi * params.off_resonance * te * 1e-3;
  const Eigen::Vector3d echo = relax_precess(state.m, e1, e2, phi);
  return {echo.x(), echo.y()};
}

CVector simulate_unit_response(const VoxelParams& params, const ExcitationSequence& seq) {
  params.validate();
  seq.validate();
  const Index L = seq.length();
  CVector response(L);
  MagnetizationState state;  // (0,0,-1)
  for (Index l = 0; l < L; ++l) {
    state = step_magnetization(state, seq.flip_angles[l], seq.repetition_times[l], params);
    response[l] = readout(state, seq.repetition_times[l], params);
  }
  return response;
}

CVector simulate_response(const VoxelParams& params, const ExcitationSequence& seq) {
  params.validate();
  seq.validate();
  if (params.rho == Complex{0.0, 0.0}) {
    return CVector::Zero(seq.length());
  }
  return params.rho * simulate_unit_response(params, seq);
}

namespace {

Eigen::Vector3d bloch_rhs(const Eigen::Vector3d& m, double r1, double r2, double omega_ms) {
  return {-omega_ms * m.y() - r2 * m.x(),
          omega_ms * m.x() - r2 * m.y(),
          (1.0 - m.z()) * r1};
}

}  // namespace

Eigen::Vector3d ode_evolve(const Eigen::Vector3d& m0, double dt_ms,
                           const VoxelParams& params, double tol) {
  params.validate();
  if (!(tol > 0.0)) throw ConfigError("ode_evolve: tolerance must be positive");
  if (!(dt_ms > 0.0)) return m0;

  const double r1 = 1.0 / params.t1;
  const double r2 = 1.0 / params.t2;
  const double omega_ms = kTwoPi * params.off_resonance * 1e-3;

  // Dormand-Prince 5(4) tableau.
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1c = 5179.0 / 57600, e3c = 7571.0 / 16695, e4c = 393.0 / 640,
                          e5c = -92097.0 / 339200, e6c = 187.0 / 2100, e7c = 1.0 / 40;

  Eigen::Vector3d y = m0;
  double t = 0.0;
  double h = dt_ms / 16.0;
  int steps = 0;
  while (t < dt_ms) {
    if (++steps > 1000000) throw NumericalError("ode_evolve: step limit exceeded");
    h = std::min(h, dt_ms - t);
    const Eigen::Vector3d k1 = bloch_rhs(y, r1, r2, omega_ms);
    const Eigen::Vector3d k2 = bloch_rhs(y + h * (a21 * k1), r1, r2, omega_ms);
    const Eigen::Vector3d k3 = bloch_rhs(y + h * (a31 * k1 + a32 * k2), r1, r2, omega_ms);
    const Eigen::Vector3d k4 =
        bloch_rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3), r1, r2, omega_ms);
    const Eigen::Vector3d k5 =
        bloch_rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), r1, r2, omega_ms);
    const Eigen::Vector3d k6 = bloch_rhs(
        y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), r1, r2, omega_ms);
    const Eigen::Vector3d y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Eigen::Vector3d k7 = bloch_rhs(y5, r1, r2, omega_ms);
    const Eigen::Vector3d y4 =
        y + h * (e1c * k1 + e3c * k3 + e4c * k4 + e5c * k5 + e6c * k6 + e7c * k7);

    double err = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double scale = tol + tol * std::max(std::abs(y5[i]), std::abs(y[i]));
      err = std::max(err, std::abs(y5[i] - y4[i]) / scale);
    }
    if (err <= 1.0) {
      t += h;
      y = y5;
    }
    const double factor = 0.9 * std::pow(std::max(err, 1e-12), -0.2);
    h *= std::clamp(factor, 0.2, 5.0);
  }
  return y;
}

CVector ode_oracle_response(const VoxelParams& params, const ExcitationSequence& seq,
                            double tol) {
  params.validate();
  seq.validate();
  const Index L = seq.length();
  CVector response(L);
  Eigen::Vector3d m{0.0, 0.0, -1.0};
  for (Index l = 0; l < L; ++l) {
    const double tr = seq.repetition_times[l];
    m = ode_evolve(m, tr, params, tol);
    const double alpha = seq.flip_angles[l];
    const double c = std::cos(alpha);
    const double s = std::sin(alpha);
    m = Eigen::Vector3d{m.x(), c * m.y() - s * m.z(), s * m.y() + c * m.z()};
    const Eigen::Vector3d echo = ode_evolve(m, 0.5 * tr, params, tol);
    response[l] = Complex{echo.x(), echo.y()};
  }
  return response;
}

}  // namespace mrfcs
