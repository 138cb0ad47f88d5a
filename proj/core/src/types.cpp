#include "mrfcs/types.hpp"

#include <cmath>

namespace mrfcs {

void VoxelParams::validate() const {
  if (!std::isfinite(t1) || !std::isfinite(t2) || !std::isfinite(off_resonance) ||
      !std::isfinite(rho.real()) || !std::isfinite(rho.imag())) {
    throw ConfigError("VoxelParams: non-finite parameter");
  }
  if (t1 <= 0.0 || t2 <= 0.0) {
    throw ConfigError("VoxelParams: relaxation times must be positive, got T1=" +
                      std::to_string(t1) + " T2=" + std::to_string(t2));
  }
}

void ExcitationSequence::validate() const {
  if (flip_angles.size() != repetition_times.size()) {
    throw ConfigError("ExcitationSequence: flip angle and TR lists differ in length");
  }
  if (flip_angles.size() < 1) {
    throw ConfigError("ExcitationSequence: need at least one pulse");
  }
  if (!flip_angles.isFinite().all()) {
    throw ConfigError("ExcitationSequence: non-finite flip angle");
  }
  if (!repetition_times.isFinite().all() || (repetition_times <= 0.0).any()) {
    throw ConfigError("ExcitationSequence: repetition times must be positive and finite");
  }
}

void ImageSequence::validate() const {
  if (side <= 0 || x.rows() != static_cast<Index>(side) * side) {
    throw ConfigError("ImageSequence: row count does not match side*side");
  }
  if (!x.allFinite()) {
    throw ConfigError("ImageSequence: non-finite entry");
  }
}

}  // namespace mrfcs
