#pragma once

#include <cstdint>
#include <vector>

#include "mrfcs/types.hpp"

namespace mrfcs {

enum class SamplingPattern { RandomEpi, VariableDensity };

// Per-readout k_y row selection. Random EPI keeps every p-th k_y line with a
// fresh uniform shift zeta_l per readout; the variable-density comparison
// pattern always keeps the six wraparound-low rows {0,1,2,n-3,n-2,n-1} and
// fills the rest of the budget uniformly at random without replacement.
// k_y is indexed 0..side-1 with DC at row 0.
struct SamplingSchedule {
  int image_side = 0;
  int undersampling = 1;  // p; side must divide evenly
  SamplingPattern pattern = SamplingPattern::RandomEpi;
  std::uint64_t rng_seed = 0;
  std::vector<int> shifts;            // zeta_l, RandomEpi only
  std::vector<std::vector<int>> rows;  // sampled k_y rows per readout

  Index readouts() const { return static_cast<Index>(rows.size()); }
  Index samples_per_readout() const;  // M per column = side^2 / p
  void validate() const;

  static SamplingSchedule random_epi(int side, int p, Index readouts, std::uint64_t seed);
  static SamplingSchedule variable_density(int side, int p, Index readouts, std::uint64_t seed);
};

// M x L k-space samples, column l = readout l. Within a column the sampled
// rows are stacked in schedule order, each carrying all side k_x values.
struct KSpaceSequence {
  CMatrix y;
  SamplingSchedule schedule;
};

// Unitary 2D DFT of a square power-of-two image and its inverse;
// |F x| = |x| and F^H F = Id.
CMatrix dft2(const CMatrix& image);
CMatrix idft2(const CMatrix& kspace);

// Sampled k_y rows of readout l.
const std::vector<int>& epi_rows(const SamplingSchedule& schedule, Index l);

// The acquisition operator h and its adjoint. forward applies the DFT and
// selects rows; adjoint zero-fills and inverts. h h^H is the identity on
// measurement space; h^H h mixes the p k_y-aliases of each voxel.
KSpaceSequence forward(const ImageSequence& images, const SamplingSchedule& schedule);
ImageSequence adjoint(const KSpaceSequence& kspace);

// Monte Carlo check of the single-voxel chord isometry: draws an independent
// shift per element, forms z_i = (1/p) sum_k U_{k,i} e^{-j 2 pi zeta_i k / p}
// and reports the distribution of p^2 |z|^2 / |U|_F^2 (mean 1) together with
// tail frequencies against the 2 exp(-eps^2 / (3 p lambda^2)) bound.
struct McIsometryStats {
  double mean = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double flatness = 0.0;  // max row flatness of U (zero rows excluded)
  struct Tail {
    double eps;
    double frequency;
    double bound;
  };
  std::vector<Tail> tails;
};
McIsometryStats mc_chord_isometry(const CMatrix& U, Index trials, std::uint64_t seed,
                                  const std::vector<double>& eps_levels = {0.25, 0.5});

}  // namespace mrfcs
