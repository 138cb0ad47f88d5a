#include "mrfcs/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "mrfcs/dictionary.hpp"
#include "mrfcs/rng.hpp"

namespace mrfcs {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_square_pow2(const CMatrix& m, const char* who) {
  if (m.rows() != m.cols()) throw ConfigError(std::string(who) + ": image must be square");
  if (!is_power_of_two(static_cast<int>(m.rows()))) {
    throw ConfigError(std::string(who) + ": side must be a power of two");
  }
}

// One cached plan per (side, direction). Buffers are reused, so transforms
// copy in and out; plan creation is the expensive part.
class FftPlan {
 public:
  FftPlan(int side, int sign) : side_(side) {
    buf_ = fftw_alloc_complex(static_cast<std::size_t>(side) * side);
    plan_ = fftw_plan_dft_2d(side, side, buf_, buf_, sign, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    fftw_destroy_plan(plan_);
    fftw_free(buf_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  // 2D DFT kernel is symmetric in the two axes, so Eigen's column-major
  // storage can be handed to FFTW's row-major transform unchanged.
  CMatrix run(const CMatrix& in, double scale) {
    const auto n = static_cast<std::size_t>(in.size());
    std::memcpy(buf_, in.data(), n * sizeof(fftw_complex));
    fftw_execute(plan_);
    CMatrix out(side_, side_);
    std::memcpy(out.data(), buf_, n * sizeof(fftw_complex));
    out *= scale;
    return out;
  }

 private:
  int side_;
  fftw_complex* buf_;
  fftw_plan plan_;
};

FftPlan& plan_for(int side, int sign) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<FftPlan>> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = plans[{side, sign}];
  if (!slot) slot = std::make_unique<FftPlan>(side, sign);
  return *slot;
}

}  // namespace

CMatrix dft2(const CMatrix& image) {
  check_square_pow2(image, "dft2");
  const int side = static_cast<int>(image.rows());
  return plan_for(side, FFTW_FORWARD).run(image, 1.0 / side);
}

CMatrix idft2(const CMatrix& kspace) {
  check_square_pow2(kspace, "idft2");
  const int side = static_cast<int>(kspace.rows());
  return plan_for(side, FFTW_BACKWARD).run(kspace, 1.0 / side);
}

Index SamplingSchedule::samples_per_readout() const {
  return static_cast<Index>(image_side) * (image_side / undersampling);
}

void SamplingSchedule::validate() const {
  if (!is_power_of_two(image_side)) {
    throw ConfigError("SamplingSchedule: image side must be a power of two");
  }
  if (undersampling < 1 || image_side % undersampling != 0) {
    throw ConfigError("SamplingSchedule: side must be divisible by the undersampling factor");
  }
  if (rows.empty()) throw ConfigError("SamplingSchedule: no readouts");
  const std::size_t per = static_cast<std::size_t>(image_side / undersampling);
  for (const auto& r : rows) {
    if (r.size() != per) throw ConfigError("SamplingSchedule: inconsistent row budget");
    for (const int ky : r) {
      if (ky < 0 || ky >= image_side) throw ConfigError("SamplingSchedule: row out of range");
    }
  }
}

SamplingSchedule SamplingSchedule::random_epi(int side, int p, Index readouts,
                                              std::uint64_t seed) {
  SamplingSchedule s;
  s.image_side = side;
  s.undersampling = p;
  s.pattern = SamplingPattern::RandomEpi;
  s.rng_seed = seed;
  if (readouts < 1) throw ConfigError("SamplingSchedule: need at least one readout");
  if (!is_power_of_two(side)) {
    throw ConfigError("SamplingSchedule: image side must be a power of two");
  }
  if (p < 1 || side % p != 0) {
    throw ConfigError("SamplingSchedule: side must be divisible by the undersampling factor");
  }
  Rng rng(seed);
  s.shifts.resize(static_cast<std::size_t>(readouts));
  s.rows.resize(static_cast<std::size_t>(readouts));
  for (Index l = 0; l < readouts; ++l) {
    const int zeta = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(p)));
    s.shifts[static_cast<std::size_t>(l)] = zeta;
    auto& r = s.rows[static_cast<std::size_t>(l)];
    r.reserve(static_cast<std::size_t>(side / p));
    for (int ky = zeta; ky < side; ky += p) r.push_back(ky);
  }
  return s;
}

SamplingSchedule SamplingSchedule::variable_density(int side, int p, Index readouts,
                                                    std::uint64_t seed) {
  SamplingSchedule s;
  s.image_side = side;
  s.undersampling = p;
  s.pattern = SamplingPattern::VariableDensity;
  s.rng_seed = seed;
  if (readouts < 1) throw ConfigError("SamplingSchedule: need at least one readout");
  if (!is_power_of_two(side)) {
    throw ConfigError("SamplingSchedule: image side must be a power of two");
  }
  if (p < 1 || side % p != 0) {
    throw ConfigError("SamplingSchedule: side must be divisible by the undersampling factor");
  }
  const int budget = side / p;
  if (budget < 6) {
    throw ConfigError("variable_density: row budget " + std::to_string(budget) +
                      " cannot hold the six fixed centre rows");
  }
  const std::vector<int> fixed = {0, 1, 2, side - 3, side - 2, side - 1};
  std::vector<int> pool;
  pool.reserve(static_cast<std::size_t>(side - 6));
  for (int ky = 3; ky < side - 3; ++ky) pool.push_back(ky);

  Rng rng(seed);
  s.rows.resize(static_cast<std::size_t>(readouts));
  for (Index l = 0; l < readouts; ++l) {
    // Partial Fisher-Yates over the pool, fresh per readout.
    std::vector<int> deck = pool;
    auto& r = s.rows[static_cast<std::size_t>(l)];
    r = fixed;
    for (int i = 0; i < budget - 6; ++i) {
      const auto j = i + static_cast<int>(rng.uniform_below(deck.size() - static_cast<std::size_t>(i)));
      std::swap(deck[static_cast<std::size_t>(i)], deck[static_cast<std::size_t>(j)]);
      r.push_back(deck[static_cast<std::size_t>(i)]);
    }
    std::sort(r.begin(), r.end());
  }
  return s;
}

const std::vector<int>& epi_rows(const SamplingSchedule& schedule, Index l) {
  if (l < 0 || l >= schedule.readouts()) {
    throw ConfigError("epi_rows: readout index out of range");
  }
  return schedule.rows[static_cast<std::size_t>(l)];
}

KSpaceSequence forward(const ImageSequence& images, const SamplingSchedule& schedule) {
  schedule.validate();
  images.validate();
  const int side = schedule.image_side;
  if (images.side != side) throw ConfigError("forward: image side does not match schedule");
  const Index L = images.length();
  if (L != schedule.readouts()) throw ConfigError("forward: readout count mismatch");

  KSpaceSequence out;
  out.schedule = schedule;
  out.y.resize(schedule.samples_per_readout(), L);
  CMatrix image(side, side);
  for (Index l = 0; l < L; ++l) {
    // Column l holds a row-major side x side image (voxel i = row*side+col),
    // which is the transpose of this column-major view; the 2D DFT commutes
    // with transposition so k-space rows still index k_y.
    image = Eigen::Map<const CMatrix>(images.x.col(l).data(), side, side).transpose();
    const CMatrix k = dft2(image);
    const auto& rows = epi_rows(schedule, l);
    for (std::size_t m = 0; m < rows.size(); ++m) {
      out.y.block(static_cast<Index>(m) * side, l, side, 1) = k.row(rows[m]).transpose();
    }
  }
  return out;
}

ImageSequence adjoint(const KSpaceSequence& kspace) {
  const SamplingSchedule& schedule = kspace.schedule;
  schedule.validate();
  const int side = schedule.image_side;
  const Index L = schedule.readouts();
  if (kspace.y.rows() != schedule.samples_per_readout() || kspace.y.cols() != L) {
    throw ConfigError("adjoint: measurement shape does not match schedule");
  }

  ImageSequence out;
  out.side = side;
  out.x.resize(static_cast<Index>(side) * side, L);
  CMatrix k(side, side);
  for (Index l = 0; l < L; ++l) {
    k.setZero();
    const auto& rows = epi_rows(schedule, l);
    for (std::size_t m = 0; m < rows.size(); ++m) {
      k.row(rows[m]) = kspace.y.block(static_cast<Index>(m) * side, l, side, 1).transpose();
    }
    const CMatrix image = idft2(k);
    Eigen::Map<CMatrix>(out.x.col(l).data(), side, side) = image.transpose();
  }
  return out;
}

McIsometryStats mc_chord_isometry(const CMatrix& U, Index trials, std::uint64_t seed,
                                  const std::vector<double>& eps_levels) {
  if (trials < 1) throw ConfigError("mc_chord_isometry: need at least one trial");
  const Index p = U.rows();
  const Index L = U.cols();
  const double fro2 = U.squaredNorm();
  if (!(fro2 > 0.0)) throw ConfigError("mc_chord_isometry: zero matrix");

  McIsometryStats stats;
  stats.flatness = 0.0;
  for (Index k = 0; k < p; ++k) {
    if (U.row(k).norm() > 0.0) {
      stats.flatness = std::max(stats.flatness, chord_flatness(U.row(k).transpose()));
    }
  }

  // Phase table e^{-j 2 pi zeta k / p} for zeta, k in [0, p).
  CMatrix phases(p, p);
  for (Index zeta = 0; zeta < p; ++zeta) {
    for (Index k = 0; k < p; ++k) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(zeta * k) / static_cast<double>(p);
      phases(zeta, k) = Complex{std::cos(a), std::sin(a)};
    }
  }

  Rng rng(seed);
  std::vector<Index> exceed(eps_levels.size(), 0);
  double sum = 0.0;
  stats.min_ratio = std::numeric_limits<double>::infinity();
  stats.max_ratio = -std::numeric_limits<double>::infinity();
  const double inv_p = 1.0 / static_cast<double>(p);
  for (Index t = 0; t < trials; ++t) {
    double z2 = 0.0;
    for (Index i = 0; i < L; ++i) {
      const auto zeta = static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(p)));
      Complex zi{0.0, 0.0};
      for (Index k = 0; k < p; ++k) zi += U(k, i) * phases(zeta, k);
      z2 += std::norm(zi * inv_p);
    }
    const double ratio = static_cast<double>(p) * static_cast<double>(p) * z2 / fro2;
    sum += ratio;
    stats.min_ratio = std::min(stats.min_ratio, ratio);
    stats.max_ratio = std::max(stats.max_ratio, ratio);
    for (std::size_t e = 0; e < eps_levels.size(); ++e) {
      if (std::abs(ratio - 1.0) > eps_levels[e]) ++exceed[e];
    }
  }
  stats.mean = sum / static_cast<double>(trials);
  for (std::size_t e = 0; e < eps_levels.size(); ++e) {
    const double eps = eps_levels[e];
    stats.tails.push_back({eps,
                           static_cast<double>(exceed[e]) / static_cast<double>(trials),
                           2.0 * std::exp(-eps * eps / (3.0 * static_cast<double>(p) *
                                                        stats.flatness * stats.flatness))});
  }
  return stats;
}

}  // namespace mrfcs
