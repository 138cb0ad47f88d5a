#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "mrfcs/rng.hpp"
#include "mrfcs/sampling.hpp"

using namespace mrfcs;

namespace {

CMatrix random_cmatrix(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  CMatrix m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = Complex{rng.gaussian(), rng.gaussian()};
  }
  return m;
}

ImageSequence random_images(int side, Index L, std::uint64_t seed) {
  ImageSequence x;
  x.side = side;
  x.x = random_cmatrix(static_cast<Index>(side) * side, L, seed);
  return x;
}

Complex inner(const CMatrix& a, const CMatrix& b) {
  return a.conjugate().cwiseProduct(b).sum();
}

}  // namespace

TEST_CASE("a delta image transforms to a flat spectrum of magnitude 1/side") {
  const int side = 16;
  CMatrix image = CMatrix::Zero(side, side);
  image(0, 0) = 1.0;
  const CMatrix k = dft2(image);
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      CHECK(std::abs(k(r, c) - Complex{1.0 / side, 0.0}) < 1e-12);
    }
  }
}

TEST_CASE("the 2D DFT is unitary and invertible") {
  for (const int side : {8, 16, 64}) {
    CAPTURE(side);
    const CMatrix image = random_cmatrix(side, side, 10 + static_cast<std::uint64_t>(side));
    const CMatrix k = dft2(image);
    CHECK(std::abs(k.norm() - image.norm()) < 1e-12 * image.norm());
    CHECK((idft2(k) - image).norm() < 1e-12 * image.norm());
  }
  CHECK_THROWS_AS(dft2(CMatrix::Zero(8, 4)), ConfigError);
  CHECK_THROWS_AS(dft2(CMatrix::Zero(12, 12)), ConfigError);
}

TEST_CASE("EPI row selection keeps every p-th line from the shift") {
  const auto s = SamplingSchedule::random_epi(8, 4, 20, 99);
  for (Index l = 0; l < s.readouts(); ++l) {
    const int zeta = s.shifts[static_cast<std::size_t>(l)];
    CHECK(epi_rows(s, l) == std::vector<int>{zeta, zeta + 4});
  }
  const auto full = SamplingSchedule::random_epi(8, 1, 3, 99);
  for (Index l = 0; l < 3; ++l) {
    CHECK(epi_rows(full, l) == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
  }
  CHECK_THROWS_AS(epi_rows(s, 20), ConfigError);
  CHECK_THROWS_AS(epi_rows(s, -1), ConfigError);
}

TEST_CASE("random shifts cover every k-space row over a long acquisition") {
  const auto s = SamplingSchedule::random_epi(256, 16, 200, 4);
  std::set<int> covered;
  for (const auto& rows : s.rows) covered.insert(rows.begin(), rows.end());
  CHECK(covered.size() == 256);
}

TEST_CASE("schedules regenerate deterministically from their seed") {
  const auto a = SamplingSchedule::random_epi(64, 8, 50, 123);
  const auto b = SamplingSchedule::random_epi(64, 8, 50, 123);
  const auto c = SamplingSchedule::random_epi(64, 8, 50, 124);
  CHECK(a.shifts == b.shifts);
  CHECK(a.shifts != c.shifts);
}

TEST_CASE("forward and adjoint satisfy the inner-product identity") {
  for (const int side : {8, 16}) {
    for (const int p : {1, 2, 4}) {
      CAPTURE(side);
      CAPTURE(p);
      const Index L = 6;
      const auto s = SamplingSchedule::random_epi(side, p, L, 7);
      const ImageSequence x = random_images(side, L, 21);
      KSpaceSequence y;
      y.schedule = s;
      y.y = random_cmatrix(s.samples_per_readout(), L, 22);
      const Complex lhs = inner(forward(x, s).y, y.y);
      const Complex rhs = inner(x.x, adjoint(y).x);
      CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
    }
  }
}

TEST_CASE("forward after adjoint is the identity on measurement space") {
  const auto s = SamplingSchedule::random_epi(16, 4, 8, 31);
  KSpaceSequence y;
  y.schedule = s;
  y.y = random_cmatrix(s.samples_per_readout(), 8, 32);
  const KSpaceSequence back = forward(adjoint(y), s);
  CHECK((back.y - y.y).norm() < 1e-10 * y.y.norm());
}

TEST_CASE("subsampling never increases energy") {
  const auto s = SamplingSchedule::random_epi(16, 4, 8, 41);
  const ImageSequence x = random_images(16, 8, 42);
  CHECK(forward(x, s).y.norm() <= x.x.norm() * (1.0 + 1e-12));
}

TEST_CASE("full sampling makes the normal operator the identity") {
  const auto s = SamplingSchedule::random_epi(8, 1, 4, 51);
  const ImageSequence x = random_images(8, 4, 52);
  const ImageSequence back = adjoint(forward(x, s));
  CHECK((back.x - x.x).norm() < 1e-12 * x.x.norm());
}

TEST_CASE("the normal operator mixes exactly the p k_y-aliases of each voxel") {
  for (const auto& [side, p] : std::vector<std::pair<int, int>>{{4, 2}, {8, 4}}) {
    CAPTURE(side);
    CAPTURE(p);
    const Index L = 5;
    const auto s = SamplingSchedule::random_epi(side, p, L, 61);
    const ImageSequence x = random_images(side, L, 62);
    const ImageSequence z = adjoint(forward(x, s));
    const int stride = side / p;
    for (Index l = 0; l < L; ++l) {
      const int zeta = s.shifts[static_cast<std::size_t>(l)];
      for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
          Complex want{0.0, 0.0};
          for (int k = 0; k < p; ++k) {
            const int alias_row = (r + k * stride) % side;
            const double a = -2.0 * std::numbers::pi * zeta * k / static_cast<double>(p);
            want += x.x(static_cast<Index>(alias_row) * side + c, l) *
                    std::polar(1.0, a);
          }
          want /= static_cast<double>(p);
          const Complex got = z.x(static_cast<Index>(r) * side + c, l);
          CHECK(std::abs(got - want) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("variable-density sampling keeps the six centre rows plus random fill") {
  const auto s = SamplingSchedule::variable_density(256, 16, 12, 71);
  for (const auto& rows : s.rows) {
    CHECK(rows.size() == 16);
    const std::set<int> unique(rows.begin(), rows.end());
    CHECK(unique.size() == 16);
    for (const int fixed : {0, 1, 2, 253, 254, 255}) CHECK(unique.count(fixed) == 1);
    int random_rows = 0;
    for (const int r : unique) {
      if (r >= 3 && r <= 252) ++random_rows;
    }
    CHECK(random_rows == 10);
  }
  const auto again = SamplingSchedule::variable_density(256, 16, 12, 71);
  CHECK(again.rows == s.rows);
}

TEST_CASE("a too-small row budget cannot hold the centre rows") {
  CHECK_THROWS_AS(SamplingSchedule::variable_density(16, 4, 4, 3), ConfigError);
}

TEST_CASE("aliasing a single-row matrix is always an isometry") {
  CMatrix u = CMatrix::Zero(4, 16);
  u.row(2) = random_cmatrix(1, 16, 81);
  const McIsometryStats stats = mc_chord_isometry(u, 500, 5, {0.25});
  CHECK(std::abs(stats.min_ratio - 1.0) < 1e-12);
  CHECK(std::abs(stats.max_ratio - 1.0) < 1e-12);
  CHECK(stats.tails[0].frequency == 0.0);
}

TEST_CASE("the aliasing ratio concentrates around one") {
  const CMatrix u = random_cmatrix(4, 32, 91);
  const McIsometryStats stats = mc_chord_isometry(u, 20000, 6);
  CHECK(std::abs(stats.mean - 1.0) < 0.01);
  CHECK_THROWS_AS(mc_chord_isometry(CMatrix::Zero(4, 8), 10, 1), ConfigError);
  CHECK_THROWS_AS(mc_chord_isometry(u, 0, 1), ConfigError);
}

TEST_CASE("empirical tails stay under the concentration bound for flat rows") {
  Rng rng(7);
  const Index p = 4, L = 256;
  CMatrix u(p, L);
  for (Index r = 0; r < p; ++r) {
    for (Index c = 0; c < L; ++c) {
      u(r, c) = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform01());
    }
  }
  const McIsometryStats stats = mc_chord_isometry(u, 20000, 8, {0.25, 0.5});
  CHECK(stats.flatness == doctest::Approx(1.0 / std::sqrt(static_cast<double>(L))));
  for (const auto& tail : stats.tails) {
    CAPTURE(tail.eps);
    CHECK(tail.frequency <= tail.bound);
  }
}
