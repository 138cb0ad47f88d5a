#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <vector>

#include "mrfcs/bloch.hpp"
#include "mrfcs/harness.hpp"
#include "mrfcs/phantom.hpp"

using namespace mrfcs;

namespace {

constexpr long long kVolumeBytes = 181LL * 217 * 181;

std::string write_volume(const std::vector<unsigned char>& bytes, const char* name) {
  const std::string path = std::string("test_") + name + ".rawb";
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  return path;
}

std::size_t volume_index(int x, int y, int z) {
  return static_cast<std::size_t>(x) + 181u * (static_cast<std::size_t>(y) + 217u * z);
}

bool on_axis(double v, const std::vector<double>& axis) {
  for (const double a : axis) {
    if (a == v) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("the tissue table carries the segmented-brain parameters") {
  const TissueTable t = TissueTable::mni();
  t.validate();
  const struct {
    int label;
    double rho, t1, t2;
  } want[] = {{0, 0.0, 0.0, 0.0},       {1, 100.0, 5012.0, 512.0}, {2, 100.0, 1545.0, 83.0},
              {3, 80.0, 811.0, 77.0},   {4, 80.0, 530.0, 77.0},    {5, 80.0, 1425.0, 41.0},
              {6, 80.0, 1425.0, 41.0}};
  for (const auto& w : want) {
    const TissueRow* row = t.find(w.label);
    REQUIRE(row != nullptr);
    CHECK(row->rho == w.rho);
    CHECK(row->t1 == w.t1);
    CHECK(row->t2 == w.t2);
  }
  CHECK(t.find(7) == nullptr);
}

TEST_CASE("a uniform phantom fills the frame with one tissue") {
  const PhantomMaps maps = synthetic_phantom(8, PhantomLayout::Uniform, TissueTable::mni());
  CHECK(maps.voxels() == 64);
  CHECK((maps.rho.array() == 100.0).all());
  CHECK((maps.t1.array() == 5012.0).all());
  CHECK((maps.t2.array() == 512.0).all());
}

TEST_CASE("the nested phantom is deterministic and uses every tissue") {
  const PhantomMaps a = synthetic_phantom(64, PhantomLayout::Nested, TissueTable::mni());
  const PhantomMaps b = synthetic_phantom(64, PhantomLayout::Nested, TissueTable::mni());
  CHECK(a.rho == b.rho);
  CHECK(a.t1 == b.t1);

  std::set<std::pair<double, double>> pairs;
  Index background = 0;
  for (Index i = 0; i < a.voxels(); ++i) {
    if (a.rho[i] == 0.0) {
      ++background;
    } else {
      pairs.insert({a.t1[i], a.t2[i]});
    }
  }
  CHECK(pairs.size() == 5);
  CHECK(background > 0);
  // the frame of width side/8 is background
  for (int c = 0; c < 64; ++c) CHECK(a.rho[c] == 0.0);
}

TEST_CASE("on-grid mode lands every tissue on the reference grid") {
  const ParameterGrid grid = ParameterGrid::reference();
  const PhantomMaps maps = synthetic_phantom(32, PhantomLayout::Nested, TissueTable::mni(),
                                             GridMode::OnGrid, &grid);
  for (Index i = 0; i < maps.voxels(); ++i) {
    if (maps.rho[i] == 0.0) continue;
    CHECK(on_axis(maps.t1[i], grid.t1));
    CHECK(on_axis(maps.t2[i], grid.t2));
  }
}

TEST_CASE("off-grid mode leaves the reference grid but stays reproducible") {
  const ParameterGrid grid = ParameterGrid::reference();
  const PhantomMaps a = synthetic_phantom(32, PhantomLayout::Nested, TissueTable::mni(),
                                          GridMode::OffGrid, &grid, 0.03);
  const PhantomMaps b = synthetic_phantom(32, PhantomLayout::Nested, TissueTable::mni(),
                                          GridMode::OffGrid, &grid, 0.03);
  CHECK(a.t1 == b.t1);
  CHECK(a.t2 == b.t2);
  for (Index i = 0; i < a.voxels(); ++i) {
    if (a.rho[i] == 0.0) continue;
    CHECK(!on_axis(a.t1[i], grid.t1));
    CHECK(!on_axis(a.t2[i], grid.t2));
  }
}

TEST_CASE("an all-zero volume loads as pure background") {
  const std::string path =
      write_volume(std::vector<unsigned char>(kVolumeBytes, 0), "zero");
  const PhantomMaps maps = load_brainweb(path, 40, TissueTable::mni());
  CHECK(maps.side == 256);
  CHECK(maps.rho.isZero(0.0));
  std::remove(path.c_str());
}

TEST_CASE("a single-label volume maps to uniform grey matter inside the slice extent") {
  std::vector<unsigned char> bytes(kVolumeBytes, 2);
  const std::string path = write_volume(bytes, "grey");
  const PhantomMaps maps = load_brainweb(path, 40, TissueTable::mni());
  Index foreground = 0;
  for (Index i = 0; i < maps.voxels(); ++i) {
    if (maps.rho[i] == 0.0) continue;
    ++foreground;
    CHECK(maps.rho[i] == 100.0);
    CHECK(maps.t1[i] == 1545.0);
    CHECK(maps.t2[i] == 83.0);
  }
  CHECK(foreground == 181 * 217);
  std::remove(path.c_str());
}

TEST_CASE("slice extraction picks the requested plane and centres it") {
  std::vector<unsigned char> bytes(kVolumeBytes, 0);
  bytes[volume_index(0, 0, 40)] = 1;      // top-left of slice 40
  bytes[volume_index(180, 216, 40)] = 3;  // bottom-right
  bytes[volume_index(90, 100, 41)] = 2;   // wrong slice, must not appear
  bytes[volume_index(10, 20, 40)] = 9;    // unknown label collapses to background
  const std::string path = write_volume(bytes, "slice");
  const PhantomMaps maps = load_brainweb(path, 40, TissueTable::mni());

  const int row0 = (256 - 217) / 2;
  const int col0 = (256 - 181) / 2;
  CHECK(row0 == 19);
  CHECK(col0 == 37);
  CHECK(maps.rho[static_cast<Index>(row0) * 256 + col0] == 100.0);
  CHECK(maps.rho[static_cast<Index>(row0 + 216) * 256 + (col0 + 180)] == 80.0);
  CHECK((maps.rho.array() > 0.0).count() == 2);
  std::remove(path.c_str());
}

TEST_CASE("a truncated volume is rejected with the expected byte count") {
  const std::string path =
      write_volume(std::vector<unsigned char>(1024, 0), "short");
  try {
    load_brainweb(path, 40, TissueTable::mni());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("7109137") != std::string::npos);
  }
  std::remove(path.c_str());
}

// Pins the foreground voxel count of a real crisp segmentation; runs only
// when MRFCS_BRAINWEB_PATH points at the discrete anatomical volume.
TEST_CASE("genuine volume foreground count is stable") {
  const char* path = std::getenv("MRFCS_BRAINWEB_PATH");
  if (path == nullptr || *path == '\0') return;
  const PhantomMaps maps = load_brainweb(path, 40, TissueTable::mni());
  const Index count = (maps.rho.array() > 0.0).count();
  MESSAGE("brainweb slice 40 foreground voxels: ", count);
  CHECK(count > 10000);
  CHECK(count < 181 * 217);
}

TEST_CASE("the quadratic phase hits its corner and centre values") {
  const int side = 64;
  const double corner = std::numbers::pi / 4.0;
  CHECK(quadratic_phase_at(side, 0.0, 0.0, corner) == doctest::Approx(corner).epsilon(1e-15));
  CHECK(quadratic_phase_at(side, side - 1.0, 0.0, corner) ==
        doctest::Approx(corner).epsilon(1e-15));
  CHECK(quadratic_phase_at(side, (side - 1) / 2.0, (side - 1) / 2.0, corner) == 0.0);

  PhantomMaps maps = synthetic_phantom(16, PhantomLayout::Nested, TissueTable::mni());
  const PhantomMaps flat = apply_quadratic_phase(maps, 0.0);
  CHECK(flat.phase.isZero(0.0));
  const PhantomMaps curved = apply_quadratic_phase(maps, corner);
  CHECK(curved.phase[0] == doctest::Approx(corner).epsilon(1e-15));
}

TEST_CASE("a single-voxel phantom reproduces the voxel simulator") {
  const ExcitationSequence seq = generate_sequence(20, 10.0, 10.0, 5);
  PhantomMaps maps;
  maps.side = 2;
  maps.rho = Eigen::VectorXd::Zero(4);
  maps.t1 = Eigen::VectorXd::Zero(4);
  maps.t2 = Eigen::VectorXd::Zero(4);
  maps.df = Eigen::VectorXd::Zero(4);
  maps.rho[2] = 80.0;
  maps.t1[2] = 811.0;
  maps.t2[2] = 77.0;
  const ImageSequence x = maps_to_sequence(maps, seq);
  VoxelParams p;
  p.t1 = 811.0;
  p.t2 = 77.0;
  p.rho = Complex{80.0, 0.0};
  const CVector want = simulate_response(p, seq);
  CHECK(x.x.row(0).isZero(0.0));
  for (Index l = 0; l < seq.length(); ++l) CHECK(x.x(2, l) == want[l]);
}

TEST_CASE("the full desk-scale response sequence is pinned by hash") {
  const ExcitationSequence seq = generate_sequence(50, 10.0, 10.0, 424242);
  const ParameterGrid grid = ParameterGrid::reference();
  const PhantomMaps maps = synthetic_phantom(64, PhantomLayout::Nested, TissueTable::mni(),
                                             GridMode::OnGrid, &grid);
  const ImageSequence x = maps_to_sequence(maps, seq);
  std::uint64_t h = 14695981039346656037ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(x.x.data());
  for (Index i = 0; i < x.x.size() * static_cast<Index>(sizeof(Complex)); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  CHECK(h == 0x2513ad1466e1e1cdull);
}

TEST_CASE("doubling the density map doubles the sequence") {
  const ExcitationSequence seq = generate_sequence(16, 10.0, 10.0, 6);
  PhantomMaps maps = synthetic_phantom(16, PhantomLayout::Nested, TissueTable::mni());
  PhantomMaps doubled = maps;
  doubled.rho *= 2.0;
  const ImageSequence x1 = maps_to_sequence(maps, seq);
  const ImageSequence x2 = maps_to_sequence(doubled, seq);
  CHECK(x2.x == 2.0 * x1.x);
}

TEST_CASE("tissue responses stay pairwise separated at moderate length") {
  const ExcitationSequence seq = generate_sequence(50, 10.0, 10.0, 8);
  const auto rows = flatness_report(TissueTable::mni(), 10.0, 10.0, 8, {50});
  for (const auto& r : rows) {
    CAPTURE(r.tissue_a);
    CAPTURE(r.tissue_b);
    CHECK(r.lambda > 0.0);
  }
  CHECK(rows.size() == 10);  // 5 distinct tissues, identical pair skipped
}
