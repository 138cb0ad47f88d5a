#include "mrfcs/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "mrfcs/bloch.hpp"

namespace mrfcs {

namespace {

constexpr int kBrainwebX = 181;
constexpr int kBrainwebY = 217;
constexpr int kBrainwebZ = 181;
constexpr int kBrainwebPadded = 256;

double snap_to_axis(double v, const std::vector<double>& axis) {
  const auto it = std::lower_bound(axis.begin(), axis.end(), v);
  if (it == axis.begin()) return axis.front();
  if (it == axis.end()) return axis.back();
  const double hi = *it;
  const double lo = *(it - 1);
  return (v - lo) <= (hi - v) ? lo : hi;
}

}  // namespace

const TissueRow* TissueTable::find(int label) const {
  for (const auto& row : rows) {
    if (row.label == label) return &row;
  }
  return nullptr;
}

void TissueTable::validate() const {
  std::set<int> seen;
  for (const auto& row : rows) {
    if (!seen.insert(row.label).second) {
      throw ConfigError("TissueTable: duplicate label " + std::to_string(row.label));
    }
    if (row.rho < 0.0) throw ConfigError("TissueTable: negative density");
    if (row.rho > 0.0 && (row.t1 <= 0.0 || row.t2 <= 0.0)) {
      throw ConfigError("TissueTable: non-positive relaxation time for " + row.name);
    }
  }
  const TissueRow* bg = find(0);
  if (bg == nullptr || bg->rho != 0.0) {
    throw ConfigError("TissueTable: label 0 must be background with rho = 0");
  }
}

TissueTable TissueTable::mni() {
  TissueTable t;
  t.rows = {
      {0, "background", 0.0, 0.0, 0.0},
      {1, "csf", 100.0, 5012.0, 512.0},
      {2, "grey-matter", 100.0, 1545.0, 83.0},
      {3, "white-matter", 80.0, 811.0, 77.0},
      {4, "adipose", 80.0, 530.0, 77.0},
      {5, "skin-muscle", 80.0, 1425.0, 41.0},
      {6, "skin-muscle", 80.0, 1425.0, 41.0},
  };
  return t;
}

PhantomMaps load_brainweb(const std::string& path, int slice_index, const TissueTable& table) {
  table.validate();
  if (slice_index < 0 || slice_index >= kBrainwebZ) {
    throw ConfigError("load_brainweb: slice index out of range [0,181)");
  }
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw ConfigError("load_brainweb: cannot open " + path);
  const auto size = static_cast<long long>(in.tellg());
  const long long expected =
      static_cast<long long>(kBrainwebX) * kBrainwebY * kBrainwebZ;
  if (size != expected) {
    throw ConfigError("load_brainweb: " + path + " is " + std::to_string(size) +
                      " bytes, expected " + std::to_string(expected));
  }
  std::vector<unsigned char> plane(static_cast<std::size_t>(kBrainwebX) * kBrainwebY);
  in.seekg(static_cast<std::streamoff>(plane.size()) * slice_index);
  in.read(reinterpret_cast<char*>(plane.data()), static_cast<std::streamsize>(plane.size()));
  if (!in) throw ConfigError("load_brainweb: short read from " + path);

  const int side = kBrainwebPadded;
  PhantomMaps maps;
  maps.side = side;
  maps.rho = Eigen::VectorXd::Zero(static_cast<Index>(side) * side);
  maps.t1 = Eigen::VectorXd::Zero(maps.rho.size());
  maps.t2 = Eigen::VectorXd::Zero(maps.rho.size());
  maps.df = Eigen::VectorXd::Zero(maps.rho.size());

  const int row0 = (side - kBrainwebY) / 2;
  const int col0 = (side - kBrainwebX) / 2;
  for (int y = 0; y < kBrainwebY; ++y) {
    for (int x = 0; x < kBrainwebX; ++x) {
      const int label = plane[static_cast<std::size_t>(y) * kBrainwebX + x];
      const TissueRow* row = label <= 6 ? table.find(label) : nullptr;
      if (row == nullptr || row->rho == 0.0) continue;
      const Index i = static_cast<Index>(row0 + y) * side + (col0 + x);
      maps.rho[i] = row->rho;
      maps.t1[i] = row->t1;
      maps.t2[i] = row->t2;
    }
  }
  return maps;
}

namespace {

struct TissueChoice {
  double rho, t1, t2;
};

std::vector<TissueChoice> resolve_tissues(const TissueTable& table, GridMode mode,
                                          const ParameterGrid* snap_grid, double frac) {
  const ParameterGrid fallback = ParameterGrid::reference();
  const ParameterGrid& grid = snap_grid != nullptr ? *snap_grid : fallback;
  std::vector<TissueChoice> out;
  int j = 0;
  for (const auto& row : table.rows) {
    if (row.rho == 0.0) continue;
    TissueChoice c{row.rho, row.t1, row.t2};
    if (mode != GridMode::Verbatim) {
      c.t1 = snap_to_axis(c.t1, grid.t1);
      c.t2 = snap_to_axis(c.t2, grid.t2);
    }
    if (mode == GridMode::OffGrid) {
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      c.t1 *= 1.0 + sign * frac;
      c.t2 *= 1.0 + sign * frac;
    }
    out.push_back(c);
    ++j;
  }
  if (out.empty()) throw ConfigError("synthetic_phantom: table has no foreground tissue");
  return out;
}

void paint(PhantomMaps& maps, Index i, const TissueChoice& c) {
  maps.rho[i] = c.rho;
  maps.t1[i] = c.t1;
  maps.t2[i] = c.t2;
}

}  // namespace

PhantomMaps synthetic_phantom(int side, PhantomLayout layout, const TissueTable& table,
                              GridMode mode, const ParameterGrid* snap_grid,
                              double off_grid_fraction) {
  table.validate();
  if (side <= 0 || (side & (side - 1)) != 0) {
    throw ConfigError("synthetic_phantom: side must be a power of two");
  }
  const auto tissues = resolve_tissues(table, mode, snap_grid, off_grid_fraction);

  PhantomMaps maps;
  maps.side = side;
  maps.rho = Eigen::VectorXd::Zero(static_cast<Index>(side) * side);
  maps.t1 = Eigen::VectorXd::Zero(maps.rho.size());
  maps.t2 = Eigen::VectorXd::Zero(maps.rho.size());
  maps.df = Eigen::VectorXd::Zero(maps.rho.size());

  auto tissue = [&tissues](std::size_t j) { return tissues[j % tissues.size()]; };

  if (layout == PhantomLayout::Uniform) {
    for (Index i = 0; i < maps.voxels(); ++i) paint(maps, i, tissue(0));
    return maps;
  }

  const int m0 = side / 8;
  const int m1 = side / 4;
  const int m2 = 3 * side / 8;
  const double c = (side - 1) / 2.0;
  const double ea = std::max(1, 3 * side / 32);
  const double eb = std::max(1, 3 * side / 64);
  const double disc_r = std::max(1, side / 32);
  const double disc_row = m1 + (m2 - m1) / 2.0;

  for (int r = 0; r < side; ++r) {
    for (int col = 0; col < side; ++col) {
      const Index i = static_cast<Index>(r) * side + col;
      const bool inside = r >= m0 && r < side - m0 && col >= m0 && col < side - m0;
      if (!inside) continue;  // background frame
      if (r < m1 || r >= side - m1 || col < m1 || col >= side - m1) {
        paint(maps, i, tissue(0));  // outer ring
      } else if (r < m2 || r >= side - m2 || col < m2 || col >= side - m2) {
        paint(maps, i, tissue(1));  // middle ring
      } else {
        paint(maps, i, tissue(2));  // core block
      }
      const double dr = (r - c) / ea;
      const double dc = (col - c) / eb;
      if (dr * dr + dc * dc <= 1.0) paint(maps, i, tissue(3));
      const double sr = r - disc_row;
      const double sc = col - c;
      if (sr * sr + sc * sc <= disc_r * disc_r) paint(maps, i, tissue(4));
    }
  }
  return maps;
}

double quadratic_phase_at(int side, double row, double col, double corner_phase) {
  const double c = (side - 1) / 2.0;
  const double r2_corner = 2.0 * c * c;
  const double dr = row - c;
  const double dc = col - c;
  return corner_phase * (dr * dr + dc * dc) / r2_corner;
}

PhantomMaps apply_quadratic_phase(PhantomMaps maps, double corner_phase) {
  maps.phase.resize(maps.voxels());
  for (Index i = 0; i < maps.voxels(); ++i) {
    const auto r = static_cast<double>(i / maps.side);
    const auto col = static_cast<double>(i % maps.side);
    maps.phase[i] = quadratic_phase_at(maps.side, r, col, corner_phase);
  }
  return maps;
}

ImageSequence maps_to_sequence(const PhantomMaps& maps, const ExcitationSequence& seq) {
  seq.validate();
  if (maps.voxels() != static_cast<Index>(maps.side) * maps.side) {
    throw ConfigError("maps_to_sequence: map size does not match side");
  }
  ImageSequence out;
  out.side = maps.side;
  out.x = CMatrix::Zero(maps.voxels(), seq.length());

  std::map<std::tuple<double, double, double>, CVector> cache;
  for (Index i = 0; i < maps.voxels(); ++i) {
    if (maps.rho[i] == 0.0) continue;
    const auto key = std::make_tuple(maps.t1[i], maps.t2[i], maps.df[i]);
    auto it = cache.find(key);
    if (it == cache.end()) {
      VoxelParams p;
      p.t1 = maps.t1[i];
      p.t2 = maps.t2[i];
      p.off_resonance = maps.df[i];
      it = cache.emplace(key, simulate_unit_response(p, seq)).first;
    }
    Complex rho{maps.rho[i], 0.0};
    if (maps.phase.size() == maps.voxels()) {
      rho *= Complex{std::cos(maps.phase[i]), std::sin(maps.phase[i])};
    }
    out.x.row(i) = rho * it->second.transpose();
  }
  return out;
}

void write_maps_csv(const PhantomMaps& maps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_maps_csv: cannot open " + path);
  const bool has_phase = maps.phase.size() == maps.voxels();
  out << "voxel,row,col,rho,t1_ms,t2_ms,df_hz" << (has_phase ? ",phase_rad" : "") << "\n";
  char buf[192];
  for (Index i = 0; i < maps.voxels(); ++i) {
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%lld,%.17g,%.17g,%.17g,%.17g",
                  static_cast<long long>(i), static_cast<long long>(i / maps.side),
                  static_cast<long long>(i % maps.side), maps.rho[i], maps.t1[i], maps.t2[i],
                  maps.df[i]);
    out << buf;
    if (has_phase) {
      std::snprintf(buf, sizeof(buf), ",%.17g", maps.phase[i]);
      out << buf;
    }
    out << "\n";
  }
}

void write_map_pgm(const PhantomMaps& maps, const std::string& which, const std::string& path) {
  const Eigen::VectorXd* map = nullptr;
  if (which == "rho") map = &maps.rho;
  else if (which == "t1") map = &maps.t1;
  else if (which == "t2") map = &maps.t2;
  else if (which == "df") map = &maps.df;
  else if (which == "phase") map = &maps.phase;
  if (map == nullptr || map->size() != maps.voxels()) {
    throw ConfigError("write_map_pgm: no map named " + which);
  }
  const double lo = map->minCoeff();
  const double hi = map->maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_map_pgm: cannot open " + path);
  out << "P5\n" << maps.side << " " << maps.side << "\n255\n";
  for (Index i = 0; i < map->size(); ++i) {
    const auto v = static_cast<unsigned char>(std::lround(255.0 * ((*map)[i] - lo) / span));
    out.put(static_cast<char>(v));
  }
}

}  // namespace mrfcs
