#include "mrfcs/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "mrfcs/bloch.hpp"

namespace mrfcs {

namespace {

std::vector<double> arithmetic_range(double start, double step, double stop) {
  std::vector<double> values;
  for (int i = 0;; ++i) {
    const double v = start + step * i;
    if (v > stop + 1e-9 * step) break;
    values.push_back(v);
  }
  return values;
}

void append_range(std::vector<double>& dst, double start, double step, double stop) {
  const auto r = arithmetic_range(start, step, stop);
  dst.insert(dst.end(), r.begin(), r.end());
}

}  // namespace

void ParameterGrid::validate() const {
  if (t1.empty() || t2.empty() || df.empty()) {
    throw ConfigError("ParameterGrid: empty axis");
  }
  auto check_axis = [](const std::vector<double>& v, const char* name, double min_allowed) {
    double prev = -std::numeric_limits<double>::infinity();
    for (const double x : v) {
      if (!std::isfinite(x) || x < min_allowed) {
        throw ConfigError(std::string("ParameterGrid: invalid ") + name + " value " +
                          std::to_string(x));
      }
      if (x <= prev) {
        throw ConfigError(std::string("ParameterGrid: ") + name +
                          " values must be strictly increasing");
      }
      prev = x;
    }
  };
  check_axis(t1, "T1", std::nextafter(0.0, 1.0));
  check_axis(t2, "T2", std::nextafter(0.0, 1.0));
  check_axis(df, "df", 0.0);
}

VoxelParams ParameterGrid::point(Index k) const {
  if (k < 0 || k >= size()) {
    throw ConfigError("ParameterGrid: atom index " + std::to_string(k) + " out of range [0," +
                      std::to_string(size()) + ")");
  }
  const Index n_df = static_cast<Index>(df.size());
  const Index n_t2 = static_cast<Index>(t2.size());
  VoxelParams p;
  p.off_resonance = df[static_cast<std::size_t>(k % n_df)];
  p.t2 = t2[static_cast<std::size_t>((k / n_df) % n_t2)];
  p.t1 = t1[static_cast<std::size_t>(k / (n_df * n_t2))];
  return p;
}

ParameterGrid ParameterGrid::reference() {
  ParameterGrid g;
  append_range(g.t1, 100.0, 20.0, 2000.0);
  append_range(g.t1, 2300.0, 300.0, 6000.0);
  append_range(g.t2, 20.0, 5.0, 100.0);
  append_range(g.t2, 110.0, 10.0, 200.0);
  append_range(g.t2, 400.0, 200.0, 1000.0);
  g.df = {0.0};
  return g;
}

void BlochDictionary::finalize() {
  const Index P = atoms_.rows();
  const Index L = atoms_.cols();
  norms_ = atoms_.rowwise().norm();
  for (Index k = 0; k < P; ++k) {
    if (!(norms_[k] > 0.0)) {
      const VoxelParams p = grid_.point(k);
      throw ConfigError("dictionary: zero-norm atom at T1=" + std::to_string(p.t1) +
                        " T2=" + std::to_string(p.t2) + " df=" + std::to_string(p.off_resonance));
    }
  }
  normalized_ = norms_.cwiseInverse().asDiagonal() * atoms_;
  stacked_.resize(P, 2 * L);
  stacked_.leftCols(L) = normalized_.real();
  stacked_.rightCols(L) = normalized_.imag();
}

BlochDictionary build_dictionary(const ParameterGrid& grid, const ExcitationSequence& seq) {
  grid.validate();
  seq.validate();
  BlochDictionary dict;
  dict.grid_ = grid;
  dict.seq_ = seq;
  const Index P = grid.size();
  const Index L = seq.length();
  dict.atoms_.resize(P, L);
  for (Index k = 0; k < P; ++k) {
    dict.atoms_.row(k) = simulate_unit_response(grid.point(k), seq).transpose();
  }
  dict.finalize();
  return dict;
}

VoxelParams lut_lookup(Index k, const BlochDictionary& dict) {
  return dict.grid().point(k);
}

RealProjection project_voxel_real(const CVector& x, const BlochDictionary& dict) {
  if (!x.allFinite()) throw ConfigError("project_voxel_real: non-finite input");
  CMatrix X = x.transpose();
  Eigen::VectorXi atom(1);
  Eigen::VectorXd z(1);
  project_rows_real(X, dict, atom, z);
  return {atom[0], z[0] / dict.norms()[atom[0]]};
}

ComplexProjection project_voxel_complex(const CVector& x, const BlochDictionary& dict) {
  if (!x.allFinite()) throw ConfigError("project_voxel_complex: non-finite input");
  CMatrix X = x.transpose();
  Eigen::VectorXi atom(1);
  CVector rho(1);
  project_rows_complex(X, dict, atom, rho);
  return {atom[0], rho[0]};
}

void project_rows_real(const CMatrix& X, const BlochDictionary& dict,
                       Eigen::VectorXi& atom_out, Eigen::VectorXd& z_out) {
  const Index N = X.rows();
  const Index L = X.cols();
  if (L != dict.length()) throw ConfigError("project_rows_real: sequence length mismatch");
  atom_out.resize(N);
  z_out.resize(N);

  Eigen::MatrixXd Xs(N, 2 * L);
  Xs.leftCols(L) = X.real();
  Xs.rightCols(L) = X.imag();

  const Index block = 1024;
  Eigen::MatrixXd scores;
  for (Index v0 = 0; v0 < N; v0 += block) {
    const Index nb = std::min(block, N - v0);
    scores.noalias() = dict.normalized_stacked() * Xs.middleRows(v0, nb).transpose();
    for (Index j = 0; j < nb; ++j) {
      Index best = 0;
      const double top = scores.col(j).maxCoeff(&best);
      atom_out[v0 + j] = static_cast<int>(best);
      z_out[v0 + j] = std::max(top, 0.0);
    }
  }
}

void project_rows_complex(const CMatrix& X, const BlochDictionary& dict,
                          Eigen::VectorXi& atom_out, CVector& rho_out) {
  const Index N = X.rows();
  const Index L = X.cols();
  if (L != dict.length()) throw ConfigError("project_rows_complex: sequence length mismatch");
  atom_out.resize(N);
  rho_out.resize(N);

  const Index block = 1024;
  CMatrix corr;
  for (Index v0 = 0; v0 < N; v0 += block) {
    const Index nb = std::min(block, N - v0);
    corr.noalias() = dict.normalized_atoms().conjugate() * X.middleRows(v0, nb).transpose();
    for (Index j = 0; j < nb; ++j) {
      Index best = 0;
      corr.col(j).cwiseAbs2().maxCoeff(&best);
      atom_out[v0 + j] = static_cast<int>(best);
      rho_out[v0 + j] = corr(best, j) / dict.norms()[best];
    }
  }
}

double chord_flatness(const CVector& u) {
  const double l2 = u.norm();
  if (!(l2 > 0.0)) throw ConfigError("chord_flatness: zero vector");
  return u.cwiseAbs().maxCoeff() / l2;
}

std::uint64_t sequence_hash(const ExcitationSequence& seq) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const double* data, Index n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (Index i = 0; i < n * static_cast<Index>(sizeof(double)); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  mix(seq.flip_angles.data(), seq.flip_angles.size());
  mix(seq.repetition_times.data(), seq.repetition_times.size());
  return h;
}

namespace {

constexpr char kMagic[8] = {'M', 'R', 'F', 'D', 'I', 'C', 'T', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

void write_doubles(std::ofstream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

void BlochDictionary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("dictionary: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint64_t>(out, grid_.t1.size());
  write_pod<std::uint64_t>(out, grid_.t2.size());
  write_pod<std::uint64_t>(out, grid_.df.size());
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(length()));
  write_pod<std::uint64_t>(out, sequence_hash(seq_));
  write_doubles(out, grid_.t1.data(), grid_.t1.size());
  write_doubles(out, grid_.t2.data(), grid_.t2.size());
  write_doubles(out, grid_.df.data(), grid_.df.size());
  write_doubles(out, seq_.flip_angles.data(), static_cast<std::size_t>(seq_.length()));
  write_doubles(out, seq_.repetition_times.data(), static_cast<std::size_t>(seq_.length()));
  write_doubles(out, reinterpret_cast<const double*>(atoms_.data()),
                static_cast<std::size_t>(atoms_.size()) * 2);
  if (!out) throw ConfigError("dictionary: write failed for " + path);
}

BlochDictionary BlochDictionary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("dictionary: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("dictionary: " + path + " is not a dictionary file");
  }
  BlochDictionary dict;
  const auto n_t1 = read_pod<std::uint64_t>(in);
  const auto n_t2 = read_pod<std::uint64_t>(in);
  const auto n_df = read_pod<std::uint64_t>(in);
  const auto L = static_cast<Index>(read_pod<std::uint64_t>(in));
  const auto stored_hash = read_pod<std::uint64_t>(in);
  dict.grid_.t1.resize(n_t1);
  dict.grid_.t2.resize(n_t2);
  dict.grid_.df.resize(n_df);
  read_doubles(in, dict.grid_.t1.data(), n_t1);
  read_doubles(in, dict.grid_.t2.data(), n_t2);
  read_doubles(in, dict.grid_.df.data(), n_df);
  dict.seq_.flip_angles.resize(L);
  dict.seq_.repetition_times.resize(L);
  read_doubles(in, dict.seq_.flip_angles.data(), static_cast<std::size_t>(L));
  read_doubles(in, dict.seq_.repetition_times.data(), static_cast<std::size_t>(L));
  dict.grid_.validate();
  dict.seq_.validate();
  if (sequence_hash(dict.seq_) != stored_hash) {
    throw ConfigError("dictionary: sequence hash mismatch in " + path);
  }
  dict.atoms_.resize(dict.grid_.size(), L);
  read_doubles(in, reinterpret_cast<double*>(dict.atoms_.data()),
               static_cast<std::size_t>(dict.atoms_.size()) * 2);
  if (!in) throw ConfigError("dictionary: truncated file " + path);
  dict.finalize();
  return dict;
}

void BlochDictionary::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("dictionary: cannot open " + path + " for writing");
  char buf[160];
  out << "# mrfcs dictionary v1\n";
  std::snprintf(buf, sizeof(buf), "%#018llx",
                static_cast<unsigned long long>(sequence_hash(seq_)));
  out << "# sequence_hash " << buf << "\n";
  out << "# grid t1 " << grid_.t1.size() << " t2 " << grid_.t2.size() << " df "
      << grid_.df.size() << "\n";
  out << "atom,t1_ms,t2_ms,df_hz,norm";
  for (Index l = 0; l < length(); ++l) out << ",re" << l << ",im" << l;
  out << "\n";
  for (Index k = 0; k < size(); ++k) {
    const VoxelParams p = grid_.point(k);
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g",
                  static_cast<long long>(k), p.t1, p.t2, p.off_resonance, norms_[k]);
    out << buf;
    for (Index l = 0; l < length(); ++l) {
      std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", atoms_(k, l).real(), atoms_(k, l).imag());
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace mrfcs
