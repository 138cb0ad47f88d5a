#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrfcs/types.hpp"

namespace mrfcs {

// Cartesian sampling grid of the (T1, T2, df) parameter space. Atom k maps to
// grid point (t1[i1], t2[i2], df[i3]) with k = (i1 * |t2| + i2) * |df| + i3,
// i.e. lexicographic with T1 outermost.
struct ParameterGrid {
  std::vector<double> t1;
  std::vector<double> t2;
  std::vector<double> df;

  Index size() const {
    return static_cast<Index>(t1.size()) * static_cast<Index>(t2.size()) *
           static_cast<Index>(df.size());
  }
  void validate() const;
  VoxelParams point(Index k) const;

  // T1 100:20:2000 and 2300:300:6000, T2 20:5:100, 110:10:200 and
  // 400:200:1000, df = {0}; 3379 atoms in total.
  static ParameterGrid reference();
};

// Discretized response manifold: P unit-density atoms with cached norms and
// the inverse lookup from atom index to grid parameters.
class BlochDictionary {
 public:
  BlochDictionary() = default;

  const CMatrix& atoms() const { return atoms_; }
  const CMatrix& normalized_atoms() const { return normalized_; }
  // [Re | Im] of the normalized atoms, for real-correlation matrix products.
  const Eigen::MatrixXd& normalized_stacked() const { return stacked_; }
  const Eigen::VectorXd& norms() const { return norms_; }
  const ParameterGrid& grid() const { return grid_; }
  const ExcitationSequence& sequence() const { return seq_; }
  Index size() const { return atoms_.rows(); }
  Index length() const { return atoms_.cols(); }

  void save(const std::string& path) const;
  void save_csv(const std::string& path) const;
  static BlochDictionary load(const std::string& path);

  friend BlochDictionary build_dictionary(const ParameterGrid& grid,
                                          const ExcitationSequence& seq);

 private:
  CMatrix atoms_;            // P x L
  CMatrix normalized_;       // rows scaled to unit norm
  Eigen::MatrixXd stacked_;  // P x 2L
  Eigen::VectorXd norms_;
  ParameterGrid grid_;
  ExcitationSequence seq_;

  void finalize();
};

BlochDictionary build_dictionary(const ParameterGrid& grid, const ExcitationSequence& seq);

// Grid parameters of atom k (unit density). Out-of-range k throws.
VoxelParams lut_lookup(Index k, const BlochDictionary& dict);

// Projection of one voxel sequence onto the cone of the discretized manifold,
// real non-negative density model: k maximizes Re<D_k,x>/|D_k|, rho is the
// clamped correlation divided by the squared atom norm. Ties take the lowest
// atom index. Inner products are conj(a).b sums.
struct RealProjection {
  Index atom;
  double rho;
};
RealProjection project_voxel_real(const CVector& x, const BlochDictionary& dict);

// Complex-density variant: k maximizes |<D_k,x>|/|D_k|, rho is unclamped.
struct ComplexProjection {
  Index atom;
  Complex rho;
};
ComplexProjection project_voxel_complex(const CVector& x, const BlochDictionary& dict);

// Batch projections over the rows of X. z_out holds the clamped correlation
// with the *normalized* atom, so rho = z / norm(atom); recon feeds z through
// the spatial regularizer as the pseudo-density.
void project_rows_real(const CMatrix& X, const BlochDictionary& dict,
                       Eigen::VectorXi& atom_out, Eigen::VectorXd& z_out);
void project_rows_complex(const CMatrix& X, const BlochDictionary& dict,
                          Eigen::VectorXi& atom_out, CVector& rho_out);

// |u|_inf / |u|_2 of a chord; in [L^-1/2, 1]. Zero vectors throw.
double chord_flatness(const CVector& u);

// FNV-1a over the flip-angle and TR bytes; identifies the sequence a cached
// dictionary was built from.
std::uint64_t sequence_hash(const ExcitationSequence& seq);

}  // namespace mrfcs
