#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mrfcs/dictionary.hpp"
#include "mrfcs/types.hpp"

namespace mrfcs {

// One row of the tissue property table: segmentation label to
// (proton density, T1, T2). Label 0 is background with rho = 0.
struct TissueRow {
  int label;
  std::string name;
  double rho;
  double t1;
  double t2;
};

struct TissueTable {
  std::vector<TissueRow> rows;

  const TissueRow* find(int label) const;
  void validate() const;

  // MNI segmented brain values: CSF(100,5012,512), grey matter(100,1545,83),
  // white matter(80,811,77), adipose(80,530,77), skin/muscle(80,1425,41);
  // labels 5 and 6 share the skin/muscle row.
  static TissueTable mni();
};

// Ground-truth parameter maps. Background voxels carry rho = 0 and T1=T2=0;
// phase is empty unless the complex-density experiment is active.
struct PhantomMaps {
  int side = 0;
  Eigen::VectorXd rho;
  Eigen::VectorXd t1;
  Eigen::VectorXd t2;
  Eigen::VectorXd df;
  Eigen::VectorXd phase;

  Index voxels() const { return rho.size(); }
  Eigen::Array<bool, Eigen::Dynamic, 1> foreground() const { return rho.array() > 0.0; }
};

// Raw BrainWeb crisp segmentation: unsigned bytes, 181 x 217 x 181 (x fastest,
// then y, then z). Extracts the axial plane at slice_index as a 217 x 181
// (y by x) image, maps labels through the table (labels outside 0..6 become
// background), and zero-pads centered to 256 x 256.
PhantomMaps load_brainweb(const std::string& path, int slice_index, const TissueTable& table);

enum class PhantomLayout { Uniform, Nested };

// Tissue parameters verbatim from the table, snapped to the nearest grid
// point, or snapped and then pushed off-grid by a relative fraction with a
// sign alternating per tissue row.
enum class GridMode { Verbatim, OnGrid, OffGrid };

// Deterministic synthetic phantom: Uniform fills the frame with the first
// non-background tissue; Nested draws concentric rectangles with an ellipse
// and a disc inside, using every table tissue.
PhantomMaps synthetic_phantom(int side, PhantomLayout layout, const TissueTable& table,
                              GridMode mode = GridMode::Verbatim,
                              const ParameterGrid* snap_grid = nullptr,
                              double off_grid_fraction = 0.03);

// Quadratic phase that is zero at the image centre and corner_phase at the
// four corners, evaluated at pixel centres.
double quadratic_phase_at(int side, double row, double col, double corner_phase);
PhantomMaps apply_quadratic_phase(PhantomMaps maps, double corner_phase);

// Full response map: row i of the result is rho_i e^{j phase_i} B(theta_i).
ImageSequence maps_to_sequence(const PhantomMaps& maps, const ExcitationSequence& seq);

void write_maps_csv(const PhantomMaps& maps, const std::string& path);
// 8-bit PGM of one map ("rho", "t1", "t2", "df", "phase"), min-max scaled.
void write_map_pgm(const PhantomMaps& maps, const std::string& which, const std::string& path);

}  // namespace mrfcs
