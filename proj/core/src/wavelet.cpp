#include "mrfcs/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace mrfcs {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void check_side(const Eigen::MatrixXd& m, const char* who) {
  const Index n = m.rows();
  if (n != m.cols() || n <= 0 || (n & (n - 1)) != 0) {
    throw ConfigError(std::string(who) + ": side must be a square power of two");
  }
}

// In-place single-level analysis of the first s entries of each touched
// row/column: averages land in the front half, details in the back half.
void analyze_rows(Eigen::MatrixXd& a, Index s) {
  Eigen::VectorXd tmp(s);
  for (Index r = 0; r < s; ++r) {
    for (Index c = 0; c < s / 2; ++c) {
      const double u = a(r, 2 * c);
      const double v = a(r, 2 * c + 1);
      tmp[c] = (u + v) * kInvSqrt2;
      tmp[s / 2 + c] = (u - v) * kInvSqrt2;
    }
    a.row(r).head(s) = tmp.transpose();
  }
}

void analyze_cols(Eigen::MatrixXd& a, Index s) {
  Eigen::VectorXd tmp(s);
  for (Index c = 0; c < s; ++c) {
    for (Index r = 0; r < s / 2; ++r) {
      const double u = a(2 * r, c);
      const double v = a(2 * r + 1, c);
      tmp[r] = (u + v) * kInvSqrt2;
      tmp[s / 2 + r] = (u - v) * kInvSqrt2;
    }
    a.col(c).head(s) = tmp;
  }
}

void synthesize_rows(Eigen::MatrixXd& a, Index s) {
  Eigen::VectorXd tmp(s);
  for (Index r = 0; r < s; ++r) {
    for (Index c = 0; c < s / 2; ++c) {
      const double u = a(r, c);
      const double v = a(r, s / 2 + c);
      tmp[2 * c] = (u + v) * kInvSqrt2;
      tmp[2 * c + 1] = (u - v) * kInvSqrt2;
    }
    a.row(r).head(s) = tmp.transpose();
  }
}

void synthesize_cols(Eigen::MatrixXd& a, Index s) {
  Eigen::VectorXd tmp(s);
  for (Index c = 0; c < s; ++c) {
    for (Index r = 0; r < s / 2; ++r) {
      const double u = a(r, c);
      const double v = a(s / 2 + r, c);
      tmp[2 * r] = (u + v) * kInvSqrt2;
      tmp[2 * r + 1] = (u - v) * kInvSqrt2;
    }
    a.col(c).head(s) = tmp;
  }
}

}  // namespace

Eigen::MatrixXd haar2(const Eigen::MatrixXd& image) {
  check_side(image, "haar2");
  Eigen::MatrixXd a = image;
  for (Index s = a.rows(); s >= 2; s /= 2) {
    analyze_rows(a, s);
    analyze_cols(a, s);
  }
  return a;
}

Eigen::MatrixXd ihaar2(const Eigen::MatrixXd& coeffs) {
  check_side(coeffs, "ihaar2");
  Eigen::MatrixXd a = coeffs;
  for (Index s = 2; s <= a.rows(); s *= 2) {
    synthesize_cols(a, s);
    synthesize_rows(a, s);
  }
  return a;
}

Eigen::VectorXd hard_threshold(const Eigen::VectorXd& c, Index k) {
  const Index n = c.size();
  if (k < 0) throw ConfigError("hard_threshold: negative count");
  if (k >= n) return c;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (k == 0) return out;
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::nth_element(idx.begin(), idx.begin() + k, idx.end(), [&c](Index a, Index b) {
    const double ma = std::abs(c[a]);
    const double mb = std::abs(c[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
  for (Index i = 0; i < k; ++i) out[idx[static_cast<std::size_t>(i)]] = c[idx[static_cast<std::size_t>(i)]];
  return out;
}

}  // namespace mrfcs
