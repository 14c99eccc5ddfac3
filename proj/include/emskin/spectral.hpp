#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cstdio>
#include <fstream>
#include <string>

#include "emskin/errors.hpp"
#include "emskin/forward.hpp"

namespace emskin {

/// Full SVD of the scalar radiation kernel plus the eta_svd truncation split.
/// Modes 1..s_th (sigma_s / sigma_1 >= eta_svd) span the pre-image space;
/// the remaining modes radiate below threshold and form the usable null
/// space. Immutable after construction.
struct SpectralDecomposition {
  Eigen::VectorXd singular_values;  // length S = min(M, P*Q), non-increasing
  Eigen::MatrixXcd left;            // M x S, orthonormal columns U_s
  Eigen::MatrixXcd right;           // (P*Q) x S, orthonormal columns V_s
  int s_th = 0;
  double eta_svd = 0.0;

  int mode_count() const { return static_cast<int>(singular_values.size()); }
  int null_count() const { return mode_count() - s_th; }

  /// Null-space basis (columns s_th+1..S in ascending s order).
  Eigen::Ref<const Eigen::MatrixXcd> null_basis() const {
    return right.rightCols(null_count());
  }
};

inline SpectralDecomposition decompose_kernel(const Eigen::MatrixXcd& kernel, double eta_svd) {
  if (!(eta_svd > 0.0 && eta_svd < 1.0))
    throw ValidationError("spectral: eta_svd must lie in (0, 1)");

  Eigen::BDCSVD<Eigen::MatrixXcd> svd;
  svd.compute(kernel, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw ComputeError("spectral: SVD of the radiation kernel failed");

  SpectralDecomposition dec;
  dec.singular_values = svd.singularValues();
  dec.left = svd.matrixU();
  dec.right = svd.matrixV();
  dec.eta_svd = eta_svd;

  const double s1 = dec.singular_values(0);
  if (!(s1 > 0.0)) throw ComputeError("spectral: radiation kernel has zero leading singular value");
  int count = 0;
  while (count < dec.mode_count() && dec.singular_values(count) / s1 >= eta_svd) ++count;
  dec.s_th = count;
  return dec;
}

inline SpectralDecomposition decompose(const RadiationOperator& op, double eta_svd) {
  return decompose_kernel(op.kernel(), eta_svd);
}

/// Minimum-norm current radiating the retained part of the target:
/// J_PI = sum_{s<=s_th} (1/sigma_s) V_s <target, U_s>, per component.
inline CurrentVector pre_image_current(const SpectralDecomposition& dec,
                                       const FieldVector& target) {
  if (target.size() != dec.left.rows())
    throw ValidationError("spectral: target length does not match the observation domain");
  const auto u_t = dec.left.leftCols(dec.s_th);
  const auto v_t = dec.right.leftCols(dec.s_th);
  const auto inv_sigma = dec.singular_values.head(dec.s_th).cwiseInverse();
  CurrentVector j;
  j.x = v_t * (inv_sigma.asDiagonal() * (u_t.adjoint() * target.x).eval());
  j.y = v_t * (inv_sigma.asDiagonal() * (u_t.adjoint() * target.y).eval());
  return j;
}

/// Null-space current J_NS = sum_{s>s_th} beta_s V_s, polarized along the
/// transverse axis (default: the broadside TE axis, +y).
inline CurrentVector null_space_current(const SpectralDecomposition& dec,
                                        const Eigen::VectorXcd& beta,
                                        const CVec2& axis = CVec2(0.0, 1.0)) {
  if (beta.size() != dec.null_count())
    throw ValidationError("spectral: beta length must equal the null-space mode count");
  CurrentVector j(dec.right.rows());
  if (beta.size() > 0) {
    const Eigen::VectorXcd w = dec.null_basis() * beta;
    j.x = w * axis(0);
    j.y = w * axis(1);
  }
  return j;
}

/// J_tilde = J_PI + J_NS(beta).
inline CurrentVector total_current(const SpectralDecomposition& dec, const FieldVector& target,
                                   const Eigen::VectorXcd& beta,
                                   const CVec2& axis = CVec2(0.0, 1.0)) {
  return pre_image_current(dec, target) + null_space_current(dec, beta, axis);
}

/// Normalized spectrum CSV: "s,sigma_normalized", one row per mode.
inline void write_spectrum_csv(const SpectralDecomposition& dec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("spectral: cannot open '" + path + "' for writing");
  out << "s,sigma_normalized\n";
  const double s1 = dec.singular_values(0);
  char buf[64];
  for (int s = 0; s < dec.mode_count(); ++s) {
    std::snprintf(buf, sizeof(buf), "%d,%.15g\n", s + 1, dec.singular_values(s) / s1);
    out << buf;
  }
}

}  // namespace emskin
