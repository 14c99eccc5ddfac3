#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "emskin/errors.hpp"
#include "emskin/parallel.hpp"
#include "emskin/scenario.hpp"

namespace emskin {

/// Two-component transverse samples: currents on the atom lattice or fields
/// on the observation domain, row-major, component order (x, y) fixed.
struct Field2 {
  Eigen::VectorXcd x;
  Eigen::VectorXcd y;

  Field2() = default;
  explicit Field2(Eigen::Index n) : x(Eigen::VectorXcd::Zero(n)), y(Eigen::VectorXcd::Zero(n)) {}

  Eigen::Index size() const { return x.size(); }
  double squared_norm() const { return x.squaredNorm() + y.squaredNorm(); }
  double norm() const { return std::sqrt(squared_norm()); }

  /// Pointwise magnitude sqrt(|x_m|^2 + |y_m|^2).
  Eigen::ArrayXd magnitude() const {
    return (x.array().abs2() + y.array().abs2()).sqrt();
  }

  Field2 operator+(const Field2& o) const { return {x + o.x, y + o.y}; }
  Field2 operator-(const Field2& o) const { return {x - o.x, y - o.y}; }
  Field2 operator*(cplx c) const { return {x * c, y * c}; }

 private:
  Field2(Eigen::VectorXcd xx, Eigen::VectorXcd yy) : x(std::move(xx)), y(std::move(yy)) {}
};

using CurrentVector = Field2;  // length P*Q, on the atom lattice
using FieldVector = Field2;    // length M, on the observation samples

/// Discretized far-field radiation integral: a dense M x (P*Q) scalar kernel
/// applied identically to the x and y current components,
///
///   K(m, pq) = (j k0 / 4 pi) exp(-j k0 r_m) / r_m * exp(j k0 rhat_m . r_pq) * cell^2.
///
/// Matrix-vector products use Eigen's sequential kernels, so results do not
/// depend on the worker count used elsewhere.
class RadiationOperator {
 public:
  RadiationOperator(const EmsGrid& grid, const ObservationDomain& obs, double k0, int threads = 1)
      : grid_(grid), obs_(obs), k0_(k0) {
    grid.validate();
    if (obs.size() < 1) throw ValidationError("forward: observation domain is empty");
    if (!(k0 > 0.0)) throw ValidationError("forward: k0 must be > 0");

    const int m_count = obs.size();
    const int n_atoms = grid.atom_count();
    kernel_.resize(m_count, n_atoms);
    const double area = grid.cell_size_m * grid.cell_size_m;
    parallel_for(m_count, threads, [&](std::size_t m) {
      const auto& s = obs.samples[m];
      const cplx row_factor = cplx(0.0, k0 / (4.0 * pi)) *
                              std::exp(cplx(0.0, -k0 * s.distance)) / s.distance * area;
      for (int p = 0; p < grid.p_count; ++p) {
        for (int q = 0; q < grid.q_count; ++q) {
          const Vec3 r_pq = grid.atom_center(p, q);
          kernel_(static_cast<Eigen::Index>(m), grid.atom_index(p, q)) =
              row_factor * std::exp(cplx(0.0, k0 * s.direction.dot(r_pq)));
        }
      }
    });
  }

  const Eigen::MatrixXcd& kernel() const { return kernel_; }
  const EmsGrid& grid() const { return grid_; }
  const ObservationDomain& observation() const { return obs_; }
  double k0() const { return k0_; }
  Eigen::Index rows() const { return kernel_.rows(); }
  Eigen::Index cols() const { return kernel_.cols(); }

  FieldVector radiate(const CurrentVector& j) const {
    if (j.size() != cols()) throw ValidationError("forward: current length mismatch");
    FieldVector e;
    e.x = kernel_ * j.x;
    e.y = kernel_ * j.y;
    return e;
  }

  CurrentVector adjoint_radiate(const FieldVector& e) const {
    if (e.size() != rows()) throw ValidationError("forward: field length mismatch");
    CurrentVector j;
    j.x = kernel_.adjoint() * e.x;
    j.y = kernel_.adjoint() * e.y;
    return j;
  }

 private:
  EmsGrid grid_;
  ObservationDomain obs_;
  double k0_;
  Eigen::MatrixXcd kernel_;
};

inline RadiationOperator assemble_operator(const EmsGrid& grid, const ObservationDomain& obs,
                                           double k0, int threads = 1) {
  return RadiationOperator(grid, obs, k0, threads);
}

}  // namespace emskin
