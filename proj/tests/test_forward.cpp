#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "emskin/forward.hpp"

using namespace emskin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double freq = 5.5e9;
const double k0_ref = 2.0 * pi * freq / c0;
const double cell = 0.5 * c0 / freq;

EmsGrid make_grid(int p, double delta = cell) {
  EmsGrid g;
  g.p_count = p;
  g.q_count = p;
  g.cell_size_m = delta;
  g.center_height_m = 5.0;
  return g;
}

/// Closed-form array factor of a centered uniform lattice: the product of two
/// Dirichlet kernels sin(n x / 2) / sin(x / 2).
double dirichlet(int n, double x) {
  const double s = std::sin(0.5 * x);
  if (std::abs(s) < 1e-12) return n * std::cos(0.5 * (n - 1) * 0.0);
  return std::sin(0.5 * n * x) / s;
}

Field2 uniform_current(int n, cplx val) {
  Field2 j(n);
  j.x.setConstant(val);
  j.y.setConstant(val * cplx(0.0, 1.0));
  return j;
}

}  // namespace

TEST_CASE("kernel entries match the radiation integral formula") {
  SECTION("single atom, single broadside sample at unit distance") {
    const EmsGrid g = make_grid(1);
    AngularGridSpec spec{0.0, 0.0, 1, 0.0, 0.0, 1};
    const RadiationOperator op(g, build_observation(spec), k0_ref);
    REQUIRE(op.rows() == 1);
    REQUIRE(op.cols() == 1);
    const cplx expected =
        cplx(0.0, k0_ref / (4.0 * pi)) * std::exp(cplx(0.0, -k0_ref)) * cell * cell;
    REQUIRE(std::abs(op.kernel()(0, 0) - expected) < 1e-15 * std::abs(expected));
  }

  SECTION("atoms symmetric about the origin") {
    EmsGrid g = make_grid(2);
    g.q_count = 1;  // two atoms at (-cell/2, 0, 0) and (+cell/2, 0, 0)
    AngularGridSpec spec{deg2rad(35.0), deg2rad(35.0), 1, 0.0, 0.0, 1};
    const RadiationOperator op(g, build_observation(spec), k0_ref);
    const cplx e1 = op.kernel()(0, 0), e2 = op.kernel()(0, 1);
    REQUIRE_THAT(std::abs(e1), WithinRel(std::abs(e2), 1e-12));
    // Conjugate-symmetric phase factors: the product collapses to the
    // atom-independent row factor squared.
    const cplx row_factor =
        cplx(0.0, k0_ref / (4.0 * pi)) * std::exp(cplx(0.0, -k0_ref)) * cell * cell;
    REQUIRE(std::abs(e1 * e2 - row_factor * row_factor) < 1e-14 * std::abs(row_factor * row_factor));

    // Broadside: both entries identical.
    AngularGridSpec bs{0.0, 0.0, 1, 0.0, 0.0, 1};
    const RadiationOperator opb(g, build_observation(bs), k0_ref);
    REQUIRE(std::abs(opb.kernel()(0, 0) - opb.kernel()(0, 1)) < 1e-15);
  }

  SECTION("doubling the cell size quadruples every entry magnitude") {
    AngularGridSpec spec{0.0, deg2rad(40.0), 4, deg2rad(-180.0), deg2rad(180.0), 5};
    const auto obs = build_observation(spec);
    const RadiationOperator op1(make_grid(3, cell), obs, k0_ref);
    const RadiationOperator op2(make_grid(3, 2.0 * cell), obs, k0_ref);
    for (Eigen::Index i = 0; i < op1.rows(); ++i)
      for (Eigen::Index j = 0; j < op1.cols(); ++j)
        REQUIRE_THAT(std::abs(op2.kernel()(i, j)),
                     WithinRel(4.0 * std::abs(op1.kernel()(i, j)), 1e-12));
  }
}

TEST_CASE("radiate matches the closed-form array factor") {
  for (int p : {3, 7}) {
    const EmsGrid g = make_grid(p);
    AngularGridSpec spec{deg2rad(3.0), deg2rad(80.0), 9, deg2rad(-170.0), deg2rad(170.0), 11};
    const auto obs = build_observation(spec);
    const RadiationOperator op(g, obs, k0_ref);
    REQUIRE(op.rows() == 99);
    REQUIRE(op.cols() == p * p);

    const cplx jval(0.8, -0.3);
    const FieldVector e = op.radiate(uniform_current(p * p, jval));
    for (int m = 0; m < obs.size(); ++m) {
      const auto [u, v] = obs.direction_cosines(m);
      const double af = dirichlet(p, k0_ref * cell * u) * dirichlet(p, k0_ref * cell * v);
      const cplx row_factor =
          cplx(0.0, k0_ref / (4.0 * pi)) * std::exp(cplx(0.0, -k0_ref)) * cell * cell;
      const cplx expected = row_factor * af * jval;
      REQUIRE(std::abs(e.x(m) - expected) <= 1e-10 * std::abs(expected));
    }
  }
}

TEST_CASE("radiate linearity and edge cases") {
  const EmsGrid g = make_grid(5);
  AngularGridSpec spec{0.0, deg2rad(60.0), 7, deg2rad(-180.0), deg2rad(180.0), 9};
  const auto obs = build_observation(spec);
  const RadiationOperator op(g, obs, k0_ref);

  SECTION("zero current radiates nothing") {
    REQUIRE(op.radiate(Field2(25)).norm() == 0.0);
  }

  SECTION("linearity") {
    std::mt19937 rng(11);
    std::normal_distribution<double> n01;
    Field2 j1(25), j2(25);
    for (int i = 0; i < 25; ++i) {
      j1.x(i) = cplx(n01(rng), n01(rng));
      j1.y(i) = cplx(n01(rng), n01(rng));
      j2.x(i) = cplx(n01(rng), n01(rng));
      j2.y(i) = cplx(n01(rng), n01(rng));
    }
    const cplx a(1.3, -0.2), b(-0.1, 2.2);
    const Field2 lhs = op.radiate(j1 * a + j2 * b);
    const Field2 rhs = op.radiate(j1) * a + op.radiate(j2) * b;
    REQUIRE((lhs - rhs).norm() <= 1e-12 * rhs.norm());
  }

  SECTION("dimension mismatch") {
    CHECK_THROWS_AS(op.radiate(Field2(7)), ValidationError);
    CHECK_THROWS_AS(op.adjoint_radiate(Field2(7)), ValidationError);
  }
}

TEST_CASE("uniform current beams at broadside") {
  const EmsGrid g = make_grid(35);
  AngularGridSpec spec{0.0, deg2rad(40.0), 9, deg2rad(-180.0), deg2rad(180.0), 13};
  const auto obs = build_observation(spec);
  const RadiationOperator op(g, obs, k0_ref);
  const FieldVector e = op.radiate(uniform_current(35 * 35, cplx(1.0, 0.0)));
  const Eigen::ArrayXd mag = e.magnitude();
  int peak = 0;
  mag.maxCoeff(&peak);
  REQUIRE(obs.samples[peak].direction.z() == 1.0);  // a theta = 0 sample
}

TEST_CASE("adjoint consistency under the plain inner product") {
  const EmsGrid g = make_grid(4);
  AngularGridSpec spec{deg2rad(5.0), deg2rad(50.0), 6, deg2rad(-120.0), deg2rad(120.0), 7};
  const auto obs = build_observation(spec);
  const RadiationOperator op(g, obs, k0_ref);

  std::mt19937 rng(23);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    Field2 j(16), e(42);
    for (int i = 0; i < 16; ++i) {
      j.x(i) = cplx(n01(rng), n01(rng));
      j.y(i) = cplx(n01(rng), n01(rng));
    }
    for (int i = 0; i < 42; ++i) {
      e.x(i) = cplx(n01(rng), n01(rng));
      e.y(i) = cplx(n01(rng), n01(rng));
    }
    const Field2 lj = op.radiate(j);
    const Field2 ae = op.adjoint_radiate(e);
    const cplx lhs = lj.x.dot(e.x) + lj.y.dot(e.y);  // Eigen dot conjugates the left side
    const cplx rhs = j.x.dot(ae.x) + j.y.dot(ae.y);
    REQUIRE(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
  }
}

TEST_CASE("permuting observation samples permutes the output identically") {
  const EmsGrid g = make_grid(3);
  AngularGridSpec spec{deg2rad(5.0), deg2rad(45.0), 5, deg2rad(-90.0), deg2rad(90.0), 5};
  auto obs = build_observation(spec);
  auto swapped = obs;
  std::swap(swapped.samples[2], swapped.samples[17]);

  std::mt19937 rng(3);
  std::normal_distribution<double> n01;
  Field2 j(9);
  for (int i = 0; i < 9; ++i) j.x(i) = cplx(n01(rng), n01(rng));

  const Field2 e1 = RadiationOperator(g, obs, k0_ref).radiate(j);
  const Field2 e2 = RadiationOperator(g, swapped, k0_ref).radiate(j);
  for (int m = 0; m < obs.size(); ++m) {
    const int m2 = (m == 2) ? 17 : (m == 17 ? 2 : m);
    REQUIRE(e1.x(m) == e2.x(m2));
  }
}

TEST_CASE("threaded assembly matches serial assembly bit for bit") {
  const EmsGrid g = make_grid(6);
  AngularGridSpec spec{0.0, deg2rad(40.0), 8, deg2rad(-180.0), deg2rad(180.0), 9};
  const auto obs = build_observation(spec);
  const RadiationOperator serial(g, obs, k0_ref, 1);
  const RadiationOperator threaded(g, obs, k0_ref, 4);
  REQUIRE(serial.kernel() == threaded.kernel());
}
