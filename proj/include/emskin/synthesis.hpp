#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "emskin/atomdb.hpp"
#include "emskin/errors.hpp"
#include "emskin/forward.hpp"
#include "emskin/parallel.hpp"
#include "emskin/rng.hpp"
#include "emskin/scenario.hpp"
#include "emskin/spectral.hpp"

namespace emskin {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PsoConfig {
  int swarm_size = 40;
  double inertia = 0.7298;    // constriction-equivalent set
  double cognitive = 1.49618;
  double social = 1.49618;
  int iterations = 50;        // PSO iterations per NS update
  double velocity_clamp = 0.5;  // max velocity norm as a fraction of the position bound
  double beta_bound = 1.0;      // ||beta|| bound as a fraction of ||J_PI||

  void validate() const {
    if (swarm_size < 2) throw ValidationError("pso: swarm size must be >= 2");
    if (!(inertia > 0.0 && inertia < 1.0)) throw ValidationError("pso: inertia must be in (0,1)");
    if (iterations < 0) throw ValidationError("pso: iterations must be >= 0");
    if (!(velocity_clamp > 0.0) || !(beta_bound > 0.0))
      throw ValidationError("pso: bounds must be > 0");
  }
};

struct SynthesisConfig {
  double eta_svd = 1e-1;   // SVD truncation threshold
  double eta_phi = 1e-4;   // convergence threshold on the cost
  int max_outer = 10000;   // cap N on outer phases
  int ns_mode_cap = 200;   // at most this many null modes enter the PSO
  double target_scale = 0.0;  // <= 0: auto-scale (max |J_PI| = max attainable |J|)
  PsoConfig pso;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const {
    if (!(eta_svd > 0.0 && eta_svd < 1.0))
      throw ValidationError("synthesis: eta_svd must be in (0,1)");
    if (!(eta_phi > 0.0 && eta_phi < 1.0))
      throw ValidationError("synthesis: eta_phi must be in (0,1)");
    if (max_outer < 1) throw ValidationError("synthesis: max_outer must be >= 1");
    if (ns_mode_cap < 0) throw ValidationError("synthesis: ns_mode_cap must be >= 0");
    pso.validate();
  }
};

// ---------------------------------------------------------------------------
// Cost and the two update phases
// ---------------------------------------------------------------------------

/// Current-mismatch cost: sum |J - J_tilde|^2 / sum |J_tilde|^2 over atoms
/// (the cell-area weights cancel).
inline double cost_phi(const CurrentVector& j_induced, const CurrentVector& j_tilde) {
  const double den = j_tilde.squared_norm();
  if (!(den > 0.0)) throw ValidationError("synthesis: reference current has zero norm");
  return ((j_induced.x - j_tilde.x).squaredNorm() + (j_induced.y - j_tilde.y).squaredNorm()) / den;
}

/// Exhaustive per-atom database search: for each atom, the entry whose
/// induced current is nearest to J_tilde at that atom. Ties break toward the
/// smaller descriptor. Because the cost separates over atoms, this is the
/// exact minimizer of cost_phi over layouts.
inline Eigen::ArrayXd ems_update(const AtomDatabase& db, const CurrentVector& j_tilde,
                                 const IncidentWave& wave, const PolarizationBasis& basis,
                                 const EmsGrid& grid, int threads = 1) {
  if (db.size() < 1) throw ValidationError("synthesis: empty database");
  if (j_tilde.size() != grid.atom_count())
    throw ValidationError("synthesis: current length does not match the grid");

  const auto& entries = db.entries();
  Eigen::ArrayXd layout(grid.atom_count());
  parallel_for(grid.atom_count(), threads, [&](std::size_t idx) {
    const int p = static_cast<int>(idx) / grid.q_count;
    const int q = static_cast<int>(idx) % grid.q_count;
    const CurrentFactors f = induced_current_factors(wave, basis, grid.atom_center(p, q));
    const CVec2 want(j_tilde.x(idx), j_tilde.y(idx));
    double best = std::numeric_limits<double>::max();
    double best_d = entries.front().descriptor_m;
    for (const auto& e : entries) {
      const CVec2 j = induced_current(e.gamma, f);
      const double err = (j - want).squaredNorm();
      if (err < best) {
        best = err;
        best_d = e.descriptor_m;
      }
    }
    layout(idx) = best_d;
  });
  return layout;
}

/// Induced current of a whole layout.
inline CurrentVector layout_current(const Eigen::ArrayXd& layout, const AtomDatabase& db,
                                    const IncidentWave& wave, const PolarizationBasis& basis,
                                    const EmsGrid& grid, int threads = 1) {
  if (layout.size() != grid.atom_count())
    throw ValidationError("synthesis: layout length does not match the grid");
  CurrentVector j(grid.atom_count());
  parallel_for(grid.atom_count(), threads, [&](std::size_t idx) {
    const int p = static_cast<int>(idx) / grid.q_count;
    const int q = static_cast<int>(idx) % grid.q_count;
    const CVec2 cur = induced_current(layout(idx), db, wave, basis, grid.atom_center(p, q));
    j.x(idx) = cur(0);
    j.y(idx) = cur(1);
  });
  return j;
}

namespace detail {

/// PSO cost for the NS update with fixed layout: the search variable is the
/// scalar mode vector w = V_null * beta polarized along `axis`, compared
/// against residual = J_layout - J_PI.
struct NsCostEvaluator {
  const Eigen::MatrixXcd& modes;  // PQ x K
  Eigen::VectorXcd rx, ry;        // residual components J_layout - J_PI
  Eigen::VectorXcd px, py;        // J_PI components
  cplx ax, ay;                    // polarization axis

  double operator()(const Eigen::VectorXd& pos) const {
    const int k = static_cast<int>(modes.cols());
    Eigen::VectorXcd beta(k);
    beta.real() = pos.head(k);
    beta.imag() = pos.tail(k);
    const Eigen::VectorXcd w = modes * beta;
    const double num = (rx - ax * w).squaredNorm() + (ry - ay * w).squaredNorm();
    const double den = (px + ax * w).squaredNorm() + (py + ay * w).squaredNorm();
    return num / den;
  }
};

}  // namespace detail

/// One "NS current update": particle-swarm minimization of
/// Phi(layout, beta) over the real/imaginary parts of the first K null-space
/// coefficients. Positions are clamped to ||beta|| <= beta_bound * ||J_PI||;
/// one particle starts at beta_prev, so the result never degrades it. All
/// randomness is a pure function of (seed, phase, iteration, particle,
/// dimension), making parallel and serial runs identical.
inline Eigen::VectorXcd ns_update(const Eigen::MatrixXcd& null_modes, const CurrentVector& j_pi,
                                  const CurrentVector& j_layout, const CVec2& axis,
                                  const Eigen::VectorXcd& beta_prev, const PsoConfig& pso,
                                  std::uint64_t seed, std::uint64_t phase, int threads = 1) {
  pso.validate();
  const int k = static_cast<int>(null_modes.cols());
  if (beta_prev.size() != k) throw ValidationError("synthesis: beta length mismatch");
  if (k == 0) return beta_prev;

  const int dim = 2 * k;
  const double bound = pso.beta_bound * j_pi.norm();
  const double vmax = pso.velocity_clamp * bound;

  detail::NsCostEvaluator eval{null_modes,
                               j_layout.x - j_pi.x,
                               j_layout.y - j_pi.y,
                               j_pi.x,
                               j_pi.y,
                               axis(0),
                               axis(1)};

  const int n_particles = pso.swarm_size;
  Eigen::MatrixXd pos(dim, n_particles), vel = Eigen::MatrixXd::Zero(dim, n_particles);
  Eigen::MatrixXd pbest(dim, n_particles);
  Eigen::VectorXd pcost(n_particles), cost_now(n_particles);

  // Draw ids: 0 = init direction, 1 = init radius, 2/3 = r1/r2 per iteration.
  for (int i = 0; i < n_particles; ++i) {
    if (i == 0) {
      pos.col(i).head(k) = beta_prev.real();
      pos.col(i).tail(k) = beta_prev.imag();
      continue;
    }
    // Uniform in the L2 ball: gaussian direction, radius ~ U^(1/dim).
    for (int d = 0; d < dim; ++d) {
      const double u1 = uniform01(seed, {phase, 0, static_cast<std::uint64_t>(i),
                                         static_cast<std::uint64_t>(2 * d)});
      const double u2 = uniform01(seed, {phase, 0, static_cast<std::uint64_t>(i),
                                         static_cast<std::uint64_t>(2 * d + 1)});
      pos(d, i) = std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * pi * u2);
    }
    const double r01 = uniform01(seed, {phase, 1, static_cast<std::uint64_t>(i)});
    const double radius = bound * std::pow(r01, 1.0 / dim);
    const double nrm = pos.col(i).norm();
    pos.col(i) *= (nrm > 0.0 ? radius / nrm : 0.0);
  }

  parallel_for(n_particles, threads, [&](std::size_t i) { pcost(i) = eval(pos.col(i)); });
  pbest = pos;
  int gi = 0;
  for (int i = 1; i < n_particles; ++i)
    if (pcost(i) < pcost(gi)) gi = i;
  Eigen::VectorXd gbest = pbest.col(gi);
  double gcost = pcost(gi);

  for (int it = 0; it < pso.iterations; ++it) {
    for (int i = 0; i < n_particles; ++i) {
      for (int d = 0; d < dim; ++d) {
        const double r1 = uniform01(seed, {phase, 2, static_cast<std::uint64_t>(it),
                                           static_cast<std::uint64_t>(i),
                                           static_cast<std::uint64_t>(d)});
        const double r2 = uniform01(seed, {phase, 3, static_cast<std::uint64_t>(it),
                                           static_cast<std::uint64_t>(i),
                                           static_cast<std::uint64_t>(d)});
        vel(d, i) = pso.inertia * vel(d, i) + pso.cognitive * r1 * (pbest(d, i) - pos(d, i)) +
                    pso.social * r2 * (gbest(d) - pos(d, i));
      }
      const double vn = vel.col(i).norm();
      if (vn > vmax) vel.col(i) *= vmax / vn;
      pos.col(i) += vel.col(i);
      const double pn = pos.col(i).norm();
      if (pn > bound) pos.col(i) *= bound / pn;
    }
    parallel_for(n_particles, threads, [&](std::size_t i) { cost_now(i) = eval(pos.col(i)); });
    for (int i = 0; i < n_particles; ++i) {
      if (cost_now(i) < pcost(i)) {
        pcost(i) = cost_now(i);
        pbest.col(i) = pos.col(i);
      }
      if (pcost(i) < gcost) {
        gcost = pcost(i);
        gbest = pbest.col(i);
      }
    }
  }

  Eigen::VectorXcd beta(k);
  beta.real() = gbest.head(k);
  beta.imag() = gbest.tail(k);
  return beta;
}

// ---------------------------------------------------------------------------
// Alternating minimization
// ---------------------------------------------------------------------------

struct CostRecord {
  int outer_index = 0;        // n, 1-based
  std::string phase;          // "ems" or "ns"
  double cost = 0.0;
};

struct SynthesisResult {
  Eigen::ArrayXd layout_opt;   // descriptors, row-major over (p, q)
  Eigen::ArrayXd layout_pi;    // the PI-matching baseline D_1
  Eigen::VectorXcd beta_opt;   // length S - s_th (entries past the mode cap stay 0)
  std::vector<CostRecord> cost_trace;
  std::string termination;     // "ems_cost_threshold" | "ns_cost_threshold" | "max_outer"
  int outer_phases = 0;        // phases n actually run
  int s_th = 0;
  int mode_count = 0;
  int optimized_modes = 0;     // K
  double target_scale = 1.0;
  double cost_pi = 0.0;        // Phi(D_PI, 0)
  double cost_final = 0.0;     // Phi(D_opt, beta_opt)
  FieldVector field_opt;       // radiated field of the optimized layout
  FieldVector field_pi;        // radiated field of the PI baseline
};

/// Problem context shared by the synthesis loop and the exporters.
struct SynthesisProblem {
  EmsGrid grid;
  IncidentWave wave;
  PolarizationBasis basis;
  ObservationDomain obs;
  RadiationOperator op;
  SpectralDecomposition dec;
  FieldVector target;       // after scaling
  CurrentVector j_pi;
  CVec2 axis;               // polarization axis of the scalar NS expansion
  double target_scale = 1.0;
};

/// Largest induced-current magnitude reachable over the database (scanned
/// over entries and atoms).
inline double max_attainable_current(const AtomDatabase& db, const IncidentWave& wave,
                                     const PolarizationBasis& basis, const EmsGrid& grid) {
  double best = 0.0;
  for (int p = 0; p < grid.p_count; ++p) {
    for (int q = 0; q < grid.q_count; ++q) {
      const CurrentFactors f = induced_current_factors(wave, basis, grid.atom_center(p, q));
      for (const auto& e : db.entries())
        best = std::max(best, induced_current(e.gamma, f).norm());
    }
  }
  return best;
}

/// Assembles the operator, decomposes it, and scales the target so the
/// pre-image current peaks at the database's maximum attainable current
/// magnitude (config target_scale > 0 overrides the factor).
inline SynthesisProblem prepare_problem(const EmsGrid& grid, const IncidentWave& wave,
                                        const PolarizationBasis& basis,
                                        const ObservationDomain& obs, const AtomDatabase& db,
                                        const FieldVector& target_raw,
                                        const SynthesisConfig& config) {
  config.validate();
  grid.validate();
  RadiationOperator op(grid, obs, wave.k0(), config.threads);
  SpectralDecomposition dec = decompose(op, config.eta_svd);

  CurrentVector j_pi = pre_image_current(dec, target_raw);
  double scale = config.target_scale;
  if (!(scale > 0.0)) {
    const double j_peak = j_pi.magnitude().maxCoeff();
    if (!(j_peak > 0.0))
      throw ComputeError("synthesis: target radiates nothing into the retained subspace");
    scale = max_attainable_current(db, wave, basis, grid) / j_peak;
  }

  SynthesisProblem prob{grid, wave,  basis, obs, std::move(op), std::move(dec),
                        target_raw * scale, j_pi * scale, CVec2(0.0, 1.0), scale};
  // NS polarization follows the target's dominant transverse component.
  prob.axis = prob.target.x.norm() > prob.target.y.norm() ? CVec2(1.0, 0.0) : CVec2(0.0, 1.0);
  return prob;
}

/// The alternating loop: starting from beta_0 = 0, interleave the layout
/// search (ems_update) and the null-space coefficient search (ns_update),
/// recording the cost after every phase. Stops when a phase cost falls to
/// eta_phi or when phase N's layout update completes, and returns both the
/// optimized design and the PI baseline D_1.
inline SynthesisResult run_alternating(const SynthesisProblem& prob, const AtomDatabase& db,
                                       const SynthesisConfig& config) {
  config.validate();
  const int k = std::min(config.ns_mode_cap, prob.dec.null_count());
  const Eigen::MatrixXcd null_modes = prob.dec.null_basis().leftCols(k);

  SynthesisResult res;
  res.s_th = prob.dec.s_th;
  res.mode_count = prob.dec.mode_count();
  res.optimized_modes = k;
  res.target_scale = prob.target_scale;

  Eigen::VectorXcd beta = Eigen::VectorXcd::Zero(k);
  Eigen::ArrayXd layout;
  CurrentVector j_layout;

  auto j_tilde_of = [&](const Eigen::VectorXcd& b) {
    CurrentVector nm(prob.j_pi.size());
    if (k > 0) {
      const Eigen::VectorXcd w = null_modes * b;
      nm.x = w * prob.axis(0);
      nm.y = w * prob.axis(1);
    }
    return prob.j_pi + nm;
  };

  for (int n = 1; n <= config.max_outer; ++n) {
    res.outer_phases = n;

    // SP-EMS update against J_tilde(beta_{n-1}).
    const CurrentVector j_tilde = j_tilde_of(beta);
    layout = ems_update(db, j_tilde, prob.wave, prob.basis, prob.grid, config.threads);
    j_layout = layout_current(layout, db, prob.wave, prob.basis, prob.grid, config.threads);
    const double phi_ems = cost_phi(j_layout, j_tilde);
    res.cost_trace.push_back({n, "ems", phi_ems});
    if (n == 1) {
      res.layout_pi = layout;
      res.cost_pi = phi_ems;
    }
    if (phi_ems <= config.eta_phi) {
      res.termination = "ems_cost_threshold";
      break;
    }
    if (n == config.max_outer) {
      res.termination = "max_outer";
      break;
    }

    // NS current update against the fixed layout D_n.
    beta = ns_update(null_modes, prob.j_pi, j_layout, prob.axis, beta, config.pso, config.seed,
                     static_cast<std::uint64_t>(n), config.threads);
    const double phi_ns = cost_phi(j_layout, j_tilde_of(beta));
    res.cost_trace.push_back({n, "ns", phi_ns});
    if (phi_ns <= config.eta_phi) {
      res.termination = "ns_cost_threshold";
      break;
    }
  }

  res.layout_opt = layout;
  res.beta_opt = Eigen::VectorXcd::Zero(prob.dec.null_count());
  res.beta_opt.head(k) = beta;
  res.cost_final = res.cost_trace.back().cost;
  res.field_opt = prob.op.radiate(j_layout);
  res.field_pi = prob.op.radiate(
      layout_current(res.layout_pi, db, prob.wave, prob.basis, prob.grid, config.threads));
  return res;
}

/// One-shot convenience wrapper: prepare, then run.
inline SynthesisResult run_alternating(const EmsGrid& grid, const IncidentWave& wave,
                                       const PolarizationBasis& basis,
                                       const ObservationDomain& obs, const AtomDatabase& db,
                                       const FieldVector& target_raw,
                                       const SynthesisConfig& config) {
  const SynthesisProblem prob = prepare_problem(grid, wave, basis, obs, db, target_raw, config);
  return run_alternating(prob, db, config);
}

}  // namespace emskin
