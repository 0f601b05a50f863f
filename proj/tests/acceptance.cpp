// Desk-scale gate: one pass/fail line per criterion, tolerances pinned
// inline. Optional argv list restricts the run to the named criteria.
#include <boost/math/special_functions/beta.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qlab/analytic.hpp"
#include "qlab/dynamics.hpp"
#include "qlab/estimation.hpp"
#include "qlab/fisher.hpp"
#include "qlab/hilbert.hpp"
#include "qlab/models.hpp"
#include "qlab/rng.hpp"

using namespace qlab;
using Eigen::MatrixXcd;
using Eigen::VectorXd;

namespace {

int n_failed = 0;

void report(int id, bool pass, const std::string& detail, double wall) {
  if (!pass) ++n_failed;
  std::printf("criterion %2d: %s  %s  [%.1f s]\n", id, pass ? "PASS" : "FAIL",
              detail.c_str(), wall);
  std::fflush(stdout);
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

SubsystemPartition head(int n, int k) {
  std::vector<int> s(k);
  for (int i = 0; i < k; ++i) s[i] = i;
  return SubsystemPartition(n, s);
}

double state_variance(const HamiltonianBundle& hb, const PureState& psi) {
  const Eigen::VectorXcd hpsi = hb.apply(psi.amplitudes);
  const double e1 = psi.amplitudes.dot(hpsi).real();
  return hpsi.squaredNorm() - e1 * e1;
}

const HamiltonianBundle& mfi(int n) {
  static std::map<int, HamiltonianBundle> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, build_mixed_field_ising(n)).first;
    it->second.spectral();
  }
  return it->second;
}

struct LateMean {
  double mean = 0.0;
  double se = 0.0;
};

LateMean late_mean_fa(const HamiltonianBundle& hb, const SubsystemPartition& part,
                      std::uint64_t master, std::uint64_t stream0, int samples,
                      const std::vector<double>& window) {
  double acc = 0.0, acc2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    SeededRng rng(master, stream0 + s);
    const PureState psi0 = random_product_state(hb.n_sites, rng);
    Propagator prop(hb, psi0);
    double m = 0.0;
    for (double t : window) m += subsystem_qfi(prop.at(t), hb, part).F_A;
    m /= window.size();
    acc += m;
    acc2 += m * m;
  }
  acc /= samples;
  acc2 /= samples;
  return {acc, std::sqrt(std::max(0.0, acc2 - acc * acc) / (samples - 1))};
}

// ------------------------------------------------------------------ 1 & 2

void criterion_1_and_2() {
  Timer timer;
  const HamiltonianBundle& hb = mfi(8);
  const SubsystemPartition part = head(8, 4);
  const SubsystemPartition co(8, part.sites_Abar());
  const SubsystemPartition full = head(8, 8);
  const double times[] = {0.0, 1.0, 5.0, 10.0, 20.0};

  double worst1 = 0.0, worst_plus = 0.0, worst_minus = 0.0, worst_split = 0.0,
         worst_dual = 0.0;
  for (int s = 0; s < 20; ++s) {
    SeededRng rng(501, s);
    const PureState psi0 = random_product_state(8, rng);
    const double var = state_variance(hb, psi0);
    Propagator prop(hb, psi0);
    for (double t : times) {
      const PureState psi = prop.at(t);
      const FisherReport rf = subsystem_qfi(psi, hb, full);
      worst1 = std::max(worst1, std::abs(rf.F_A - 4.0 * var) / (4.0 * var));

      const FisherReport ra = subsystem_qfi(psi, hb, part);
      const FisherReport rb = subsystem_qfi(psi, hb, co);
      worst_minus = std::max(worst_minus,
                             std::abs(ra.F_minus - rb.F_minus) /
                                 std::max(1.0, std::abs(rb.F_minus)));
      worst_split = std::max(worst_split,
                             std::abs(ra.F_A - (ra.F_ent + ra.F_rot)) /
                                 std::max(1.0, ra.F_A));
      // the two-sided identities need a full-rank reduced state: at t = 0
      // the rank-1 product state parks part of <H^2> in the null/null
      // sector of the cut-crossing coupling, which belongs to neither side
      if (t == 0.0) continue;
      worst_plus = std::max(
          worst_plus, std::abs(ra.F_plus + rb.F_plus - 2.0 * var) /
                          std::max(1.0, 2.0 * var));
      const double f_t = 4.0 * var, f_eta = 1.0 / var;
      worst_dual = std::max(
          worst_dual, std::abs(ra.F_A / f_t + rb.F_eta / f_eta - 1.0));
      worst_dual = std::max(
          worst_dual, std::abs(rb.F_A / f_t + ra.F_eta / f_eta - 1.0));
    }
  }
  const double wall = timer.seconds();
  {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "full QFI = 4 Var(H): worst rel %.2e (tol 1e-7)", worst1);
    report(1, worst1 <= 1e-7 && wall < 60.0, buf, wall);
  }
  {
    const bool pass = worst_plus <= 1e-8 && worst_minus <= 1e-8 &&
                      worst_split <= 1e-8 && worst_dual <= 1e-6;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "split identities: plus(t>0) %.1e minus %.1e ent+rot %.1e "
                  "duality(t>0) %.1e (tol 1e-8/1e-6)",
                  worst_plus, worst_minus, worst_split, worst_dual);
    report(2, pass, buf, timer.seconds() - wall);
  }
}

// --------------------------------------------------------------------- 3

void criterion_3() {
  Timer timer;
  const long d = 8;
  double worst = 0.0;
  for (int s = 0; s < 10; ++s) {
    SeededRng rng(503, s);
    auto cgauss = [&rng] {
      return std::complex<double>(rng.gaussian(), rng.gaussian()) / std::sqrt(2.0);
    };
    MatrixXcd m(d, d), a(d, d);
    for (long i = 0; i < d; ++i)
      for (long j = 0; j < d; ++j) {
        m(i, j) = cgauss();
        a(i, j) = cgauss();
      }
    DensityMatrix rho;
    rho.elements = m * m.adjoint();
    rho.elements /= rho.elements.trace().real();
    const MatrixXcd g = 0.5 * (a + a.adjoint());
    const MatrixXcd drho =
        std::complex<double>(0, -1) * (g * rho.elements - rho.elements * g);

    const double f_sld = qfi(rho, drho).first;

    const double eps = 1e-4;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(g);
    auto rotate = [&](double th) {
      const MatrixXcd u =
          es.eigenvectors() *
          (std::complex<double>(0, -th) * es.eigenvalues().array())
              .exp()
              .matrix()
              .asDiagonal() *
          es.eigenvectors().adjoint();
      DensityMatrix out;
      out.elements = u * rho.elements * u.adjoint();
      return out;
    };
    const double db = bures_distance(rotate(-eps), rotate(eps));
    const double f_bures = 4.0 * db * db / (2 * eps) / (2 * eps);
    worst = std::max(worst, std::abs(f_sld - f_bures) / f_sld);
  }
  char buf[96];
  std::snprintf(buf, sizeof buf,
                "SLD vs Bures difference: worst rel %.2e (tol 1e-3)", worst);
  report(3, worst <= 1e-3, buf, timer.seconds());
}

// --------------------------------------------------------------------- 4

void criterion_4() {
  Timer timer;
  const int n = 10, samples = 100;
  const HamiltonianBundle& hb = mfi(n);
  const std::vector<int> sizes = {1, 2, 3, 4, 6, 7, 8, 9};
  std::vector<SubsystemPartition> parts;
  for (int k : sizes) parts.push_back(head(n, k));
  const std::vector<double> window = {15.0, 16.0, 17.0, 18.0, 19.0, 20.0};

  std::map<int, double> sat;
  for (int s = 0; s < samples; ++s) {
    SeededRng rng(504, s);
    const PureState psi0 = random_product_state(n, rng);
    Propagator prop(hb, psi0);
    for (double t : window) {
      const PureState psi = prop.at(t);
      for (std::size_t k = 0; k < parts.size(); ++k)
        sat[sizes[k]] += subsystem_qfi(psi, hb, parts[k]).F_A;
    }
  }
  for (auto& [k, v] : sat) v /= samples * window.size();

  // least-squares slope of log saturation per added site; the collapse
  // variable 2 n_A - n advances two units per site, the quoted slope
  // log 4 counts growth per site. The ensemble's small-cut branch is
  // c n_A d_A/d_Abar, so the finite-size slope carries the n_A prefactor
  // on top of log 4: the exact ensemble slope over these sizes is 1.72.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k : {1, 2, 3, 4}) {
    sx += k;
    sy += std::log(sat[k]);
    sxx += double(k) * k;
    sxy += k * std::log(sat[k]);
  }
  const double slope = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
  const double slope_rel = std::abs(slope - std::log(4.0)) / std::log(4.0);

  // the infinite-complement form of the large-cut prediction; at n = 10
  // it differs from the exact ensemble mean by 7-10% on its own
  double worst_large = 0.0;
  int worst_k = 0;
  for (int k : {6, 7, 8, 9}) {
    const HamiltonianSplit split = split_hamiltonian(hb, head(n, k));
    const double d_A = double(1L << k);
    const double tr1 = split.H_A.trace().real() / d_A;
    const double tr2 = (split.H_A * split.H_A).trace().real() / d_A;
    const double pred = 4.0 * (tr2 - tr1 * tr1);
    const double rel = std::abs(sat[k] - pred) / pred;
    if (rel > worst_large) {
      worst_large = rel;
      worst_k = k;
    }
  }
  const double wall = timer.seconds();
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "collapse slope %.3f vs log4 %.3f (rel %.3f, tol 0.15); "
                "large-cut worst rel %.3f at n_A=%d (tol 0.25)",
                slope, std::log(4.0), slope_rel, worst_large, worst_k);
  report(4, slope_rel <= 0.15 && worst_large <= 0.25 && wall < 7200.0, buf,
         wall);
}

// --------------------------------------------------------------------- 5

void criterion_5() {
  Timer timer;
  const int n = 10, n_A = 8, samples = 30;
  const HamiltonianBundle& hb = mfi(n);
  const SubsystemPartition part = head(n, n_A);
  const VectorXd grid = VectorXd::LinSpaced(41, 0.0, 20.0);

  VectorXd fa = VectorXd::Zero(grid.size());
  double late_rot = 0.0, late_fa = 0.0;
  for (int s = 0; s < samples; ++s) {
    SeededRng rng(505, s);
    const PureState psi0 = random_product_state(n, rng);
    Propagator prop(hb, psi0);
    for (long k = 0; k < grid.size(); ++k) {
      const FisherReport rep = subsystem_qfi(prop.at(grid[k]), hb, part);
      fa[k] += rep.F_A;
      if (grid[k] >= 15.0) {
        late_rot += rep.F_rot;
        late_fa += rep.F_A;
      }
    }
  }
  long k_min = 0;
  fa.minCoeff(&k_min);
  const bool interior = k_min > 0 && k_min + 1 < grid.size();
  const double rot_share = late_rot / late_fa;
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "minimum at t*=%.1f (interior %s); late F_rot/F_A %.3f "
                "(tol > 0.9)",
                grid[k_min], interior ? "yes" : "no", rot_share);
  report(5, interior && rot_share > 0.9, buf, timer.seconds());
}

// --------------------------------------------------------------------- 6

void criterion_6() {
  Timer timer;
  // quarter-unit spacing: integer steps alias the two-particle
  // frequencies near 2*pi that the free chain never damps
  std::vector<double> window;
  for (int k = 0; k <= 20; ++k) window.push_back(15.0 + 0.25 * k);
  const int samples = 100;

  HamiltonianBundle int8 = build_tfi_integrable(8);
  HamiltonianBundle int10 = build_tfi_integrable(10);
  int8.spectral();
  int10.spectral();
  const LateMean i8 = late_mean_fa(int8, head(8, 1), 506, 0, samples, window);
  const LateMean i10 = late_mean_fa(int10, head(10, 1), 506, 1000, samples, window);
  const LateMean c8 = late_mean_fa(mfi(8), head(8, 1), 506, 2000, samples, window);
  const LateMean c10 = late_mean_fa(mfi(10), head(10, 1), 506, 3000, samples, window);

  const double drift = std::abs(i10.mean - i8.mean) / i8.mean;
  const double decay = c8.mean / c10.mean;
  const double decay_se =
      decay * std::sqrt(c8.se * c8.se / (c8.mean * c8.mean) +
                        c10.se * c10.se / (c10.mean * c10.mean));
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "integrable %.3f(%.3f) -> %.3f(%.3f) (drift %.2f, tol 0.20); "
                "chaotic %.2e -> %.2e (factor %.2f +- %.2f, tol >= 4)",
                i8.mean, i8.se, i10.mean, i10.se, drift, c8.mean, c10.mean,
                decay, decay_se);
  report(6, drift <= 0.20 && decay >= 4.0, buf, timer.seconds());
}

// --------------------------------------------------------------------- 7

void criterion_7() {
  Timer timer;
  const int n = 4, samples = 4;
  HamiltonianBundle hb = build_mixed_field_ising(n, -1.05, 0.5, Boundary::open);
  const LindbladSpec spec{hb, boundary_depolarizing_jumps(n), 1.0};
  std::vector<double> grid;
  for (int k = 0; k <= 280; ++k) grid.push_back(0.1 * k);

  double entropy_final = 0.0;
  std::vector<double> f_mean(grid.size(), 0.0);
  for (int s = 0; s < samples; ++s) {
    SeededRng rng(507, s);
    const PureState psi0 = random_product_state(n, rng);
    DensityMatrix rho0;
    rho0.elements = psi0.amplitudes * psi0.amplitudes.adjoint();
    const Trajectory traj = lindblad_rk4(spec, rho0, grid, 0.01);
    entropy_final += von_neumann_entropy(traj.states.back());
    for (std::size_t k = 0; k < grid.size(); ++k)
      f_mean[k] += qfi(traj.states[k], lindblad_apply(spec, traj.states[k])).first;
  }
  entropy_final /= samples;
  for (double& v : f_mean) v /= samples;

  const double target = n * std::log(2.0);
  const double ent_rel = std::abs(entropy_final - target) / target;
  // the generator's second-slowest mode sits at 0.59 against a gap of
  // 0.39, so the pure 2*gap tail of the information decay emerges only
  // after the cross term e^{-(gap+0.59)t} has died off
  const DecayFit fit = fit_exponential_decay(grid, f_mean, {{18.0, 28.0}});
  const double gap = lindblad_gap(spec);
  const double rate_rel = std::abs(fit.rate - 2.0 * gap) / (2.0 * gap);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "entropy %.4f vs %.4f (rel %.3f, tol 0.02); decay rate %.3f "
                "vs 2*gap %.3f (rel %.3f, tol 0.10)",
                entropy_final, target, ent_rel, fit.rate, 2.0 * gap, rate_rel);
  report(7, ent_rel <= 0.02 && rate_rel <= 0.10, buf, timer.seconds());
}

// --------------------------------------------------------------------- 8

void criterion_8() {
  Timer timer;
  const std::vector<double> window = {15.0, 16.25, 17.5, 18.75, 20.0};
  const int samples = 8;

  // fixed kept block of 7 sites, growing complement
  std::map<int, double> sat_a;
  for (int n : {10, 11, 12}) {
    const HamiltonianBundle& hb = mfi(n);
    const SubsystemPartition part = head(n, 7);
    double acc = 0.0;
    for (int s = 0; s < samples; ++s) {
      SeededRng rng(508, n * 100 + s);
      const PureState psi0 = random_product_state(n, rng);
      Propagator prop(hb, psi0);
      double m = 0.0;
      for (double t : window) m += subsystem_qfi(prop.at(t), hb, part).f_comp;
      acc += m / window.size();
    }
    sat_a[n] = acc / samples;
  }
  double q_lo = 1e300, q_hi = 0.0;
  for (const auto& [n, v] : sat_a) {
    const double q = v * double(1L << (n - 7));  // rescale by d_Abar
    q_lo = std::min(q_lo, q);
    q_hi = std::max(q_hi, q);
  }
  const double spread_a = q_hi / q_lo - 1.0;

  // full register: saturation grows in proportion to the register size
  std::map<int, double> sat_full;
  for (int n : {6, 8, 10}) {
    const HamiltonianBundle& hb = mfi(n);
    const SubsystemPartition part = head(n, n);
    double acc = 0.0;
    for (int s = 0; s < samples; ++s) {
      SeededRng rng(508, n * 100 + 50 + s);
      const PureState psi0 = random_product_state(n, rng);
      Propagator prop(hb, psi0);
      double m = 0.0;
      for (double t : window) m += subsystem_qfi(prop.at(t), hb, part).f_comp;
      acc += m / window.size();
    }
    sat_full[n] = acc / samples;
  }
  double p_lo = 1e300, p_hi = 0.0;
  for (const auto& [n, v] : sat_full) {
    p_lo = std::min(p_lo, v / n);
    p_hi = std::max(p_hi, v / n);
  }
  const double spread_full = p_hi / p_lo - 1.0;

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "f_comp * d_Abar spread %.2f (tol 0.30); full f_comp / n "
                "spread %.2f (tol 0.25)",
                spread_a, spread_full);
  report(8, spread_a <= 0.30 && spread_full <= 0.25, buf, timer.seconds());
}

// --------------------------------------------------------------------- 9

void criterion_9() {
  Timer timer;
  bool closed_ok = true;
  for (long d = 2; d <= 1024; ++d) {
    const double expect = 2.0 * std::pow(1.0 - 1.0 / double(d), double(d));
    if (std::abs(trace_distance_full(d) - expect) > 1e-12 * expect)
      closed_ok = false;
  }
  const double limit = trace_distance_full(1L << 26);
  closed_ok = closed_ok && std::abs(limit - 2.0 * std::exp(-1.0)) <= 1e-6;

  // Haar sampling at n = 8 with a 3-site complement
  const int n = 8, n_Abar = 3, samples = 10000;
  const SubsystemPartition part = head(n, n - n_Abar);
  const long d = 1L << n, d_Ab = 1L << n_Abar;
  const double flat = 1.0 / double(part.d_A());
  double acc = 0.0, acc2 = 0.0;
  std::vector<double> lambdas(samples);
  for (int s = 0; s < samples; ++s) {
    SeededRng rng(509, s);
    const PureState psi = haar_state(n, rng);
    const VectorXd p = amplitude_matrix(psi, part).rowwise().squaredNorm();
    const double tv = (p.array() - flat).abs().sum();
    acc += tv;
    acc2 += tv * tv;
    lambdas[s] = p[0];
  }
  const double mean = acc / samples;
  const double var = std::max(0.0, acc2 / samples - mean * mean);
  const double se = std::sqrt(var / (samples - 1));
  const double pred = trace_distance_sub(d, d_Ab);
  const double sigmas = std::abs(mean - pred) / se;

  // one outcome weight per state against the exact marginal CDF
  std::sort(lambdas.begin(), lambdas.end());
  double ks = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double cdf = boost::math::ibeta(double(d_Ab), double(d - d_Ab),
                                          lambdas[i]);
    ks = std::max(ks, std::abs(cdf - double(i + 1) / samples));
    ks = std::max(ks, std::abs(cdf - double(i) / samples));
  }
  const double ks_crit = 1.628 / std::sqrt(double(samples));  // alpha = 0.01

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "closed form %s; MC %.5f vs %.5f (%.1f sigma, tol 3); KS D "
                "%.4f (crit %.4f)",
                closed_ok ? "exact" : "BROKEN", mean, pred, sigmas, ks,
                ks_crit);
  report(9, closed_ok && sigmas <= 3.0 && ks <= ks_crit, buf, timer.seconds());
}

// -------------------------------------------------------------------- 10

void criterion_10() {
  Timer timer;
  const int n = 10, samples = 50;
  const HamiltonianBundle& hb = mfi(n);

  SeededRng rng3(510, 3);
  const HolevoEnsemble e3 = holevo_fidelity_ensemble(hb, head(n, 3), samples, rng3);
  // at n_R = 8 the ensemble mean carries a finite-size deficit of a few
  // percent below n_B/n (the discarded factor has dimension 4), so the
  // measurement sits near the tolerance edge
  SeededRng rng8(510, 18);
  const HolevoEnsemble e8 = holevo_fidelity_ensemble(hb, head(n, 8), samples, rng8);

  const double dev3 = std::abs(e3.measured_mean - 1.0);
  const double target8 = double(n - 8) / n;
  const double dev8 = std::abs(e8.measured_mean - target8) / target8;
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "n_R=3: %.4f (dev %.3f, tol 0.05); n_R=8: %.4f vs %.2f "
                "(rel %.3f, tol 0.20)",
                e3.measured_mean, dev3, e8.measured_mean, target8, dev8);
  report(10, dev3 <= 0.05 && dev8 <= 0.20, buf, timer.seconds());
}

// -------------------------------------------------------------------- 11

void criterion_11() {
  Timer timer;
  const int n = 9, n_S = 3;
  const HamiltonianBundle& hb = mfi(n);
  SeededRng rng(11, 3);
  const BgueSpec spec = BgueSpec::standard(hb, n_S, rng);

  const auto prof0 = bgue_profiles(double(spec.d_B()), 0.0);
  double rest = 0.0;
  for (std::size_t i = 1; i < prof0.size(); ++i)
    rest = std::max(rest, std::abs(prof0[i]));
  const bool f1_ok = std::abs(prof0[0] - 1.0) <= 1e-12 && rest <= 1e-12;

  // late-time limits against the flat-spectrum random-state values
  VectorXd far(1);
  far[0] = 100.0;
  const BguePoint inf_pt = bgue_curves(spec, far).front();
  const HaarSaturation flat_pred =
      haar_saturation_fa(split_hamiltonian(hb, head(n, n_S)));
  const double dev_s = std::abs(inf_pt.F_S - flat_pred.F_S_flat) /
                       std::max(1.0, flat_pred.F_S_flat);
  const double dev_b = std::abs(inf_pt.F_B - flat_pred.F_B_flat) /
                       std::max(1.0, flat_pred.F_B_flat);

  const VectorXd grid = VectorXd::LinSpaced(101, 0.0, 5.0);
  const auto pts = bgue_curves(spec, grid);
  bool monotone = true;
  double worst_dip = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].F_rot < pts[i - 1].F_rot - 1e-9) {
      monotone = false;
      worst_dip = std::max(worst_dip, pts[i - 1].F_rot - pts[i].F_rot);
    }

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "f_1(0)=%.1f; late F_S/F_B dev %.1e/%.1e (tol 1e-6); F_rot "
                "monotone %s (dip %.1e)",
                prof0[0], dev_s, dev_b, monotone ? "yes" : "no", worst_dip);
  report(11, f1_ok && dev_s <= 1e-6 && dev_b <= 1e-6 && monotone, buf,
         timer.seconds());
}

// -------------------------------------------------------------------- 12

void criterion_12() {
  Timer timer;

  // single-qubit benchmark against the information bound
  HamiltonianBundle single;
  single.n_sites = 1;
  single.terms = {PauliTerm{1.0, 0, 1}};
  single.H = dense_from_terms(1, single.terms);
  PureState plus;
  plus.n_sites = 1;
  plus.amplitudes = Eigen::VectorXcd::Constant(2, 1.0 / std::sqrt(2.0));
  const double r = 1.0 / std::sqrt(2.0);
  MeasurementBasis xbasis;
  xbasis.id = "x";
  xbasis.u = MatrixXcd(2, 2);
  xbasis.u << r, r, r, -r;

  CramerRaoConfig cr;
  cr.ham = single;
  cr.psi0 = plus;
  cr.partition = head(1, 1);
  cr.basis = xbasis;
  cr.t0 = 0.4;
  cr.t_grid = VectorXd::LinSpaced(33, 0.0, M_PI / 2.0);
  cr.N_list = {1000};
  cr.repetitions = 200;
  SeededRng cr_rng(11, 5);
  const CramerRaoResult cres = cramer_rao_experiment(cr, cr_rng);
  const double norm_var = cres.rows[0].empirical_var * 4.0 * 1000.0;
  const bool qubit_ok = norm_var >= 1.0 && norm_var <= 3.0;

  // chain estimate: full-register basis, five repetitions
  const int n = 9;
  const HamiltonianBundle& hb = mfi(n);
  SeededRng prep(2026, 40);
  const PureState psi0 = random_product_state(n, prep);
  const SubsystemPartition full = head(n, n);
  const LikelihoodTable table = likelihood_table(
      psi0, hb, full, MeasurementBasis{}, VectorXd::LinSpaced(81, 8.0, 12.0));
  const ReducedPair rp = reduced_state_and_derivative(psi0, hb, full, 10.0);
  int hits = 0;
  for (int rep = 0; rep < 5; ++rep) {
    SeededRng rng(2026, 41 + rep);
    SampleSet s = born_sample(rp.rho, nullptr, 50, rng);
    s.true_t0 = 10.0;
    if (std::abs(mle(s, table).t_est - 10.0) < 0.2) ++hits;
  }
  const bool mle_ok = hits >= 4;

  // discrimination accuracy over both ground truths, full register n = 6
  const int nd = 6;
  const HamiltonianBundle& hd = mfi(nd);
  SeededRng dprep(2026, 8);
  const PureState dpsi0 = random_product_state(nd, dprep);
  const SubsystemPartition dfull = head(nd, nd);
  const LikelihoodTable dtable = likelihood_table(
      dpsi0, hd, dfull, MeasurementBasis{}, VectorXd::LinSpaced(41, 2.0, 4.0));
  const std::vector<DensityMatrix> evolving = {
      reduced_state_and_derivative(dpsi0, hd, dfull, 3.0).rho};
  DensityMatrix mixed;
  mixed.elements =
      MatrixXcd::Identity(dfull.d_A(), dfull.d_A()) / double(dfull.d_A());
  const std::vector<DensityMatrix> equilibrium = {mixed};
  int correct = 0, total = 0;
  for (int run = 0; run < 10; ++run) {
    SeededRng rng(2026, 100 + run);
    correct += discriminate_state(evolving, dtable, 300, 8, rng).evolving;
    ++total;
  }
  for (int run = 0; run < 10; ++run) {
    SeededRng rng(2026, 200 + run);
    correct += !discriminate_state(equilibrium, dtable, 300, 8, rng).evolving;
    ++total;
  }
  const double accuracy = double(correct) / total;

  // documented failure: a small cut leaves too little basis information
  const HamiltonianBundle& h12 = mfi(12);
  SeededRng sprep(2026, 300);
  const PureState spsi0 = random_product_state(12, sprep);
  const SubsystemPartition small = head(12, 4);
  const LikelihoodTable stable = likelihood_table(
      spsi0, h12, small, MeasurementBasis{}, VectorXd::LinSpaced(21, 9.0, 11.0),
      0.15);
  const std::vector<DensityMatrix> scopies = {
      reduced_state_and_derivative(spsi0, h12, small, 10.0).rho};
  SeededRng srng(2026, 301);
  const DiscriminationResult sres =
      discriminate_state(scopies, stable, 50, 4, srng);
  const bool small_fails = !sres.evolving;  // the protocol cannot tell

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "qubit var*4N %.3f (tol [1,3]); chain hits %d/5 (tol >= 4); "
                "accuracy %.2f (tol >= 0.9); small-cut declares %s",
                norm_var, hits, accuracy,
                sres.evolving ? "evolving (BAD)" : "equilibrium (documented)");
  report(12, qubit_ok && mle_ok && accuracy >= 0.9 && small_fails, buf,
         timer.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto want = [&](int id) { return wanted.empty() || wanted.count(id); };

  struct Entry {
    int id;
    void (*fn)();
  };
  const Entry entries[] = {{3, criterion_3},   {4, criterion_4},
                           {5, criterion_5},   {6, criterion_6},
                           {7, criterion_7},   {8, criterion_8},
                           {9, criterion_9},   {10, criterion_10},
                           {11, criterion_11}, {12, criterion_12}};

  if (want(1) || want(2)) {
    try {
      criterion_1_and_2();
    } catch (const std::exception& e) {
      report(1, false, std::string("exception: ") + e.what(), 0.0);
      report(2, false, "skipped after exception", 0.0);
    }
  }
  for (const Entry& entry : entries) {
    if (!want(entry.id)) continue;
    try {
      entry.fn();
    } catch (const std::exception& e) {
      report(entry.id, false, std::string("exception: ") + e.what(), 0.0);
    }
  }
  std::printf("%s: %d criterion(s) failed\n", n_failed ? "GATE FAIL" : "GATE PASS",
              n_failed);
  return n_failed;
}
