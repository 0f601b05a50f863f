#pragma once
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "qlab/models.hpp"

// Closed-form and ensemble-averaged reference values: saturation levels
// of the subsystem Fisher quantities over random pure states, classical
// Fisher saturation for product-basis measurements, trace distances and
// outcome densities of Haar marginals, Holevo fidelities, the Brownian
// random-matrix toy model, and the evaporating-horizon estimator.
// Everything here is a prediction; no time evolution happens.

namespace qlab {

// Random bipartite pure state with prescribed Schmidt statistics on the
// partition's register: wishart draws a Haar state of the whole register,
// flat pins all d_A weights to 1/d_A with independent Haar factors on the
// two sides. Requires d_A <= d_Abar.
struct HaarModelSpec {
  SubsystemPartition partition;
  enum class Spectrum { wishart, flat };
  Spectrum spectrum = Spectrum::wishart;
};

PureState sample_haar_model(const HaarModelSpec& spec, SeededRng& rng);

// Ensemble means of the subsystem Fisher quantities over random pure
// states, for the cut stored in the split. S names the kept side A
// (required to be the smaller factor), B its complement. The _flat
// fields set the Schmidt-spectrum integral to zero (flat spectrum); the
// _thermo fields are the large-d_B simplifications built from the local
// term content alone.
struct HaarSaturation {
  double F_S = 0.0;        // exact ensemble mean, 2 F_plus - 2 F_minus
  double F_S_plus = 0.0;
  double F_S_minus = 0.0;
  double F_S_flat = 0.0;
  double F_S_nonflat = 0.0;    // F_S - F_S_flat, carries the spectral integral
  double F_S_thermo = 0.0;     // 2/d_B * variance of the S-local terms
  double F_B = 0.0;            // complement mean via the sum rules
  double F_B_flat = 0.0;
  double F_B_thermo = 0.0;     // 4 * (Tr_B Hb^2 / d_B - (Tr_B Hb / d_B)^2)
  double spectral_integral = 0.0;  // I = 2 d_S^2 / d_B (Wishart marginal)
};

// All traces are evaluated by Pauli-string counting on the split's term
// lists; nothing is densified. Throws std::invalid_argument when the A
// side is the larger factor.
HaarSaturation haar_saturation_fa(const HamiltonianSplit& split);

// Saturation of F_A for a state that equilibrates to a finite-temperature
// ensemble instead of the maximally mixed one: the branch with the
// smaller equilibrium entropy is entropically suppressed.
double finite_temperature_fa(double S_A_eq, double S_Abar_eq,
                             double varH_A_eq);

// Late-time mean of the computational-basis classical Fisher information
// over random pure states.
struct CfiSaturation {
  double full = 0.0;  // (2/d) (Tr H^2 - sum_a H_aa^2)
  double sub = 0.0;   // kept side A of the partition; needs d_A >= d_Abar
};

CfiSaturation cfi_saturation(const HamiltonianBundle& hb,
                             const SubsystemPartition& part);

// Mean total-variation distance between the computational-basis outcome
// distribution of a Haar marginal and the uniform one.
//   trace_distance_full(d) = 2 (1 - 1/d)^d  ->  2/e
//   trace_distance_sub(d, d_Abar): the measured block has dimension
//   d / d_Abar; evaluated through lgamma so large d stay finite.
double trace_distance_full(long d);
double trace_distance_sub(long d, long d_Abar);

// Density of a single outcome probability lambda = <a|rho_A|a> of a Haar
// marginal: Beta(d_Abar, d - d_Abar) on [0,1], mean d_Abar / d = 1/d_A.
// d_Abar = 1 covers the full-system case (d-1)(1-lambda)^{d-2}.
double outcome_density(double lambda, long d, long d_Abar);

// Tr sqrt(rho_R) sqrt(sigma_R) where R is side A of the partition,
// rho_R from psi and sigma_R from the energy-centered companion state
// (H - <H>) |psi> / sqrt(Var). Predicted value: 1 when R is the smaller
// factor, n_B / n otherwise.
struct HolevoFidelity {
  double measured = 0.0;
  double predicted = 0.0;
};

HolevoFidelity holevo_fidelity(const PureState& psi,
                               const HamiltonianBundle& hb,
                               const SubsystemPartition& part);

struct HolevoEnsemble {
  double measured_mean = 0.0;
  double measured_stderr = 0.0;
  double predicted = 0.0;
};

// mean of holevo_fidelity.measured over Haar-random inputs
HolevoEnsemble holevo_fidelity_ensemble(const HamiltonianBundle& hb,
                                        const SubsystemPartition& part,
                                        int samples, SeededRng& rng);

// Brownian random-matrix evolution from a partly entangled initial
// ensemble, encoded by the bath-side projector P_B. The register keeps S
// on the low bits. standard() builds P_B = 1_{B1} (x) |phi0><phi0| with
// the inner bath block matching d_S and phi0 a seeded random product
// state on the remaining bath sites.
struct BgueSpec {
  int n_S = 0;
  int n_B = 0;
  HamiltonianBundle ham;       // on n_S + n_B sites
  Eigen::MatrixXcd P_B;        // d_B x d_B projector, Tr P_B = d_S

  long d_S() const { return 1L << n_S; }
  long d_B() const { return 1L << n_B; }

  static BgueSpec standard(const HamiltonianBundle& hb, int n_S,
                           SeededRng& rng);
};

struct BguePoint {
  double t = 0.0;
  double F_S = 0.0;
  double F_B = 0.0;      // F_S + F_rot
  double F_ent = 0.0;    // equals F_S for this ensemble
  double F_rot = 0.0;    // 4 <H^2> - 4 F_S_plus
  double F_S_plus = 0.0;
  double F_S_minus = 0.0;
  double H2 = 0.0;       // ensemble mean of <H^2> at t
};

// Exact low-moment averages of the Brownian ensemble on the grid. The
// t -> infinity limits land on the flat-spectrum fields of
// haar_saturation_fa for the same Hamiltonian and cut. Dense evaluation:
// meant for registers up to ~10 sites. Throws for d_B <= 2.
std::vector<BguePoint> bgue_curves(const BgueSpec& spec,
                                   const Eigen::VectorXd& t_grid);

// The eight decay profiles multiplying the coefficient rows inside
// bgue_curves. At t = 0 the first equals 1 and the rest vanish, so the
// curves start from the bare second-moment coefficients.
std::array<double, 8> bgue_profiles(double d_B, double t);

// Evaporating horizon with explicit Newton constant. The mass follows
// M(t)^3 = M0^3 (1 - t / t_total) with t_total = G_N^2 M0^3; alpha
// scales the emission statistics, not the trajectory.
struct BlackHoleSpec {
  double M0 = 1.0;
  double G_N = 1.0;
  double alpha = 1.0;

  double t_total() const { return G_N * G_N * M0 * M0 * M0; }
  // Radiated coarse entropy overtakes the horizon's here. The gas carries
  // 4/3 units of entropy per unit of horizon entropy released (massless
  // gas in three space dimensions), so the crossover sits at M^2 = 4/7 M0^2.
  double page_time() const {
    return t_total() * (1.0 - std::pow(4.0 / 7.0, 1.5));
  }
};

// Radiation-side estimate at one instant. Before the crossover the
// Fisher value is suppressed by exp(-(S_B - S_R)), far below any
// representable float, so F_R stays empty and the exponent is reported
// instead.
struct BhPoint {
  double mass = 0.0;
  double temperature = 0.0;  // 1 / (8 pi G_N M)
  double var_H_R = 0.0;      // (alpha / G_N) log 1/(1 - t/t_total)
  double S_B = 0.0;          // 4 pi G_N M(t)^2
  double S_R = 0.0;          // (4/3) * 4 pi G_N (M0^2 - M(t)^2)
  bool post_page = false;
  std::optional<double> F_R;                    // set iff post_page
  std::optional<double> suppression_exponent;   // S_B - S_R, iff pre-page
};

// valid for 0 <= t < t_total
BhPoint bh_radiation_qfi(const BlackHoleSpec& spec, double t);

}  // namespace qlab
