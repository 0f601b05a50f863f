#pragma once
#include <string>
#include <utility>
#include <vector>

#include "qlab/dynamics.hpp"

// Operational side of the laboratory: Born-probability tables over a
// time grid, maximum-likelihood readout, Cramer-Rao comparison, and the
// evolving-vs-equilibrium discrimination protocol.

namespace qlab {

// Measurement basis on the kept register: columns of u are the measured
// vectors. An empty u means the computational basis.
struct MeasurementBasis {
  std::string id = "computational";
  Eigen::MatrixXcd u;
};

// p_xi(t_k) for every outcome on an increasing time grid. Between grid
// points, log p is interpolated by a monotone cubic (order 3; order 1
// when the grid has only two points), clamped below at log(1e-300) so
// zero-probability entries stay finite. A spacing above max_spacing
// only raises the grid_too_coarse flag; the table stays usable.
struct LikelihoodTable {
  Eigen::VectorXd t_grid;
  MeasurementBasis basis;
  Eigen::MatrixXd probabilities;  // rows: outcomes, columns: grid times
  int interpolation_order = 3;
  double max_spacing = 0.05;
  bool grid_too_coarse = false;

  long n_outcomes() const { return probabilities.rows(); }
  double t_lo() const { return t_grid[0]; }
  double t_hi() const { return t_grid[t_grid.size() - 1]; }

  // interpolated log p_xi(t); t is clamped to the grid range
  double log_prob(long xi, double t) const;
};

// Exact spectral evolution of psi0, reduced to side A of the partition,
// measured in `basis`. Columns are validated to sum to 1 within 1e-8;
// entries in [-1e-12, 0) are clamped to zero, anything lower throws.
LikelihoodTable likelihood_table(const PureState& psi0,
                                 const HamiltonianBundle& hb,
                                 const SubsystemPartition& part,
                                 const MeasurementBasis& basis,
                                 const Eigen::VectorXd& t_grid,
                                 double max_spacing = 0.05);

struct MleResult {
  double t_est = 0.0;
  double loglik_max = 0.0;
  std::vector<std::pair<double, double>> loglik_curve;  // grid samples
  std::vector<double> local_maxima;  // refined, best first, within 2 nats
  double score = 0.0;                // (t_est - true_t0)^2
  bool degenerate = false;  // grid range of loglik below 1e-6 per sample
};

// Log-likelihood maximization: full grid scan, then golden-section
// refinement of every local maximum within 2 nats of the best, to a
// time resolution of 1e-4. An outcome whose probability row is zero on
// the whole grid throws (table and samples disagree).
MleResult mle(const SampleSet& samples, const LikelihoodTable& table);

struct CramerRaoRow {
  long N = 0;
  double empirical_var = 0.0;  // mean (t_est - t0)^2 over repetitions
  double bound = 0.0;          // 1 / (N f(t0)); +inf when f(t0) ~ 0
};

struct CramerRaoResult {
  double fisher_t0 = 0.0;  // basis Fisher value of the true state at t0
  bool regular = true;     // false when fisher_t0 vanishes
  std::vector<CramerRaoRow> rows;
};

struct CramerRaoConfig {
  HamiltonianBundle ham;
  PureState psi0;
  SubsystemPartition partition;
  MeasurementBasis basis;
  double t0 = 0.0;
  Eigen::VectorXd t_grid;  // search range for the estimator
  std::vector<long> N_list;
  int repetitions = 100;
  double max_spacing = 0.05;
};

// Repeated sampling at the true time followed by MLE, tabulating the
// empirical estimator variance against the information bound.
CramerRaoResult cramer_rao_experiment(const CramerRaoConfig& cfg,
                                      SeededRng& rng);

struct DiscriminationResult {
  bool evolving = false;
  double confidence = 0.0;   // bootstrap agreement with the decision
  double var_single = 0.0;   // estimate variance with N_per_trial samples
  double var_double = 0.0;   // with 2 N_per_trial samples
  double fisher_ref = 0.0;   // table Fisher value at the pooled estimate
  double ratio = 0.0;        // worst variance-to-bound ratio of the batches
  bool degenerate = false;   // flat likelihood in most trials
};

// Decides whether the copies carry a usable time signal. Each trial
// estimates t from batches of N and 2N samples (copies are cycled when
// fewer than trials are supplied); "evolving" requires both batch
// variances to sit within ratio_threshold of the 1/(N f) prediction,
// with f read off the table at the pooled estimate, and the 2N scatter
// to beat half of a range-uniform guess. Flat likelihoods vote
// equilibrium outright. Needs trials >= 3.
DiscriminationResult discriminate_state(const std::vector<DensityMatrix>& copies,
                                        const LikelihoodTable& table,
                                        long N_per_trial, int trials,
                                        SeededRng& rng,
                                        double ratio_threshold = 3.0);

}  // namespace qlab
