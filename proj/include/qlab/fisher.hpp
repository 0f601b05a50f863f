#pragma once
#include <optional>
#include <utility>

#include "qlab/models.hpp"

// Fisher information of subsystems of a pure state evolving under a
// chaotic Hamiltonian. The heavy entry point, subsystem_qfi, never forms
// the reduced density matrix: everything is computed from the thin SVD
// of the amplitude matrix, so one report costs O(dim * rank).

namespace qlab {

struct FisherReport {
  double F_A = 0.0;      // quantum Fisher information of the kept side
  double F_plus = 0.0;   // anticommutator part; complementary reports sum to 2 Var(H)
  double F_minus = 0.0;  // cross part (real); identical for both sides of a cut
  double F_ent = 0.0;    // contribution inside the Schmidt support
  double F_rot = 0.0;    // contribution from support rotation
  double f_comp = 0.0;   // classical FI of the computational product basis
  double f_comp_dropped = 0.0;  // |dp| mass on probability channels under the cutoff
  double F_eta = 0.0;    // conjugate-energy QFI of the same cut
  double rank_tolerance = 0.0;  // absolute Schmidt-weight cutoff applied
  int rank = 0;                 // Schmidt weights retained
  std::optional<Eigen::MatrixXcd> sld;
  std::optional<Eigen::MatrixXcd> basis;  // SLD eigenbasis, optimal measurement

  // F_A = F_ent + F_rot = 2 F_plus - 2 F_minus up to the cutoff
};

// QFI of (rho, drho) via the symmetric logarithmic derivative:
//   F = sum_{p_i+p_j > tol} 2 |<i|drho|j>|^2 / (p_i + p_j),
// tol_rel scaled by the largest eigenvalue of rho. Returns (F, L) with
// L zero on excluded pairs.
std::pair<double, Eigen::MatrixXcd> qfi(const DensityMatrix& rho,
                                        const Eigen::MatrixXcd& drho,
                                        double tol_rel = 1e-12);

// sqrt(2 (1 - Tr sqrt(sqrt(rho) sigma sqrt(rho))))
double bures_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

// Classical Fisher information of the measurement given by the columns
// of basis (computational basis when null). Channels with probability
// below tol_rel * max_p are dropped.
double cfi(const DensityMatrix& rho, const Eigen::MatrixXcd& drho,
           const Eigen::MatrixXcd* basis = nullptr, double tol_rel = 1e-12);

// Full report for the reduced state of psi on side A of the partition,
// with time generated by hb. with_operators also fills sld and basis
// (dense in d_A, noticeably more expensive).
FisherReport subsystem_qfi(const PureState& psi, const HamiltonianBundle& hb,
                           const SubsystemPartition& part,
                           double tol_rel = 1e-12, bool with_operators = false);

// QFI for the parameter conjugate to energy, generated by the centered
// anticommutator {H - <H>, rho} / (2 Var H). Equals FisherReport.F_eta.
double conjugate_energy_qfi(const PureState& psi, const HamiltonianBundle& hb,
                            const SubsystemPartition& part,
                            double tol_rel = 1e-12);

struct OptimalBasis {
  Eigen::MatrixXcd vectors;          // columns, ascending SLD eigenvalue
  Eigen::VectorXd sld_eigenvalues;
};

// Eigenbasis of the SLD; measuring in it makes the classical Fisher
// information reach the QFI on the support of rho.
OptimalBasis optimal_basis(const DensityMatrix& rho,
                           const Eigen::MatrixXcd& drho,
                           double tol_rel = 1e-12);

// Mean entanglement entropy of the columns of basis across the given
// cut of their register.
double mean_basis_entanglement(const Eigen::MatrixXcd& basis,
                               const SubsystemPartition& cut);

}  // namespace qlab
