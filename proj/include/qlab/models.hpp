#pragma once
#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "qlab/hilbert.hpp"

// Spin-chain Hamiltonians kept in two synchronized forms: a Pauli term
// list (for streaming matrix-vector products and support bookkeeping)
// and the dense matrix (for diagonalization, dims <= 2^12).

namespace qlab {

// Pauli string in symplectic encoding: X on bits of x_mask, Z on bits of
// z_mask, Y where both are set. Hermitian by construction: the string
// carries the phase i^{#Y}, so the matrix is coeff * (real signed
// permutation) for even #Y.
struct PauliTerm {
  double coeff = 0.0;
  std::uint64_t x_mask = 0;
  std::uint64_t z_mask = 0;

  std::uint64_t support() const { return x_mask | z_mask; }
};

// out += sum_k terms[k] applied to psi
Eigen::VectorXcd apply_terms(const std::vector<PauliTerm>& terms,
                             const Eigen::VectorXcd& psi);
Eigen::MatrixXcd dense_from_terms(int n_sites,
                                  const std::vector<PauliTerm>& terms);

// term list re-indexed to the local register defined by `sites`
// (every term must be supported inside `sites`)
std::vector<PauliTerm> localize_terms(const std::vector<PauliTerm>& terms,
                                      const std::vector<int>& sites);

struct Spectral {
  Eigen::VectorXd energies;   // ascending
  Eigen::MatrixXcd vectors;   // columns, gauge-fixed by hermitian_eig
};

struct HamiltonianBundle {
  int n_sites = 0;
  std::vector<PauliTerm> terms;
  Eigen::MatrixXcd H;

  Eigen::VectorXcd apply(const Eigen::VectorXcd& psi) const {
    return apply_terms(terms, psi);
  }
  // Diagonalization happens on first call and is cached; copies of the
  // bundle share the cache. Trigger it before fanning out worker threads.
  const Spectral& spectral() const;
  bool has_spectral() const { return static_cast<bool>(cache_); }

 private:
  mutable std::shared_ptr<Spectral> cache_;
};

enum class Boundary { periodic, open };

// H = sum_i Z_i Z_{i+1} + g sum_i X_i + h sum_i Z_i.
// Periodic chains include the wrap-around bond; n = 2 then carries the
// (0,1) bond twice.
HamiltonianBundle build_mixed_field_ising(int n_sites, double g = -1.05,
                                          double h = 0.5,
                                          Boundary bc = Boundary::periodic);

// integrable point: longitudinal field switched off
HamiltonianBundle build_tfi_integrable(int n_sites, double g = -1.05,
                                       Boundary bc = Boundary::periodic);

// H = sum_i (X_i X_{i+1} + Y_i Y_{i+1} + delta Z_i Z_{i+1}), periodic;
// commutes with the total-Z magnetization
HamiltonianBundle build_xxz(int n_sites, double delta = 0.5);

// Terms sorted by support: inside A, inside the complement, straddling.
// H_A and H_Abar are dense on the local registers (partition order);
// H_int is dense at full dimension. Embedding H_A and H_Abar back and
// adding H_int reproduces the original matrix.
struct HamiltonianSplit {
  SubsystemPartition partition;
  std::vector<PauliTerm> terms_A, terms_Abar, terms_int;
  Eigen::MatrixXcd H_A, H_Abar, H_int;
};

HamiltonianSplit split_hamiltonian(const HamiltonianBundle& hb,
                                   const SubsystemPartition& part);

// X, Y, Z on the first site then on the last site, dense at 2^n_sites
std::vector<Eigen::MatrixXcd> boundary_depolarizing_jumps(int n_sites);

struct LindbladSpec {
  HamiltonianBundle ham;
  std::vector<Eigen::MatrixXcd> jumps;
  double gamma = 1.0;
};

}  // namespace qlab
