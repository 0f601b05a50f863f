#pragma once
#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qlab/rng.hpp"

// Qubit-register linear algebra on dense Eigen types.
//
// Basis convention: site i contributes stride 2^i to the computational
// index (site 0 is the least significant bit). All reshapes, partial
// traces and Schmidt decompositions below are consistent with it.

namespace qlab {

using cx = std::complex<double>;

// Thrown when a numerical invariant is violated beyond tolerance
// (trace drift, negative probability mass, non-convergence).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PureState {
  int n_sites = 0;
  Eigen::VectorXcd amplitudes;

  long dim() const { return amplitudes.size(); }
  double norm() const { return amplitudes.norm(); }
};

struct DensityMatrix {
  Eigen::MatrixXcd elements;

  long dim() const { return elements.rows(); }
  double trace_real() const { return elements.trace().real(); }
};

// Bipartition of an n_total-site register into A and its complement.
// sites_A must be strictly increasing and within [0, n_total).
struct SubsystemPartition {
  int n_total = 0;
  std::vector<int> sites_A;

  SubsystemPartition() = default;
  SubsystemPartition(int n, std::vector<int> a);

  int n_A() const { return static_cast<int>(sites_A.size()); }
  int n_Abar() const { return n_total - n_A(); }
  long d_A() const { return 1L << n_A(); }
  long d_Abar() const { return 1L << n_Abar(); }
  std::vector<int> sites_Abar() const;

  // scatter[k] = full-register index of local basis state k
  static std::vector<long> scatter(const std::vector<int>& sites);
};

enum class Side { A, Abar };

// coefficients are the squared Schmidt weights p_i, descending, summing
// to the squared norm of the input. vectors_S spans the smaller factor
// (ties resolved to A), vectors_Sbar the larger; the state reassembles
// as sum_i sqrt(p_i) vectors_S.col(i) (x) vectors_Sbar.col(i).
struct SchmidtDecomposition {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXcd vectors_S;
  Eigen::MatrixXcd vectors_Sbar;
  SubsystemPartition partition;
  bool small_side_is_A = true;
};

// Measurement record: outcome k means basis column k (computational
// basis index if no explicit basis was supplied).
struct SampleSet {
  std::vector<int> outcomes;
  double true_t0 = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
};

// psi reshaped to a d_A x d_Abar matrix: M(a,b) = amplitudes[xA(a)+xB(b)].
Eigen::MatrixXcd amplitude_matrix(const PureState& psi,
                                  const SubsystemPartition& part);

// op (local little-endian order on `sites`) tensored with identity
// everywhere else, as a full 2^n_total matrix.
Eigen::MatrixXcd embed_operator(const Eigen::MatrixXcd& op,
                                const std::vector<int>& sites, int n_total);

DensityMatrix partial_trace(const DensityMatrix& rho,
                            const SubsystemPartition& part, Side keep);
DensityMatrix partial_trace(const PureState& psi,
                            const SubsystemPartition& part, Side keep);

SchmidtDecomposition schmidt(const PureState& psi,
                             const SubsystemPartition& part);

// Ascending eigenvalues of (M + M^dag)/2. Eigenvector columns are
// orthonormal and deterministically gauge-fixed: the largest-magnitude
// component of each column (smallest index on ties within 1e-12) is
// rotated to the positive real axis.
void hermitian_eig(const Eigen::MatrixXcd& M, Eigen::VectorXd& evals,
                   Eigen::MatrixXcd& evecs);

PureState haar_state(int n_sites, SeededRng& rng);
PureState random_product_state(int n_sites, SeededRng& rng);

// count draws from the Born distribution diag(B^dag rho B); B = identity
// when basis is null. Probabilities below -1e-10 are rejected, the
// interval [-1e-10, 0) is clamped to zero.
SampleSet born_sample(const DensityMatrix& rho, const Eigen::MatrixXcd* basis,
                      long count, SeededRng& rng);

// -sum p ln p over the spectrum, with the same PSD clamp as born_sample.
double von_neumann_entropy(const DensityMatrix& rho);
double spectrum_entropy(const Eigen::VectorXd& p);

// Mean entanglement entropy of a Haar state across a cut of m qubits out
// of n_total >= 2m, in nats.
double page_entropy(int m_qubits, int n_total_qubits);

}  // namespace qlab
