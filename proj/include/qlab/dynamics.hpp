#pragma once
#include <optional>
#include <utility>
#include <vector>

#include "qlab/models.hpp"

namespace qlab {

// Unitary evolution via the cached spectral decomposition; exact up to
// the accuracy of the eigensolve, no step-size error.
PureState evolve(const HamiltonianBundle& hb, const PureState& psi0, double t);

// Holds V^dag psi0 so each additional time costs one phase twist and one
// matrix-vector product.
class Propagator {
 public:
  Propagator(const HamiltonianBundle& hb, const PureState& psi0);
  PureState at(double t) const;

 private:
  const HamiltonianBundle* hb_;
  Eigen::VectorXcd c0_;
};

struct ReducedPair {
  DensityMatrix rho;
  Eigen::MatrixXcd drho;  // exact -i Tr_drop [H, |psi(t)><psi(t)|]
};
ReducedPair reduced_state_and_derivative(const PureState& psi0,
                                         const HamiltonianBundle& hb,
                                         const SubsystemPartition& part,
                                         double t, Side keep = Side::A);

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
};

// One application of the open-system generator
//   -i[H, rho] + gamma sum_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2).
// The result is traceless, not a state.
Eigen::MatrixXcd lindblad_apply(const LindbladSpec& spec,
                                const DensityMatrix& rho);

// Classic fixed-step RK4 for drho/dt = lindblad_apply(spec, rho),
// sampling the solution on t_grid (strictly increasing; integration
// starts at t_grid.front()). Steps are shrunk per interval to land on
// grid points exactly. Each step re-Hermitizes and renormalizes; a trace
// drift beyond 1e-6 before renormalization throws numerical_error.
Trajectory lindblad_rk4(const LindbladSpec& spec, const DensityMatrix& rho0,
                        const std::vector<double>& t_grid, double dt = 0.01);

struct DecayFit {
  double rate = 0.0;
  double amplitude = 0.0;
  double t_lo = 0.0, t_hi = 0.0;  // window actually used
  double residual = 0.0;          // rms of log-residuals
};

// Least squares of log y against t. The default window keeps the samples
// with y between 80% and 5% of the initial value, which skips the
// short-time transient and the noise floor.
DecayFit fit_exponential_decay(
    const std::vector<double>& ts, const std::vector<double>& ys,
    std::optional<std::pair<double, double>> window = std::nullopt);

// Spectral gap of the vectorized generator: the smallest -Re(eigenvalue)
// over decaying modes. Eigenvalues within 1e-8 of zero count as
// stationary; one must exist.
double lindblad_gap(const LindbladSpec& spec);

}  // namespace qlab
