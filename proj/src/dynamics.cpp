#include "qlab/dynamics.hpp"

#include <cmath>

namespace qlab {

Propagator::Propagator(const HamiltonianBundle& hb, const PureState& psi0)
    : hb_(&hb), c0_(hb.spectral().vectors.adjoint() * psi0.amplitudes) {}

PureState Propagator::at(double t) const {
  const auto& sp = hb_->spectral();
  Eigen::VectorXcd c = c0_;
  for (long k = 0; k < c.size(); ++k)
    c[k] *= std::polar(1.0, -sp.energies[k] * t);
  return PureState{hb_->n_sites, sp.vectors * c};
}

PureState evolve(const HamiltonianBundle& hb, const PureState& psi0, double t) {
  return Propagator(hb, psi0).at(t);
}

ReducedPair reduced_state_and_derivative(const PureState& psi0,
                                         const HamiltonianBundle& hb,
                                         const SubsystemPartition& part,
                                         double t, Side keep) {
  const PureState psi = evolve(hb, psi0, t);
  const Eigen::MatrixXcd m = amplitude_matrix(psi, part);
  const PureState hpsi{psi.n_sites, hb.apply(psi.amplitudes)};
  const Eigen::MatrixXcd w = amplitude_matrix(hpsi, part);

  ReducedPair out;
  const cx mi(0, -1);
  if (keep == Side::A) {
    out.rho = DensityMatrix{m * m.adjoint()};
    out.drho = mi * (w * m.adjoint() - m * w.adjoint());
  } else {
    out.rho = DensityMatrix{(m.adjoint() * m).transpose()};
    out.drho = mi * (m.adjoint() * w - w.adjoint() * m).transpose();
  }
  return out;
}

namespace {

struct LindbladRhs {
  const Eigen::MatrixXcd* H;
  const std::vector<Eigen::MatrixXcd>* jumps;
  double gamma;
  Eigen::MatrixXcd dissip;  // gamma * sum L^dag L

  Eigen::MatrixXcd operator()(const Eigen::MatrixXcd& rho) const {
    const cx mi(0, -1);
    Eigen::MatrixXcd out = mi * ((*H) * rho - rho * (*H));
    for (const auto& l : *jumps) out += gamma * (l * rho * l.adjoint());
    out -= 0.5 * (dissip * rho + rho * dissip);
    return out;
  }
};

LindbladRhs make_rhs(const LindbladSpec& spec, long dim) {
  LindbladRhs rhs{&spec.ham.H, &spec.jumps, spec.gamma,
                  Eigen::MatrixXcd::Zero(dim, dim)};
  for (const auto& l : spec.jumps) rhs.dissip += spec.gamma * (l.adjoint() * l);
  return rhs;
}

}  // namespace

Eigen::MatrixXcd lindblad_apply(const LindbladSpec& spec,
                                const DensityMatrix& rho) {
  if (rho.dim() != spec.ham.H.rows())
    throw std::invalid_argument("lindblad_apply: dimension mismatch");
  return make_rhs(spec, rho.dim())(rho.elements);
}

Trajectory lindblad_rk4(const LindbladSpec& spec, const DensityMatrix& rho0,
                        const std::vector<double>& t_grid, double dt) {
  if (t_grid.empty()) throw std::invalid_argument("empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (t_grid[i] <= t_grid[i - 1])
      throw std::invalid_argument("time grid must increase");
  if (dt <= 0) throw std::invalid_argument("dt must be positive");

  const LindbladRhs rhs = make_rhs(spec, rho0.dim());

  Trajectory out;
  out.times = t_grid;
  out.states.reserve(t_grid.size());

  Eigen::MatrixXcd rho = rho0.elements;
  out.states.push_back(DensityMatrix{rho});
  for (std::size_t seg = 1; seg < t_grid.size(); ++seg) {
    const double len = t_grid[seg] - t_grid[seg - 1];
    const long steps = std::max(1L, static_cast<long>(std::ceil(len / dt - 1e-12)));
    const double h = len / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
      const Eigen::MatrixXcd k1 = rhs(rho);
      const Eigen::MatrixXcd k2 = rhs(rho + 0.5 * h * k1);
      const Eigen::MatrixXcd k3 = rhs(rho + 0.5 * h * k2);
      const Eigen::MatrixXcd k4 = rhs(rho + h * k3);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      rho = 0.5 * (rho + rho.adjoint()).eval();
      const double tr = rho.trace().real();
      if (std::abs(tr - 1.0) > 1e-6)
        throw numerical_error("trace drift exceeds 1e-6 in lindblad_rk4");
      rho /= tr;
    }
    out.states.push_back(DensityMatrix{rho});
  }
  return out;
}

DecayFit fit_exponential_decay(
    const std::vector<double>& ts, const std::vector<double>& ys,
    std::optional<std::pair<double, double>> window) {
  if (ts.size() != ys.size() || ts.size() < 3)
    throw std::invalid_argument("need at least 3 samples");

  std::size_t lo = 0, hi = ts.size();
  if (window) {
    while (lo < ts.size() && ts[lo] < window->first) ++lo;
    while (hi > lo && ts[hi - 1] > window->second) --hi;
  } else {
    const double y0 = ys.front();
    while (lo < ts.size() && ys[lo] > 0.80 * y0) ++lo;
    hi = lo;
    while (hi < ts.size() && ys[hi] >= 0.05 * y0) ++hi;
  }
  if (hi - lo < 3) throw std::invalid_argument("fit window holds fewer than 3 samples");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    if (ys[i] <= 0.0) throw std::invalid_argument("nonpositive sample in fit window");
    const double x = ts[i], y = std::log(ys[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) throw std::invalid_argument("degenerate fit window");
  const double slope = (n * sxy - sx * sy) / denom;
  const double icept = (sy - slope * sx) / n;

  DecayFit fit;
  fit.rate = -slope;
  fit.amplitude = std::exp(icept);
  fit.t_lo = ts[lo];
  fit.t_hi = ts[hi - 1];
  double rss = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double r = std::log(ys[i]) - (icept + slope * ts[i]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

double lindblad_gap(const LindbladSpec& spec) {
  const long d = spec.ham.H.rows();
  const long dd = d * d;
  Eigen::MatrixXcd sup = Eigen::MatrixXcd::Zero(dd, dd);
  const auto idx = [d](long i, long j) { return i + d * j; };
  const cx mi(0, -1);

  Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& l : spec.jumps) k += spec.gamma * (l.adjoint() * l);

  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) {
      for (long m = 0; m < d; ++m) {
        sup(idx(i, j), idx(m, j)) += mi * spec.ham.H(i, m) - 0.5 * k(i, m);
        sup(idx(i, j), idx(i, m)) += -mi * spec.ham.H(m, j) - 0.5 * k(m, j);
      }
      for (const auto& l : spec.jumps)
        for (long m = 0; m < d; ++m)
          for (long p = 0; p < d; ++p)
            sup(idx(i, j), idx(m, p)) +=
                spec.gamma * l(i, m) * std::conj(l(j, p));
    }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(sup, false);
  if (es.info() != Eigen::Success) throw numerical_error("generator eig failed");
  const auto& ev = es.eigenvalues();
  bool stationary = false;
  double gap = std::numeric_limits<double>::infinity();
  for (long q = 0; q < ev.size(); ++q) {
    if (std::abs(ev[q]) <= 1e-8) {
      stationary = true;
    } else {
      gap = std::min(gap, -ev[q].real());
    }
  }
  if (!stationary) throw numerical_error("generator has no stationary mode");
  return gap;
}

}  // namespace qlab
