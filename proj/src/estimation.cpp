#include "qlab/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qlab/fisher.hpp"

namespace qlab {

namespace {

double safe_log(double p) { return std::log(std::max(p, 1e-300)); }

// Fritsch-Carlson tangent at node i from the secants of the incident
// segments; flat across sign changes so the cubic stays monotone.
double pchip_tangent(long i, long n, const Eigen::VectorXd& t,
                     const Eigen::VectorXd& y) {
  auto h = [&](long k) { return t[k + 1] - t[k]; };
  auto m = [&](long k) { return (y[k + 1] - y[k]) / h(k); };
  if (i == 0 || i == n - 1) {
    // three-point boundary estimate, clamped to preserve shape
    const long a = (i == 0) ? 0 : n - 2;    // near segment
    const long b = (i == 0) ? 1 : n - 3;    // far segment
    double d = ((2.0 * h(a) + h(b)) * m(a) - h(a) * m(b)) / (h(a) + h(b));
    if (d * m(a) <= 0.0) return 0.0;
    if (m(a) * m(b) <= 0.0 && std::abs(d) > 3.0 * std::abs(m(a)))
      return 3.0 * m(a);
    return d;
  }
  const double m0 = m(i - 1), m1 = m(i);
  if (m0 * m1 <= 0.0) return 0.0;
  const double w1 = 2.0 * h(i) + h(i - 1);
  const double w2 = h(i) + 2.0 * h(i - 1);
  return (w1 + w2) / (w1 / m0 + w2 / m1);
}

template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tol) {
  const double gr = 0.6180339887498949;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

double sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

}  // namespace

double LikelihoodTable::log_prob(long xi, double t) const {
  if (xi < 0 || xi >= probabilities.rows())
    throw std::invalid_argument("log_prob: outcome index out of range");
  const long n = t_grid.size();
  if (t <= t_grid[0]) return safe_log(probabilities(xi, 0));
  if (t >= t_grid[n - 1]) return safe_log(probabilities(xi, n - 1));

  const double* lo = t_grid.data();
  long s = std::upper_bound(lo, lo + n, t) - lo - 1;
  s = std::min(s, n - 2);

  const double h = t_grid[s + 1] - t_grid[s];
  const double y0 = safe_log(probabilities(xi, s));
  const double y1 = safe_log(probabilities(xi, s + 1));
  if (interpolation_order == 1) return y0 + (y1 - y0) * (t - t_grid[s]) / h;

  // local window of log values feeding the two tangents
  const long wlo = std::max<long>(0, s - 1);
  const long whi = std::min(n - 1, s + 2);
  Eigen::VectorXd tw(whi - wlo + 1), yw(whi - wlo + 1);
  for (long k = wlo; k <= whi; ++k) {
    tw[k - wlo] = t_grid[k];
    yw[k - wlo] = safe_log(probabilities(xi, k));
  }
  const double d0 = pchip_tangent(s - wlo, tw.size(), tw, yw);
  const double d1 = pchip_tangent(s + 1 - wlo, tw.size(), tw, yw);

  const double u = (t - t_grid[s]) / h;
  const double u2 = u * u, u3 = u2 * u;
  return y0 * (2.0 * u3 - 3.0 * u2 + 1.0) + h * d0 * (u3 - 2.0 * u2 + u) +
         y1 * (-2.0 * u3 + 3.0 * u2) + h * d1 * (u3 - u2);
}

LikelihoodTable likelihood_table(const PureState& psi0,
                                 const HamiltonianBundle& hb,
                                 const SubsystemPartition& part,
                                 const MeasurementBasis& basis,
                                 const Eigen::VectorXd& t_grid,
                                 double max_spacing) {
  if (psi0.n_sites != part.n_total || psi0.n_sites != hb.n_sites)
    throw std::invalid_argument(
        "likelihood_table: state, Hamiltonian and partition disagree");
  if (t_grid.size() < 2)
    throw std::invalid_argument("likelihood_table: need at least two times");
  if (max_spacing <= 0.0)
    throw std::invalid_argument("likelihood_table: max_spacing must be > 0");

  const long d_A = part.d_A();
  if (basis.u.size() != 0) {
    if (basis.u.rows() != d_A || basis.u.cols() != d_A)
      throw std::invalid_argument(
          "likelihood_table: basis does not act on the kept register");
    const double dev = (basis.u.adjoint() * basis.u -
                        Eigen::MatrixXcd::Identity(d_A, d_A))
                           .cwiseAbs()
                           .maxCoeff();
    if (dev > 1e-8)
      throw std::invalid_argument("likelihood_table: basis is not unitary");
  }

  LikelihoodTable tab;
  tab.t_grid = t_grid;
  tab.basis = basis;
  tab.max_spacing = max_spacing;
  tab.interpolation_order = (t_grid.size() == 2) ? 1 : 3;
  for (long k = 0; k + 1 < t_grid.size(); ++k) {
    const double h = t_grid[k + 1] - t_grid[k];
    if (h <= 0.0)
      throw std::invalid_argument(
          "likelihood_table: t_grid must be strictly increasing");
    if (h > max_spacing) tab.grid_too_coarse = true;
  }

  tab.probabilities.resize(d_A, t_grid.size());
  Propagator prop(hb, psi0);
  for (long k = 0; k < t_grid.size(); ++k) {
    const DensityMatrix rho_A = partial_trace(prop.at(t_grid[k]), part, Side::A);
    Eigen::VectorXd p;
    if (basis.u.size() == 0)
      p = rho_A.elements.diagonal().real();
    else
      p = (basis.u.adjoint() * rho_A.elements * basis.u).diagonal().real();
    for (long i = 0; i < d_A; ++i) {
      if (p[i] < -1e-12)
        throw numerical_error("likelihood_table: negative outcome probability");
      if (p[i] < 0.0) p[i] = 0.0;
    }
    if (std::abs(p.sum() - 1.0) > 1e-8)
      throw numerical_error("likelihood_table: column does not sum to one");
    tab.probabilities.col(k) = p;
  }
  return tab;
}

MleResult mle(const SampleSet& samples, const LikelihoodTable& table) {
  const long n_out = table.n_outcomes();
  const long n_t = table.t_grid.size();
  if (samples.outcomes.empty())
    throw std::invalid_argument("mle: sample set is empty");

  std::vector<long> counts(n_out, 0);
  for (int o : samples.outcomes) {
    if (o < 0 || o >= n_out)
      throw std::invalid_argument("mle: outcome index outside the table");
    ++counts[o];
  }
  std::vector<long> seen;
  for (long xi = 0; xi < n_out; ++xi)
    if (counts[xi] > 0) {
      if (table.probabilities.row(xi).maxCoeff() <= 0.0)
        throw std::invalid_argument(
            "mle: observed outcome is impossible at every tabulated time");
      seen.push_back(xi);
    }

  Eigen::VectorXd ell(n_t);
  for (long k = 0; k < n_t; ++k) {
    double s = 0.0;
    for (long xi : seen)
      s += static_cast<double>(counts[xi]) * safe_log(table.probabilities(xi, k));
    ell[k] = s;
  }

  MleResult res;
  res.loglik_curve.reserve(n_t);
  for (long k = 0; k < n_t; ++k)
    res.loglik_curve.emplace_back(table.t_grid[k], ell[k]);
  const double gmax = ell.maxCoeff();
  const double n_samples = static_cast<double>(samples.outcomes.size());
  res.degenerate = (gmax - ell.minCoeff()) < 1e-6 * n_samples;

  auto loglik = [&](double t) {
    double s = 0.0;
    for (long xi : seen)
      s += static_cast<double>(counts[xi]) * table.log_prob(xi, t);
    return s;
  };

  // refine every node-level peak within 2 nats of the best
  std::vector<std::pair<double, double>> peaks;  // (loglik, t), best first
  for (long k = 0; k < n_t; ++k) {
    const bool up = (k == 0) || ell[k] >= ell[k - 1];
    const bool down = (k == n_t - 1) || ell[k] >= ell[k + 1];
    if (!up || !down || ell[k] < gmax - 2.0) continue;
    const double a = table.t_grid[std::max<long>(k - 1, 0)];
    const double b = table.t_grid[std::min(k + 1, n_t - 1)];
    auto [x, fx] = golden_max(loglik, a, b, 1e-4);
    if (fx < ell[k]) {
      x = table.t_grid[k];
      fx = ell[k];
    }
    bool dup = false;
    for (const auto& pk : peaks)
      if (std::abs(pk.second - x) <= 1e-3) {
        dup = true;
        break;
      }
    if (!dup) peaks.emplace_back(fx, x);
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const auto& l, const auto& r) { return l.first > r.first; });

  res.t_est = peaks.front().second;
  res.loglik_max = peaks.front().first;
  res.local_maxima.reserve(peaks.size());
  for (const auto& pk : peaks) res.local_maxima.push_back(pk.second);
  const double d = res.t_est - samples.true_t0;
  res.score = d * d;
  return res;
}

CramerRaoResult cramer_rao_experiment(const CramerRaoConfig& cfg,
                                      SeededRng& rng) {
  if (cfg.N_list.empty())
    throw std::invalid_argument("cramer_rao_experiment: N_list is empty");
  for (long N : cfg.N_list)
    if (N < 1)
      throw std::invalid_argument("cramer_rao_experiment: N must be >= 1");
  if (cfg.repetitions < 1)
    throw std::invalid_argument("cramer_rao_experiment: repetitions < 1");
  if (cfg.t_grid.size() < 2 || cfg.t0 < cfg.t_grid[0] ||
      cfg.t0 > cfg.t_grid[cfg.t_grid.size() - 1])
    throw std::invalid_argument(
        "cramer_rao_experiment: true time outside the search grid");

  const LikelihoodTable table = likelihood_table(
      cfg.psi0, cfg.ham, cfg.partition, cfg.basis, cfg.t_grid, cfg.max_spacing);
  const ReducedPair rp = reduced_state_and_derivative(cfg.psi0, cfg.ham,
                                                      cfg.partition, cfg.t0);
  const Eigen::MatrixXcd* bp = cfg.basis.u.size() ? &cfg.basis.u : nullptr;

  CramerRaoResult res;
  res.fisher_t0 = cfi(rp.rho, rp.drho, bp);
  res.regular = res.fisher_t0 >= 1e-12;
  const double inf = std::numeric_limits<double>::infinity();
  for (long N : cfg.N_list) {
    double acc = 0.0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      SampleSet s = born_sample(rp.rho, bp, N, rng);
      s.true_t0 = cfg.t0;
      acc += mle(s, table).score;
    }
    const double dN = static_cast<double>(N);
    res.rows.push_back({N, acc / cfg.repetitions,
                        res.regular ? 1.0 / (dN * res.fisher_t0) : inf});
  }
  return res;
}

namespace {

// Fisher information of the tabulated outcome distribution at time t,
// sum_xi p_xi (d log p_xi / dt)^2, with the derivative taken on the
// interpolant. Outcome rows pinned at the clamp floor contribute 0.
double table_fisher(const LikelihoodTable& table, double t) {
  const double lo = table.t_lo(), hi = table.t_hi();
  const double h = std::min(1e-5, 0.25 * (hi - lo));
  const double ta = std::max(lo, std::min(t - h, hi - 2.0 * h));
  const double tb = ta + 2.0 * h;
  const double tm = 0.5 * (ta + tb);
  double f = 0.0;
  for (long xi = 0; xi < table.n_outcomes(); ++xi) {
    const double la = table.log_prob(xi, ta);
    const double lb = table.log_prob(xi, tb);
    const double p = std::exp(table.log_prob(xi, tm));
    if (p < 1e-290) continue;
    const double d = (lb - la) / (tb - ta);
    f += p * d * d;
  }
  return f;
}

}  // namespace

DiscriminationResult discriminate_state(const std::vector<DensityMatrix>& copies,
                                        const LikelihoodTable& table,
                                        long N_per_trial, int trials,
                                        SeededRng& rng,
                                        double ratio_threshold) {
  if (trials < 3)
    throw std::invalid_argument("discriminate_state: needs at least 3 trials");
  if (N_per_trial < 1)
    throw std::invalid_argument("discriminate_state: N_per_trial < 1");
  if (copies.empty())
    throw std::invalid_argument("discriminate_state: no copies supplied");
  for (const auto& c : copies)
    if (c.dim() != table.n_outcomes())
      throw std::invalid_argument(
          "discriminate_state: copy dimension does not match the table");

  const Eigen::MatrixXcd* bp = table.basis.u.size() ? &table.basis.u : nullptr;
  std::vector<double> est1(trials), est2(trials);
  std::vector<char> deg1(trials), deg2(trials);
  for (int i = 0; i < trials; ++i) {
    const DensityMatrix& state = copies[i % copies.size()];
    MleResult a = mle(born_sample(state, bp, N_per_trial, rng), table);
    MleResult b = mle(born_sample(state, bp, 2 * N_per_trial, rng), table);
    est1[i] = a.t_est;
    est2[i] = b.t_est;
    deg1[i] = a.degenerate;
    deg2[i] = b.degenerate;
  }

  const double range = table.t_hi() - table.t_lo();
  const double N = static_cast<double>(N_per_trial);
  const double inf = std::numeric_limits<double>::infinity();
  // A blind uniform guess over the search range has variance range^2/12;
  // estimates that beat half of it are genuinely concentrating.
  auto decide = [&](const std::vector<double>& a, const std::vector<double>& b,
                    long n_deg, double& vs, double& vd, double& fref,
                    double& ratio) {
    vs = sample_variance(a);
    vd = sample_variance(b);
    double mean = 0.0;
    for (double x : b) mean += x;
    fref = table_fisher(table, mean / static_cast<double>(b.size()));
    ratio = fref > 0.0 ? std::max(vs * N * fref, vd * 2.0 * N * fref)
                       : (vs + vd > 0.0 ? inf : 0.0);
    const bool flat = 2 * n_deg >= 2L * trials || fref * range * range < 1e-9;
    const bool tight = vd <= range * range / 24.0;
    return !flat && tight && ratio <= ratio_threshold;
  };

  DiscriminationResult res;
  long n_deg = 0;
  for (int i = 0; i < trials; ++i) n_deg += deg1[i] + deg2[i];
  res.degenerate = 2 * n_deg >= 2L * trials;
  res.evolving = decide(est1, est2, n_deg, res.var_single, res.var_double,
                        res.fisher_ref, res.ratio);

  const int B = 200;
  int agree = 0;
  std::vector<double> a(trials), b(trials);
  for (int it = 0; it < B; ++it) {
    long nd = 0;
    for (int i = 0; i < trials; ++i) {
      const long j = rng.integer(trials), k = rng.integer(trials);
      a[i] = est1[j];
      b[i] = est2[k];
      nd += deg1[j] + deg2[k];
    }
    double vs, vd, fr, ratio;
    if (decide(a, b, nd, vs, vd, fr, ratio) == res.evolving) ++agree;
  }
  res.confidence = static_cast<double>(agree) / B;
  return res;
}

}  // namespace qlab
