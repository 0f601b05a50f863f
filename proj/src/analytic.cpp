#include "qlab/analytic.hpp"

#include <cmath>
#include <map>

namespace qlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

using MaskKey = std::pair<std::uint64_t, std::uint64_t>;

// coefficients of equal strings add before anything is squared
std::map<MaskKey, double> group_strings(const std::vector<PauliTerm>& terms) {
  std::map<MaskKey, double> g;
  for (const auto& t : terms) g[{t.x_mask, t.z_mask}] += t.coeff;
  return g;
}

double sum_sq_nonidentity(const std::map<MaskKey, double>& g) {
  double s = 0.0;
  for (const auto& [key, c] : g)
    if (key.first != 0 || key.second != 0) s += c * c;
  return s;
}

double identity_coeff(const std::map<MaskKey, double>& g) {
  const auto it = g.find({0, 0});
  return it == g.end() ? 0.0 : it->second;
}

// Tr[A B] without forming the product
cx trace_product(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return a.cwiseProduct(b.transpose()).sum();
}

Eigen::MatrixXcd haar_unitary(long d, SeededRng& rng) {
  Eigen::MatrixXcd g(d, d);
  for (long j = 0; j < d; ++j)
    for (long i = 0; i < d; ++i) g(i, j) = cx(rng.gaussian(), rng.gaussian());
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(d, d);
  const Eigen::MatrixXcd r = qr.matrixQR();
  // QR is Haar only after absorbing the phases of R's diagonal
  for (long j = 0; j < d; ++j) {
    const cx rj = r(j, j);
    if (std::abs(rj) > 0.0) q.col(j) *= rj / std::abs(rj);
  }
  return q;
}

// first `cols` columns of a Haar unitary on dimension `rows`
Eigen::MatrixXcd haar_isometry(long rows, long cols, SeededRng& rng) {
  Eigen::MatrixXcd g(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) g(i, j) = cx(rng.gaussian(), rng.gaussian());
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q =
      qr.householderQ() * Eigen::MatrixXcd::Identity(rows, cols);
  const Eigen::MatrixXcd r = qr.matrixQR();
  for (long j = 0; j < cols; ++j) {
    const cx rj = r(j, j);
    if (std::abs(rj) > 0.0) q.col(j) *= rj / std::abs(rj);
  }
  return q;
}

}  // namespace

PureState sample_haar_model(const HaarModelSpec& spec, SeededRng& rng) {
  const auto& part = spec.partition;
  if (part.d_A() > part.d_Abar())
    throw std::invalid_argument(
        "sample_haar_model: side A must be the smaller factor");
  if (spec.spectrum == HaarModelSpec::Spectrum::wishart)
    return haar_state(part.n_total, rng);

  const long da = part.d_A(), db = part.d_Abar();
  const Eigen::MatrixXcd v = haar_unitary(da, rng);
  const Eigen::MatrixXcd q = haar_isometry(db, da, rng);
  const auto sa = SubsystemPartition::scatter(part.sites_A);
  const auto sb = SubsystemPartition::scatter(part.sites_Abar());
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(da * db);
  const double w = 1.0 / std::sqrt(static_cast<double>(da));
  for (long i = 0; i < da; ++i)
    for (long b = 0; b < db; ++b) {
      const cx qb = w * q(b, i);
      for (long a = 0; a < da; ++a) amp[sa[a] + sb[b]] += v(a, i) * qb;
    }
  return PureState{part.n_total, std::move(amp)};
}

HaarSaturation haar_saturation_fa(const HamiltonianSplit& split) {
  const auto& part = split.partition;
  if (part.n_A() < 1)
    throw std::invalid_argument("haar_saturation_fa: empty subsystem");
  if (part.d_A() > part.d_Abar())
    throw std::invalid_argument(
        "haar_saturation_fa: side A must be the smaller factor");
  const double dS = static_cast<double>(part.d_A());
  const double dB = static_cast<double>(part.d_Abar());
  const double d = dS * dB;

  const auto gA = group_strings(split.terms_A);
  const auto gB = group_strings(split.terms_Abar);
  const auto gI = group_strings(split.terms_int);
  const double sqA = sum_sq_nonidentity(gA);
  const double sqB = sum_sq_nonidentity(gB);
  const double sqI = sum_sq_nonidentity(gI);
  // the identity string is supported in every block; split files it under A
  const double c_id =
      identity_coeff(gA) + identity_coeff(gB) + identity_coeff(gI);

  const double T2 = d * (sqA + sqB + sqI + c_id * c_id);  // Tr[H^2]
  const double T1sq = d * c_id * d * c_id;                // Tr[H]^2
  const double TB = dS * dS * dB * (sqB + c_id * c_id);   // Tr_B[(Tr_S H)^2]
  const double TS = dB * dB * dS * (sqA + c_id * c_id);   // Tr_S[(Tr_B H)^2]

  const double s = 1.0 / dS, b = 1.0 / dB;
  const double D = (dS * dS - 1.0) * (dB * dB - 1.0);
  const double kS = dS * dS - 1.0;

  const auto plus = [&](double ii) {
    return (T2 * ((s - b) * ii / 4.0 + kS * (1.0 - s * b)) +
            T1sq * ((-s + b) * ii / 4.0) + TB * ((-1.0 + s * b) * ii / 4.0) +
            TS * ((1.0 - s * b) * ii / 4.0 + kS * (s - b))) /
           D;
  };
  const auto minus = [&](double ii) {
    return (T2 * ((s + b) * ii / 4.0 - kS * s * b) +
            T1sq * ((s + b) * ii / 4.0 - kS * s * b) +
            TB * ((-1.0 - s * b) * ii / 4.0 + kS * s) +
            TS * ((-1.0 - s * b) * ii / 4.0 + kS * s)) /
           D;
  };

  HaarSaturation out;
  out.spectral_integral = 2.0 * dS * dS / dB;
  out.F_S_plus = plus(out.spectral_integral);
  out.F_S_minus = minus(out.spectral_integral);
  out.F_S = 2.0 * (out.F_S_plus - out.F_S_minus);
  const double fp0 = plus(0.0), fm0 = minus(0.0);
  out.F_S_flat = 2.0 * (fp0 - fm0);
  out.F_S_nonflat = out.F_S - out.F_S_flat;
  out.F_B = 4.0 * T2 / d - 2.0 * out.F_S_plus - 2.0 * out.F_S_minus;
  out.F_B_flat = 4.0 * T2 / d - 2.0 * fp0 - 2.0 * fm0;
  // identity pieces cancel inside both local variances
  out.F_S_thermo = 2.0 * dS * sqA / dB;
  out.F_B_thermo = 4.0 * sqB;
  return out;
}

double finite_temperature_fa(double S_A_eq, double S_Abar_eq,
                             double varH_A_eq) {
  if (S_A_eq < S_Abar_eq)
    return 2.0 * varH_A_eq * std::exp(S_A_eq - S_Abar_eq);
  return 4.0 * varH_A_eq;
}

CfiSaturation cfi_saturation(const HamiltonianBundle& hb,
                             const SubsystemPartition& part) {
  if (part.n_total != hb.n_sites)
    throw std::invalid_argument("cfi_saturation: partition does not match");
  if (part.d_A() < part.d_Abar())
    throw std::invalid_argument(
        "cfi_saturation: kept side must be at least half the register");

  const auto g = group_strings(hb.terms);
  double sq_all = 0.0, sq_diag = 0.0;
  for (const auto& [key, c] : g) {
    sq_all += c * c;
    if (key.first == 0) sq_diag += c * c;
  }

  CfiSaturation out;
  out.full = 2.0 * (sq_all - sq_diag);
  if (part.n_Abar() == 0) {
    out.sub = out.full;
    return out;
  }

  std::uint64_t maskA = 0;
  for (int site : part.sites_A) maskA |= 1ULL << site;

  // strings supported inside A, and their diagonal subset
  double sqA = 0.0, sqA_diag = 0.0;
  for (const auto& [key, c] : g) {
    if (((key.first | key.second) & ~maskA) != 0) continue;
    sqA += c * c;
    if (key.first == 0) sqA_diag += c * c;
  }

  // strings diagonal on A: the basis sum over A forces both the complement
  // factor and the A-side Z pattern to match, so no cross terms survive
  double sq_blocks = 0.0;
  for (const auto& [key, c] : g)
    if ((key.first & maskA) == 0) sq_blocks += c * c;

  const double dAb = static_cast<double>(part.d_Abar());
  out.sub = 2.0 / dAb * (sq_all + sqA - sqA_diag - sq_blocks);
  return out;
}

double trace_distance_full(long d) {
  if (d < 1) throw std::invalid_argument("trace_distance_full: d < 1");
  if (d == 1) return 0.0;
  const double dd = static_cast<double>(d);
  return 2.0 * std::pow(1.0 - 1.0 / dd, dd);
}

double trace_distance_sub(long d, long d_Abar) {
  if (d_Abar < 1 || d_Abar >= d)
    throw std::invalid_argument("trace_distance_sub: need 1 <= d_Abar < d");
  const double dd = static_cast<double>(d);
  const double db = static_cast<double>(d_Abar);
  const double lg = (db - 1.0) * std::log(db) +
                    (dd - db) * std::log(dd - db) + std::lgamma(dd) -
                    dd * std::log(dd) - std::lgamma(db) - std::lgamma(dd - db);
  return 2.0 * std::exp(lg);
}

double outcome_density(double lambda, long d, long d_Abar) {
  if (d_Abar < 1 || d_Abar >= d)
    throw std::invalid_argument("outcome_density: need 1 <= d_Abar < d");
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("outcome_density: lambda outside [0,1]");
  const double dd = static_cast<double>(d);
  const double db = static_cast<double>(d_Abar);
  const double e1 = db - 1.0;       // exponent of lambda
  const double e2 = dd - db - 1.0;  // exponent of (1 - lambda)
  if (lambda == 0.0 && e1 > 0.0) return 0.0;
  if (lambda == 1.0 && e2 > 0.0) return 0.0;
  double lg = std::lgamma(dd) - std::lgamma(db) - std::lgamma(dd - db);
  if (e1 != 0.0) lg += e1 * std::log(lambda);
  if (e2 != 0.0) lg += e2 * std::log1p(-lambda);
  return std::exp(lg);
}

namespace {

Eigen::MatrixXcd hermitian_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::VectorXd p;
  Eigen::MatrixXcd v;
  hermitian_eig(m, p, v);
  for (long i = 0; i < p.size(); ++i) p[i] = std::sqrt(std::max(0.0, p[i]));
  return v * p.asDiagonal() * v.adjoint();
}

double holevo_predicted(const SubsystemPartition& part) {
  if (part.n_A() < part.n_Abar()) return 1.0;
  return static_cast<double>(part.n_Abar()) / part.n_total;
}

}  // namespace

HolevoFidelity holevo_fidelity(const PureState& psi,
                               const HamiltonianBundle& hb,
                               const SubsystemPartition& part) {
  if (part.n_total != hb.n_sites || psi.n_sites != hb.n_sites)
    throw std::invalid_argument("holevo_fidelity: dimensions do not match");
  const Eigen::VectorXcd hpsi = hb.apply(psi.amplitudes);
  const cx mean = psi.amplitudes.dot(hpsi);
  Eigen::VectorXcd xi = hpsi - mean * psi.amplitudes;
  const double var = xi.squaredNorm();
  if (var < 1e-24)
    throw numerical_error("holevo_fidelity: vanishing energy variance");
  xi /= std::sqrt(var);

  HolevoFidelity out;
  out.predicted = holevo_predicted(part);
  if (part.n_Abar() == 0) {
    // both marginals are pure, the trace collapses to the overlap
    out.measured = std::norm(psi.amplitudes.dot(xi));
    return out;
  }
  const PureState comp{psi.n_sites, std::move(xi)};
  const Eigen::MatrixXcd ra =
      hermitian_sqrt(partial_trace(psi, part, Side::A).elements);
  const Eigen::MatrixXcd sa =
      hermitian_sqrt(partial_trace(comp, part, Side::A).elements);
  out.measured = ra.cwiseProduct(sa.conjugate()).sum().real();
  return out;
}

HolevoEnsemble holevo_fidelity_ensemble(const HamiltonianBundle& hb,
                                        const SubsystemPartition& part,
                                        int samples, SeededRng& rng) {
  if (samples < 1)
    throw std::invalid_argument("holevo_fidelity_ensemble: samples < 1");
  double sum = 0.0, sum2 = 0.0;
  HolevoEnsemble out;
  for (int k = 0; k < samples; ++k) {
    const PureState psi = haar_state(hb.n_sites, rng);
    const HolevoFidelity one = holevo_fidelity(psi, hb, part);
    out.predicted = one.predicted;
    sum += one.measured;
    sum2 += one.measured * one.measured;
  }
  out.measured_mean = sum / samples;
  if (samples > 1) {
    const double var =
        (sum2 - sum * sum / samples) / (samples - 1.0);
    out.measured_stderr = std::sqrt(std::max(0.0, var) / samples);
  }
  return out;
}

BgueSpec BgueSpec::standard(const HamiltonianBundle& hb, int n_S,
                            SeededRng& rng) {
  const int n_B = hb.n_sites - n_S;
  if (n_S < 1 || n_B < n_S)
    throw std::invalid_argument(
        "BgueSpec: bath must hold an inner block of the system's size");
  BgueSpec spec;
  spec.n_S = n_S;
  spec.n_B = n_B;
  spec.ham = hb;
  const long dS = spec.d_S(), dB = spec.d_B();
  const long d2 = 1L << (n_B - n_S);
  const PureState phi0 = random_product_state(n_B - n_S, rng);
  spec.P_B = Eigen::MatrixXcd::Zero(dB, dB);
  // bath-local index b = b1 + dS * b2; the inner block B1 sits next to S
  for (long b2 = 0; b2 < d2; ++b2)
    for (long c2 = 0; c2 < d2; ++c2) {
      const cx w = phi0.amplitudes[b2] * std::conj(phi0.amplitudes[c2]);
      for (long b1 = 0; b1 < dS; ++b1)
        spec.P_B(b1 + dS * b2, b1 + dS * c2) = w;
    }
  return spec;
}

std::vector<BguePoint> bgue_curves(const BgueSpec& spec,
                                   const Eigen::VectorXd& t_grid) {
  const long dS = spec.d_S(), dB = spec.d_B();
  const double d = static_cast<double>(dS) * dB;
  if (dB <= 2)
    throw std::invalid_argument("bgue_curves: bath dimension must exceed 2");
  if (spec.ham.n_sites != spec.n_S + spec.n_B)
    throw std::invalid_argument("bgue_curves: register sizes do not match");
  if (spec.P_B.rows() != dB || spec.P_B.cols() != dB)
    throw std::invalid_argument("bgue_curves: P_B has the wrong shape");
  if ((spec.P_B * spec.P_B - spec.P_B).norm() > 1e-8 * dB)
    throw std::invalid_argument("bgue_curves: P_B is not a projector");
  if (std::abs(spec.P_B.trace().real() - dS) > 1e-8 * dS)
    throw std::invalid_argument("bgue_curves: Tr P_B != d_S");

  const Eigen::MatrixXcd& h = spec.ham.H;
  const long dim = dS * dB;
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(dim, dim);
  for (long b = 0; b < dB; ++b)
    for (long c = 0; c < dB; ++c) {
      const cx w = spec.P_B(b, c);
      if (w == cx(0, 0)) continue;
      for (long a = 0; a < dS; ++a) p(a + dS * b, a + dS * c) = w;
    }

  const Eigen::MatrixXcd ph = p * h;
  std::vector<int> sites_S(spec.n_S);
  for (int i = 0; i < spec.n_S; ++i) sites_S[i] = i;
  const SubsystemPartition part(spec.n_S + spec.n_B, sites_S);
  const Eigen::MatrixXcd trB_ph =
      partial_trace(DensityMatrix{ph}, part, Side::A).elements;
  const Eigen::MatrixXcd trB_h =
      partial_trace(DensityMatrix{h}, part, Side::A).elements;
  const Eigen::MatrixXcd trS_h =
      partial_trace(DensityMatrix{h}, part, Side::Abar).elements;

  const double g1 = h.squaredNorm();
  const double g2 = trace_product(h * h, p).real();
  const double g3 = trace_product(trB_ph, trB_ph).real();
  const double g4 = trace_product(ph, ph).real();
  const double g5 = trace_product(trB_ph, trB_h).real();
  const double g6 = trB_h.squaredNorm();
  const double g7 = trS_h.squaredNorm();
  const double g8 = trace_product(spec.P_B * trS_h, trS_h).real();
  const double t_ph = ph.trace().real();
  const double g9 = t_ph * t_ph;
  const Eigen::MatrixXcd p_trS = spec.P_B * trS_h;
  const double g10 = trace_product(p_trS, p_trS).real();
  const double tr_h = h.trace().real();
  const double g11 = t_ph * tr_h;
  const double g12 = tr_h * tr_h;

  const double s = static_cast<double>(dS);
  const double al = (1.0 / s) / (s * s - 1.0);
  const double be = -(1.0 / s) / (s * s * s - s);
  const double cp[8] = {g4 / (s * s),
                        2.0 * g2 / s + 2.0 * g5 / (s * s),
                        2.0 * g3 / (s * s),
                        4.0 * g2 / (s * s) + 4.0 * g5 / s,
                        g1 + g6 / s,
                        g4 / (s * s),
                        g1 / s + g6,
                        2.0 * g2 / s + 2.0 * g5 / (s * s)};
  const double cm[8] = {al * g3 + be * g4 + be * g9 + al * g10,
                        2.0 * g5 / (s * s) + 2.0 * g8 / (s * s),
                        2.0 * be * g3 + 2.0 * al * g4 + 2.0 * al * g9 +
                            2.0 * be * g10,
                        4.0 * g2 / (s * s) + 4.0 * g11 / (s * s),
                        g6 / s + g7 / s,
                        al * g3 + be * g4 + be * g9 + al * g10,
                        g1 / s + g12 / s,
                        2.0 * g5 / (s * s) + 2.0 * g8 / (s * s)};

  const double b = static_cast<double>(dB);
  std::vector<BguePoint> out;
  out.reserve(t_grid.size());
  for (long k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    if (t < 0.0) throw std::invalid_argument("bgue_curves: negative time");
    const auto f = bgue_profiles(b, t);
    double fp = 0.0, fm = 0.0;
    for (int i = 0; i < 8; ++i) {
      fp += cp[i] * f[i];
      fm += cm[i] * f[i];
    }
    BguePoint pt;
    pt.t = t;
    pt.F_S_plus = fp;
    pt.F_S_minus = fm;
    pt.H2 = g2 / (s * s) * std::exp(-t) + g1 / d * (1.0 - std::exp(-t));
    pt.F_S = 2.0 * (fp - fm);
    pt.F_rot = 4.0 * pt.H2 - 4.0 * fp;
    pt.F_ent = pt.F_S;
    pt.F_B = pt.F_S + pt.F_rot;
    out.push_back(pt);
  }
  return out;
}

std::array<double, 8> bgue_profiles(double d_B, double t) {
  if (d_B <= 2.0)
    throw std::invalid_argument("bgue_profiles: bath dimension must exceed 2");
  if (t < 0.0) throw std::invalid_argument("bgue_profiles: negative time");
  const double b = d_B;
  const double row[8][5] = {
      {0, 0, 0.25, 0.5, 0.25},
      {0, (b * b - 2.0) / (b * (b * b - 4.0)), -1.0 / (4.0 * (b - 2.0)),
       -1.0 / (2.0 * b), -1.0 / (4.0 * (b + 2.0))},
      {0, 0, -0.25, 0, 0.25},
      {0, -1.0 / (b * b - 4.0), 1.0 / (4.0 * (b - 2.0)), 0,
       -1.0 / (4.0 * (b + 2.0))},
      {1.0 / (b * b - 1.0), -2.0 / (b * b - 4.0),
       1.0 / (2.0 * (b - 1.0) * (b - 2.0)), 0,
       1.0 / (2.0 * (b + 1.0) * (b + 2.0))},
      {0, 0, 0.25, -0.5, 0.25},
      {-1.0 / (b * b * b - b), 4.0 / (b * (b * b - 4.0)),
       -1.0 / (2.0 * (b - 1.0) * (b - 2.0)), 0,
       1.0 / (2.0 * (b + 1.0) * (b + 2.0))},
      {0, 2.0 / (b * (b * b - 4.0)), -1.0 / (4.0 * (b - 2.0)),
       1.0 / (2.0 * b), -1.0 / (4.0 * (b + 2.0))}};
  const double col[5] = {1.0, std::exp(-t), std::exp(-(2.0 - 2.0 / b) * t),
                         std::exp(-2.0 * t), std::exp(-(2.0 + 2.0 / b) * t)};
  std::array<double, 8> f{};
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 5; ++j) f[i] += row[i][j] * col[j];
  return f;
}

BhPoint bh_radiation_qfi(const BlackHoleSpec& spec, double t) {
  if (spec.M0 <= 0.0 || spec.G_N <= 0.0 || spec.alpha <= 0.0)
    throw std::invalid_argument("bh_radiation_qfi: parameters must be positive");
  const double total = spec.t_total();
  if (t < 0.0 || t >= total)
    throw std::invalid_argument("bh_radiation_qfi: t outside [0, t_total)");
  const double frac = t / total;

  BhPoint out;
  out.mass = spec.M0 * std::cbrt(1.0 - frac);
  out.temperature = 1.0 / (8.0 * kPi * spec.G_N * out.mass);
  out.var_H_R = -(spec.alpha / spec.G_N) * std::log1p(-frac);
  out.S_B = 4.0 * kPi * spec.G_N * out.mass * out.mass;
  out.S_R = (4.0 / 3.0) * 4.0 * kPi * spec.G_N *
            (spec.M0 * spec.M0 - out.mass * out.mass);
  out.post_page = out.S_R >= out.S_B;
  if (out.post_page)
    out.F_R = out.var_H_R;
  else
    out.suppression_exponent = out.S_B - out.S_R;
  return out;
}

}  // namespace qlab
