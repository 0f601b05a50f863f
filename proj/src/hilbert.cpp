#include "qlab/hilbert.hpp"

#include <algorithm>
#include <cmath>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace qlab {

SubsystemPartition::SubsystemPartition(int n, std::vector<int> a)
    : n_total(n), sites_A(std::move(a)) {
  if (n < 1 || n > 62) throw std::invalid_argument("bad n_total");
  for (std::size_t i = 0; i < sites_A.size(); ++i) {
    if (sites_A[i] < 0 || sites_A[i] >= n)
      throw std::invalid_argument("site out of range");
    if (i > 0 && sites_A[i] <= sites_A[i - 1])
      throw std::invalid_argument("sites_A must be strictly increasing");
  }
}

std::vector<int> SubsystemPartition::sites_Abar() const {
  std::vector<int> out;
  std::size_t j = 0;
  for (int s = 0; s < n_total; ++s) {
    if (j < sites_A.size() && sites_A[j] == s) {
      ++j;
    } else {
      out.push_back(s);
    }
  }
  return out;
}

std::vector<long> SubsystemPartition::scatter(const std::vector<int>& sites) {
  const long d = 1L << sites.size();
  std::vector<long> out(d);
  for (long k = 0; k < d; ++k) {
    long x = 0;
    for (std::size_t j = 0; j < sites.size(); ++j)
      if ((k >> j) & 1) x |= 1L << sites[j];
    out[k] = x;
  }
  return out;
}

Eigen::MatrixXcd amplitude_matrix(const PureState& psi,
                                  const SubsystemPartition& part) {
  if ((1L << part.n_total) != psi.dim())
    throw std::invalid_argument("partition does not match state");
  const auto sa = SubsystemPartition::scatter(part.sites_A);
  const auto sb = SubsystemPartition::scatter(part.sites_Abar());
  Eigen::MatrixXcd m(part.d_A(), part.d_Abar());
  for (long b = 0; b < part.d_Abar(); ++b)
    for (long a = 0; a < part.d_A(); ++a) m(a, b) = psi.amplitudes[sa[a] + sb[b]];
  return m;
}

Eigen::MatrixXcd embed_operator(const Eigen::MatrixXcd& op,
                                const std::vector<int>& sites, int n_total) {
  const SubsystemPartition part(n_total, sites);
  if (op.rows() != part.d_A() || op.cols() != part.d_A())
    throw std::invalid_argument("operator does not match site list");
  const auto sa = SubsystemPartition::scatter(part.sites_A);
  const auto sb = SubsystemPartition::scatter(part.sites_Abar());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(1L << n_total, 1L << n_total);
  for (long b = 0; b < part.d_Abar(); ++b)
    for (long c = 0; c < part.d_A(); ++c)
      for (long r = 0; r < part.d_A(); ++r)
        out(sa[r] + sb[b], sa[c] + sb[b]) = op(r, c);
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho,
                            const SubsystemPartition& part, Side keep) {
  if ((1L << part.n_total) != rho.dim())
    throw std::invalid_argument("partition does not match state");
  const auto keep_sites = keep == Side::A ? part.sites_A : part.sites_Abar();
  const auto drop_sites = keep == Side::A ? part.sites_Abar() : part.sites_A;
  const auto sk = SubsystemPartition::scatter(keep_sites);
  const auto sd = SubsystemPartition::scatter(drop_sites);
  const long dk = static_cast<long>(sk.size()), dd = static_cast<long>(sd.size());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dk, dk);
  for (long b = 0; b < dd; ++b)
    for (long c = 0; c < dk; ++c)
      for (long r = 0; r < dk; ++r)
        out(r, c) += rho.elements(sk[r] + sd[b], sk[c] + sd[b]);
  return DensityMatrix{std::move(out)};
}

DensityMatrix partial_trace(const PureState& psi,
                            const SubsystemPartition& part, Side keep) {
  const Eigen::MatrixXcd m = amplitude_matrix(psi, part);
  if (keep == Side::A) return DensityMatrix{m * m.adjoint()};
  return DensityMatrix{(m.adjoint() * m).transpose()};
}

SchmidtDecomposition schmidt(const PureState& psi,
                             const SubsystemPartition& part) {
  Eigen::MatrixXcd m = amplitude_matrix(psi, part);
  SchmidtDecomposition out;
  out.partition = part;
  out.small_side_is_A = part.d_A() <= part.d_Abar();
  if (!out.small_side_is_A) m = m.transpose().eval();
  // m = U S V^dag, state = sum_k s_k u_k (x) conj(v_k)
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.coefficients = svd.singularValues().array().square();
  out.vectors_S = svd.matrixU();
  out.vectors_Sbar = svd.matrixV().conjugate();
  return out;
}

void hermitian_eig(const Eigen::MatrixXcd& M, Eigen::VectorXd& evals,
                   Eigen::MatrixXcd& evecs) {
  const long d = M.rows();
  if (M.cols() != d) throw std::invalid_argument("matrix not square");
  Eigen::MatrixXcd S = 0.5 * (M + M.adjoint());
  if (d <= 64) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S);
    if (es.info() != Eigen::Success) throw numerical_error("eig failed");
    evals = es.eigenvalues();
    evecs = es.eigenvectors();
  } else {
    evals.resize(d);
    const lapack_int info = LAPACKE_zheevd(
        LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(d),
        S.data(), static_cast<lapack_int>(d), evals.data());
    if (info != 0) throw numerical_error("zheevd failed");
    evecs = std::move(S);
  }
  // gauge: rotate the dominant component of each column to the positive
  // real axis, picking the lowest index among magnitudes tied within 1e-12
  for (long j = 0; j < d; ++j) {
    const auto col = evecs.col(j);
    double top = 0.0;
    for (long i = 0; i < d; ++i) top = std::max(top, std::abs(col[i]));
    if (top == 0.0) continue;
    long pick = 0;
    for (long i = 0; i < d; ++i)
      if (std::abs(col[i]) >= top - 1e-12) { pick = i; break; }
    const cx ph = col[pick] / std::abs(col[pick]);
    evecs.col(j) *= std::conj(ph);
  }
}

PureState haar_state(int n_sites, SeededRng& rng) {
  const long d = 1L << n_sites;
  Eigen::VectorXcd v(d);
  for (long i = 0; i < d; ++i) {
    const double re = rng.gaussian(), im = rng.gaussian();
    v[i] = cx(re, im);
  }
  v /= v.norm();
  return PureState{n_sites, std::move(v)};
}

PureState random_product_state(int n_sites, SeededRng& rng) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(1);
  for (int s = 0; s < n_sites; ++s) {
    Eigen::Vector2cd q;
    q[0] = cx(rng.gaussian(), rng.gaussian());
    q[1] = cx(rng.gaussian(), rng.gaussian());
    q /= q.norm();
    const long half = v.size();
    Eigen::VectorXcd w(2 * half);
    w.head(half) = q[0] * v;
    w.tail(half) = q[1] * v;
    v = std::move(w);
  }
  return PureState{n_sites, std::move(v)};
}

namespace {

Eigen::VectorXd clamp_probabilities(Eigen::VectorXd p) {
  for (long i = 0; i < p.size(); ++i) {
    if (p[i] < -1e-10) throw numerical_error("probability below -1e-10");
    if (p[i] < 0.0) p[i] = 0.0;
  }
  return p;
}

}  // namespace

SampleSet born_sample(const DensityMatrix& rho, const Eigen::MatrixXcd* basis,
                      long count, SeededRng& rng) {
  Eigen::VectorXd p;
  if (basis == nullptr) {
    p = rho.elements.diagonal().real();
  } else {
    if (basis->rows() != rho.dim())
      throw std::invalid_argument("basis does not match state");
    const Eigen::MatrixXcd t = rho.elements * (*basis);
    p.resize(basis->cols());
    for (long i = 0; i < basis->cols(); ++i)
      p[i] = basis->col(i).dot(t.col(i)).real();
  }
  p = clamp_probabilities(std::move(p));
  const double total = p.sum();
  if (std::abs(total - 1.0) > 1e-8)
    throw numerical_error("outcome probabilities do not sum to one");

  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (long i = 0; i < p.size(); ++i) { acc += p[i]; cdf[i] = acc; }

  SampleSet out;
  out.master_seed = rng.master_seed();
  out.stream_id = rng.stream_id();
  out.outcomes.resize(count);
  for (long k = 0; k < count; ++k) {
    const double u = rng.uniform() * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    out.outcomes[k] = static_cast<int>(std::min<std::ptrdiff_t>(
        it - cdf.begin(), p.size() - 1));
  }
  return out;
}

double spectrum_entropy(const Eigen::VectorXd& p) {
  const Eigen::VectorXd q = clamp_probabilities(p);
  double s = 0.0;
  for (long i = 0; i < q.size(); ++i)
    if (q[i] > 0.0) s -= q[i] * std::log(q[i]);
  return s;
}

double von_neumann_entropy(const DensityMatrix& rho) {
  Eigen::VectorXd w;
  Eigen::MatrixXcd v;
  hermitian_eig(rho.elements, w, v);
  return spectrum_entropy(w);
}

double page_entropy(int m_qubits, int n_total_qubits) {
  const long da = 1L << m_qubits, db = 1L << (n_total_qubits - m_qubits);
  if (da > db) throw std::invalid_argument("cut must be the smaller factor");
  double s = 0.0;
  for (long k = db + 1; k <= da * db; ++k) s += 1.0 / static_cast<double>(k);
  return s - static_cast<double>(da - 1) / (2.0 * static_cast<double>(db));
}

}  // namespace qlab
