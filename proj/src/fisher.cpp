#include "qlab/fisher.hpp"

#include <cmath>

namespace qlab {

std::pair<double, Eigen::MatrixXcd> qfi(const DensityMatrix& rho,
                                        const Eigen::MatrixXcd& drho,
                                        double tol_rel) {
  Eigen::VectorXd p;
  Eigen::MatrixXcd v;
  hermitian_eig(rho.elements, p, v);
  const double cutoff = tol_rel * p.maxCoeff();
  const Eigen::MatrixXcd d = v.adjoint() * drho * v;

  const long n = p.size();
  double f = 0.0;
  Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(n, n);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) {
      const double w = p[i] + p[j];
      if (w <= cutoff) continue;
      f += 2.0 * std::norm(d(i, j)) / w;
      l(i, j) = 2.0 * d(i, j) / w;
    }
  return {f, v * l * v.adjoint()};
}

double bures_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  Eigen::VectorXd p;
  Eigen::MatrixXcd v;
  hermitian_eig(rho.elements, p, v);
  for (long i = 0; i < p.size(); ++i) p[i] = std::sqrt(std::max(0.0, p[i]));
  const Eigen::MatrixXcd root = v * p.asDiagonal() * v.adjoint();

  Eigen::VectorXd mu;
  Eigen::MatrixXcd w;
  hermitian_eig(root * sigma.elements * root, mu, w);
  double fid = 0.0;
  for (long i = 0; i < mu.size(); ++i) fid += std::sqrt(std::max(0.0, mu[i]));
  return std::sqrt(std::max(0.0, 2.0 * (1.0 - std::min(1.0, fid))));
}

double cfi(const DensityMatrix& rho, const Eigen::MatrixXcd& drho,
           const Eigen::MatrixXcd* basis, double tol_rel) {
  Eigen::VectorXd p, dp;
  if (basis == nullptr) {
    p = rho.elements.diagonal().real();
    dp = drho.diagonal().real();
  } else {
    const Eigen::MatrixXcd t = rho.elements * (*basis);
    const Eigen::MatrixXcd s = drho * (*basis);
    p.resize(basis->cols());
    dp.resize(basis->cols());
    for (long i = 0; i < basis->cols(); ++i) {
      p[i] = basis->col(i).dot(t.col(i)).real();
      dp[i] = basis->col(i).dot(s.col(i)).real();
    }
  }
  const double cutoff = tol_rel * p.maxCoeff();
  double f = 0.0;
  for (long i = 0; i < p.size(); ++i)
    if (p[i] > cutoff) f += dp[i] * dp[i] / p[i];
  return f;
}

namespace {

struct CutData {
  Eigen::MatrixXcd psi_m;  // d_A x d_Abar amplitude matrix
  Eigen::MatrixXcd w;      // (H - <H>) psi, same reshape
  Eigen::MatrixXcd wv;     // w times retained right Schmidt vectors
  Eigen::MatrixXcd m;      // U^dag w V on the retained block
  Eigen::VectorXd p;       // retained Schmidt weights, descending
  Eigen::MatrixXcd u;      // retained left Schmidt vectors
  double var = 0.0;        // <H^2> - <H>^2
  double cutoff = 0.0;
  int rank = 0;
};

CutData cut_data(const PureState& psi, const HamiltonianBundle& hb,
                 const SubsystemPartition& part, double tol_rel) {
  CutData cd;
  cd.psi_m = amplitude_matrix(psi, part);
  Eigen::VectorXcd hpsi = hb.apply(psi.amplitudes);
  const double mean = psi.amplitudes.dot(hpsi).real();
  hpsi -= mean * psi.amplitudes;
  cd.var = hpsi.squaredNorm();
  cd.w = amplitude_matrix(PureState{psi.n_sites, std::move(hpsi)}, part);

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(cd.psi_m,
                                      Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd weights = svd.singularValues().array().square();
  cd.cutoff = tol_rel * weights.maxCoeff();
  int r = 0;
  while (r < weights.size() && weights[r] > cd.cutoff) ++r;
  if (r == 0) throw numerical_error("state has no Schmidt weight above cutoff");
  cd.rank = r;
  cd.p = weights.head(r);
  cd.u = svd.matrixU().leftCols(r);
  cd.wv = cd.w * svd.matrixV().leftCols(r);
  cd.m = cd.u.adjoint() * cd.wv;
  return cd;
}

}  // namespace

FisherReport subsystem_qfi(const PureState& psi, const HamiltonianBundle& hb,
                           const SubsystemPartition& part, double tol_rel,
                           bool with_operators) {
  const CutData cd = cut_data(psi, hb, part, tol_rel);
  const int r = cd.rank;
  const auto& p = cd.p;
  const auto& m = cd.m;

  FisherReport rep;
  rep.rank = r;
  rep.rank_tolerance = cd.cutoff;

  Eigen::VectorXd sq(r);
  for (int k = 0; k < r; ++k) sq[k] = std::sqrt(p[k]);

  double retained = 0.0, eta = 0.0;
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < r; ++i) {
      const double w = p[i] + p[j];
      retained += 2.0 * p[j] / w * std::norm(m(i, j));
      rep.F_minus += 2.0 * sq[i] * sq[j] / w * (m(i, j) * m(j, i)).real();
      const cx ent = sq[j] * m(i, j) - sq[i] * std::conj(m(j, i));
      rep.F_ent += 2.0 / w * std::norm(ent);
      const cx g = sq[j] * m(i, j) + sq[i] * std::conj(m(j, i));
      eta += 2.0 / w * std::norm(g);
    }

  double comp = 0.0;  // leakage of H psi out of the Schmidt support
  for (int j = 0; j < r; ++j)
    comp += std::max(0.0, cd.wv.col(j).squaredNorm() - m.col(j).squaredNorm());
  rep.F_plus = retained + 2.0 * comp;
  rep.F_rot = 4.0 * comp;
  rep.F_A = rep.F_ent + rep.F_rot;
  rep.F_eta = (eta + 4.0 * comp) / (4.0 * cd.var * cd.var);

  // classical information of the product basis on the kept side
  const long da = cd.psi_m.rows();
  Eigen::VectorXd prob(da), dprob(da);
  for (long a = 0; a < da; ++a) {
    prob[a] = cd.psi_m.row(a).squaredNorm();
    const cx ov = (cd.w.row(a).array() * cd.psi_m.row(a).array().conjugate()).sum();
    dprob[a] = 2.0 * ov.imag();
  }
  const double pcut = tol_rel * prob.maxCoeff();
  for (long a = 0; a < da; ++a) {
    if (prob[a] > pcut)
      rep.f_comp += dprob[a] * dprob[a] / prob[a];
    else
      rep.f_comp_dropped += std::abs(dprob[a]);
  }

  if (with_operators) {
    const DensityMatrix rho{cd.psi_m * cd.psi_m.adjoint()};
    const Eigen::MatrixXcd drho =
        cx(0, -1) * (cd.w * cd.psi_m.adjoint() - cd.psi_m * cd.w.adjoint());
    auto [f, l] = qfi(rho, drho, tol_rel);
    (void)f;
    rep.sld = std::move(l);
    rep.basis = optimal_basis(rho, drho, tol_rel).vectors;
  }
  return rep;
}

double conjugate_energy_qfi(const PureState& psi, const HamiltonianBundle& hb,
                            const SubsystemPartition& part, double tol_rel) {
  return subsystem_qfi(psi, hb, part, tol_rel).F_eta;
}

OptimalBasis optimal_basis(const DensityMatrix& rho,
                           const Eigen::MatrixXcd& drho, double tol_rel) {
  auto [f, l] = qfi(rho, drho, tol_rel);
  (void)f;
  OptimalBasis out;
  hermitian_eig(l, out.sld_eigenvalues, out.vectors);
  return out;
}

double mean_basis_entanglement(const Eigen::MatrixXcd& basis,
                               const SubsystemPartition& cut) {
  if (basis.rows() != (1L << cut.n_total))
    throw std::invalid_argument("basis does not match the cut register");
  double acc = 0.0;
  for (long k = 0; k < basis.cols(); ++k) {
    const PureState col{cut.n_total, basis.col(k)};
    acc += spectrum_entropy(schmidt(col, cut).coefficients);
  }
  return acc / static_cast<double>(basis.cols());
}

}  // namespace qlab
