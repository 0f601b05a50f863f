#include "qlab/models.hpp"

#include <bit>
#include <stdexcept>

namespace qlab {

namespace {

cx y_phase(std::uint64_t x_mask, std::uint64_t z_mask) {
  static const cx table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[std::popcount(x_mask & z_mask) & 3];
}

double parity_sign(std::uint64_t v) { return std::popcount(v) & 1 ? -1.0 : 1.0; }

}  // namespace

Eigen::VectorXcd apply_terms(const std::vector<PauliTerm>& terms,
                             const Eigen::VectorXcd& psi) {
  const long d = psi.size();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(d);
  for (const auto& t : terms) {
    const cx w = t.coeff * y_phase(t.x_mask, t.z_mask);
    const long flip = static_cast<long>(t.x_mask);
    for (long x = 0; x < d; ++x)
      out[x ^ flip] += w * parity_sign(x & t.z_mask) * psi[x];
  }
  return out;
}

Eigen::MatrixXcd dense_from_terms(int n_sites,
                                  const std::vector<PauliTerm>& terms) {
  const long d = 1L << n_sites;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& t : terms) {
    const cx w = t.coeff * y_phase(t.x_mask, t.z_mask);
    const long flip = static_cast<long>(t.x_mask);
    for (long x = 0; x < d; ++x)
      out(x ^ flip, x) += w * parity_sign(x & t.z_mask);
  }
  return out;
}

std::vector<PauliTerm> localize_terms(const std::vector<PauliTerm>& terms,
                                      const std::vector<int>& sites) {
  std::vector<int> where(64, -1);
  for (std::size_t j = 0; j < sites.size(); ++j) where[sites[j]] = static_cast<int>(j);
  auto remap = [&](std::uint64_t mask) {
    std::uint64_t out = 0;
    for (int b = 0; b < 64; ++b)
      if ((mask >> b) & 1) {
        if (where[b] < 0) throw std::invalid_argument("term leaves the site list");
        out |= 1ull << where[b];
      }
    return out;
  };
  std::vector<PauliTerm> out;
  out.reserve(terms.size());
  for (const auto& t : terms)
    out.push_back({t.coeff, remap(t.x_mask), remap(t.z_mask)});
  return out;
}

const Spectral& HamiltonianBundle::spectral() const {
  if (!cache_) {
    auto s = std::make_shared<Spectral>();
    hermitian_eig(H, s->energies, s->vectors);
    cache_ = std::move(s);
  }
  return *cache_;
}

namespace {

HamiltonianBundle finish(int n, std::vector<PauliTerm> terms) {
  HamiltonianBundle hb;
  hb.n_sites = n;
  hb.terms = std::move(terms);
  hb.H = dense_from_terms(n, hb.terms);
  return hb;
}

}  // namespace

HamiltonianBundle build_mixed_field_ising(int n_sites, double g, double h,
                                          Boundary bc) {
  if (n_sites < 2) throw std::invalid_argument("chain needs at least 2 sites");
  std::vector<PauliTerm> terms;
  const int n_bonds = bc == Boundary::periodic ? n_sites : n_sites - 1;
  for (int i = 0; i < n_bonds; ++i) {
    const int j = (i + 1) % n_sites;
    terms.push_back({1.0, 0, (1ull << i) | (1ull << j)});
  }
  for (int i = 0; i < n_sites; ++i) {
    if (g != 0.0) terms.push_back({g, 1ull << i, 0});
    if (h != 0.0) terms.push_back({h, 0, 1ull << i});
  }
  return finish(n_sites, std::move(terms));
}

HamiltonianBundle build_tfi_integrable(int n_sites, double g, Boundary bc) {
  return build_mixed_field_ising(n_sites, g, 0.0, bc);
}

HamiltonianBundle build_xxz(int n_sites, double delta) {
  if (n_sites < 2) throw std::invalid_argument("chain needs at least 2 sites");
  std::vector<PauliTerm> terms;
  for (int i = 0; i < n_sites; ++i) {
    const std::uint64_t pair = (1ull << i) | (1ull << ((i + 1) % n_sites));
    terms.push_back({1.0, pair, 0});     // XX
    terms.push_back({1.0, pair, pair});  // YY
    if (delta != 0.0) terms.push_back({delta, 0, pair});
  }
  return finish(n_sites, std::move(terms));
}

HamiltonianSplit split_hamiltonian(const HamiltonianBundle& hb,
                                   const SubsystemPartition& part) {
  if (part.n_total != hb.n_sites)
    throw std::invalid_argument("partition does not match Hamiltonian");
  std::uint64_t a_mask = 0;
  for (int s : part.sites_A) a_mask |= 1ull << s;

  HamiltonianSplit out;
  out.partition = part;
  for (const auto& t : hb.terms) {
    const std::uint64_t sup = t.support();
    if ((sup & ~a_mask) == 0)
      out.terms_A.push_back(t);
    else if ((sup & a_mask) == 0)
      out.terms_Abar.push_back(t);
    else
      out.terms_int.push_back(t);
  }
  out.H_A = dense_from_terms(part.n_A(),
                             localize_terms(out.terms_A, part.sites_A));
  out.H_Abar = dense_from_terms(part.n_Abar(),
                                localize_terms(out.terms_Abar, part.sites_Abar()));
  out.H_int = dense_from_terms(hb.n_sites, out.terms_int);
  return out;
}

std::vector<Eigen::MatrixXcd> boundary_depolarizing_jumps(int n_sites) {
  Eigen::MatrixXcd px(2, 2), py(2, 2), pz(2, 2);
  px << 0, 1, 1, 0;
  py << 0, cx(0, -1), cx(0, 1), 0;
  pz << 1, 0, 0, -1;
  std::vector<Eigen::MatrixXcd> out;
  for (int site : {0, n_sites - 1})
    for (const auto& p : {px, py, pz})
      out.push_back(embed_operator(p, {site}, n_sites));
  return out;
}

}  // namespace qlab
