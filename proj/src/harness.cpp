#include "qlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "qlab/fisher.hpp"

namespace qlab {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw std::invalid_argument("config " + path + ": " + msg);
}

void expect_keys(const json& j, const std::string& base,
                 const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) bad(base + "/" + it.key(), "unknown key");
}

long get_int(const json& j, const std::string& base, const char* key,
             long dflt, long lo, long hi) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  const std::string path = base + "/" + key;
  if (!it->is_number_integer()) bad(path, "expected an integer");
  const long v = it->get<long>();
  if (v < lo || v > hi)
    bad(path, "must be between " + std::to_string(lo) + " and " +
                  std::to_string(hi));
  return v;
}

double get_num(const json& j, const std::string& base, const char* key,
               double dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number()) bad(base + "/" + key, "expected a number");
  return it->get<double>();
}

std::string get_str(const json& j, const std::string& base, const char* key,
                    const std::string& dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_string()) bad(base + "/" + key, "expected a string");
  return it->get<std::string>();
}

std::vector<int> get_int_list(const json& j, const std::string& base,
                              const char* key, long lo, long hi,
                              bool required) {
  auto it = j.find(key);
  const std::string path = base + "/" + key;
  if (it == j.end()) {
    if (required) bad(path, "required key missing");
    return {};
  }
  if (!it->is_array() || it->empty())
    bad(path, "expected a nonempty array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& e = (*it)[i];
    if (!e.is_number_integer())
      bad(path + "/" + std::to_string(i), "expected an integer");
    const long v = e.get<long>();
    if (v < lo || v > hi)
      bad(path + "/" + std::to_string(i),
          "must be between " + std::to_string(lo) + " and " +
              std::to_string(hi));
    out.push_back(static_cast<int>(v));
  }
  return out;
}

Eigen::VectorXd parse_grid(const json& j, const std::string& path,
                           long min_points) {
  Eigen::VectorXd g;
  if (j.is_array()) {
    if (static_cast<long>(j.size()) < min_points)
      bad(path, "needs at least " + std::to_string(min_points) + " points");
    g.resize(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number())
        bad(path + "/" + std::to_string(i), "expected a number");
      g[i] = j[i].get<double>();
    }
  } else if (j.is_object()) {
    expect_keys(j, path, {"start", "stop", "points"});
    if (!j.contains("start") || !j.contains("stop") || !j.contains("points"))
      bad(path, "needs start, stop and points");
    const double a = get_num(j, path, "start", 0.0);
    const double b = get_num(j, path, "stop", 0.0);
    const long p = get_int(j, path, "points", 0, min_points, 100000);
    if (!(b > a) && p > 1) bad(path + "/stop", "must exceed start");
    g = Eigen::VectorXd::LinSpaced(p, a, b);
  } else {
    bad(path, "expected an array or {start, stop, points}");
  }
  for (long i = 0; i + 1 < g.size(); ++i)
    if (!(g[i + 1] > g[i])) bad(path, "must be strictly increasing");
  return g;
}

ModelSpec parse_model(const json& j, const std::string& base) {
  ModelSpec m;
  if (!j.is_object()) bad(base, "expected an object");
  expect_keys(j, base, {"type", "n", "g", "h", "delta", "boundary"});
  m.type = get_str(j, base, "type", m.type);
  if (m.type != "mixed_field_ising" && m.type != "tfi_integrable" &&
      m.type != "xxz")
    bad(base + "/type", "unknown model '" + m.type + "'");
  m.n = static_cast<int>(get_int(j, base, "n", m.n, 1, 12));
  m.g = get_num(j, base, "g", m.g);
  m.h = get_num(j, base, "h", m.h);
  m.delta = get_num(j, base, "delta", m.delta);
  const std::string bc = get_str(j, base, "boundary", "periodic");
  if (bc == "periodic")
    m.boundary = Boundary::periodic;
  else if (bc == "open")
    m.boundary = Boundary::open;
  else
    bad(base + "/boundary", "expected 'periodic' or 'open'");
  return m;
}

int effective_samples(const ExperimentConfig& cfg) {
  return cfg.paper_scale ? cfg.samples_paper : cfg.samples;
}

std::vector<int> head_sites(int k) {
  std::vector<int> s(k);
  for (int i = 0; i < k; ++i) s[i] = i;
  return s;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string row_key(const std::vector<double>& row, int key_columns) {
  std::string k;
  for (int i = 0; i < key_columns; ++i) {
    if (i) k += ',';
    k += fmt_g(row[i]);
  }
  return k;
}

void parallel_for(int n_tasks, int threads,
                  const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n_tasks));
  if (threads <= 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex m;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

using RowMap = std::map<std::string, std::vector<double>>;

// Existing rows of a previous (possibly interrupted) run of the same
// configuration; keys already present are not recomputed.
RowMap load_resume(const std::string& path, const ResultBundle& b) {
  RowMap out;
  if (path.empty()) return out;
  std::ifstream f(path);
  if (!f) return out;

  std::string header_expect;
  for (std::size_t i = 0; i < b.columns.size(); ++i) {
    if (i) header_expect += ',';
    header_expect += b.columns[i];
  }
  const std::string malformed =
      "config /out: existing file '" + path +
      "' is not a result of this configuration; delete it or point out "
      "elsewhere";
  bool config_ok = false, header_ok = false;
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("# config ", 0) == 0) {
      if (line.substr(9) != b.echo.dump()) throw std::invalid_argument(malformed);
      config_ok = true;
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (!header_ok) {
      if (line != header_expect) throw std::invalid_argument(malformed);
      header_ok = true;
      continue;
    }
    std::vector<double> row;
    const char* p = line.c_str();
    char* end = nullptr;
    for (;;) {
      const double v = std::strtod(p, &end);
      if (end == p) throw std::invalid_argument(malformed);
      row.push_back(v);
      p = end;
      if (*p == ',')
        ++p;
      else
        break;
    }
    if (*p != '\0' || row.size() != b.columns.size())
      throw std::invalid_argument(malformed);
    out[row_key(row, b.key_columns)] = std::move(row);
  }
  if (!config_ok || !header_ok) throw std::invalid_argument(malformed);
  return out;
}

void finalize_rows(ResultBundle& b, RowMap&& by_key) {
  b.rows.clear();
  b.rows.reserve(by_key.size());
  for (auto& [k, row] : by_key) b.rows.push_back(std::move(row));
  const int kc = b.key_columns;
  std::sort(b.rows.begin(), b.rows.end(),
            [kc](const std::vector<double>& a, const std::vector<double>& c) {
              for (int i = 0; i < kc; ++i) {
                if (a[i] < c[i]) return true;
                if (a[i] > c[i]) return false;
              }
              return false;
            });
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) bad("/out", "cannot write '" + tmp + "'");
    f << content;
    f.close();
    if (!f) bad("/out", "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) bad("/out", "cannot move output into place: " + ec.message());
}

// ---------------------------------------------------------------- runners

void run_scan(const ExperimentConfig& cfg, ResultBundle& b, bool cfi_only) {
  HamiltonianBundle hb = cfg.model.build();
  hb.spectral();
  if (cfi_only)
    b.columns = {"n_A", "sample", "t", "f_comp", "f_comp_dropped"};
  else
    b.columns = {"n_A", "sample", "t", "F_A",    "F_ent",
                 "F_rot", "f_comp", "F_full"};
  b.key_columns = 3;
  RowMap by_key = load_resume(cfg.out, b);

  const int n_samples = effective_samples(cfg);
  const long n_t = cfg.t_grid.size();
  std::vector<std::vector<std::vector<double>>> staged(n_samples);

  parallel_for(n_samples, cfg.threads, [&](int s) {
    // every row of this sample already present -> skip the eigenwork
    bool all_there = true;
    for (int n_A : cfg.n_A)
      for (long k = 0; k < n_t && all_there; ++k)
        all_there = by_key.count(fmt_g(n_A) + "," + fmt_g(s) + "," +
                                 fmt_g(cfg.t_grid[k])) > 0;
    if (all_there) return;

    SeededRng rng(cfg.master_seed, static_cast<std::uint64_t>(s));
    const PureState psi0 = random_product_state(cfg.model.n, rng);
    const Eigen::VectorXcd hpsi = hb.apply(psi0.amplitudes);
    const double e1 = psi0.amplitudes.dot(hpsi).real();
    const double f_full = 4.0 * (hpsi.squaredNorm() - e1 * e1);

    std::vector<SubsystemPartition> parts;
    for (int n_A : cfg.n_A)
      parts.emplace_back(cfg.model.n, head_sites(n_A));

    Propagator prop(hb, psi0);
    for (long k = 0; k < n_t; ++k) {
      const double t = cfg.t_grid[k];
      bool need = false;
      for (int n_A : cfg.n_A)
        need = need || !by_key.count(fmt_g(n_A) + "," + fmt_g(s) + "," +
                                     fmt_g(t));
      if (!need) continue;
      const PureState psi_t = prop.at(t);
      for (std::size_t a = 0; a < parts.size(); ++a) {
        const double n_A = cfg.n_A[a];
        if (by_key.count(fmt_g(n_A) + "," + fmt_g(s) + "," + fmt_g(t)))
          continue;
        const FisherReport rep = subsystem_qfi(psi_t, hb, parts[a]);
        if (cfi_only)
          staged[s].push_back(
              {n_A, double(s), t, rep.f_comp, rep.f_comp_dropped});
        else
          staged[s].push_back({n_A, double(s), t, rep.F_A, rep.F_ent,
                               rep.F_rot, rep.f_comp, f_full});
      }
    }
  });
  for (auto& rows : staged)
    for (auto& row : rows) by_key[row_key(row, b.key_columns)] = std::move(row);
  finalize_rows(b, std::move(by_key));
}

void run_haar_sat(const ExperimentConfig& cfg, ResultBundle& b) {
  HamiltonianBundle hb = cfg.model.build();
  hb.spectral();
  b.columns = {"n_A",        "F_S",       "F_S_plus", "F_S_minus",
               "F_S_flat",   "F_S_nonflat", "F_S_thermo", "F_B",
               "F_B_flat",   "F_B_thermo",  "spectral_integral",
               "mc_mean",    "mc_se",       "mc_samples"};
  b.key_columns = 1;
  RowMap by_key = load_resume(cfg.out, b);

  const int n_samples = effective_samples(cfg);
  for (int n_A : cfg.n_A) {
    if (by_key.count(fmt_g(n_A))) continue;
    const SubsystemPartition part(cfg.model.n, head_sites(n_A));
    const HaarSaturation pred = haar_saturation_fa(split_hamiltonian(hb, part));

    double mean = std::nan(""), se = std::nan("");
    if (n_samples > 0) {
      const HaarModelSpec model{part, HaarModelSpec::Spectrum::wishart};
      double acc = 0.0, acc2 = 0.0;
      for (int s = 0; s < n_samples; ++s) {
        SeededRng rng(cfg.master_seed,
                      static_cast<std::uint64_t>(n_A) * 1000003u + s);
        const PureState psi = sample_haar_model(model, rng);
        const double f = subsystem_qfi(psi, hb, part).F_A;
        acc += f;
        acc2 += f * f;
      }
      mean = acc / n_samples;
      const double var = std::max(0.0, acc2 / n_samples - mean * mean);
      se = n_samples > 1 ? std::sqrt(var / (n_samples - 1)) : 0.0;
    }
    by_key[fmt_g(n_A)] = {double(n_A),    pred.F_S,        pred.F_S_plus,
                          pred.F_S_minus, pred.F_S_flat,   pred.F_S_nonflat,
                          pred.F_S_thermo, pred.F_B,       pred.F_B_flat,
                          pred.F_B_thermo, pred.spectral_integral,
                          mean,           se,              double(n_samples)};
  }
  finalize_rows(b, std::move(by_key));
}

void run_lindblad(const ExperimentConfig& cfg, ResultBundle& b) {
  HamiltonianBundle hb = cfg.model.build();
  const LindbladSpec spec{hb, boundary_depolarizing_jumps(cfg.model.n),
                          cfg.gamma};
  b.columns = {"sample", "t", "entropy", "F"};
  b.key_columns = 2;
  RowMap by_key = load_resume(cfg.out, b);

  const int n_samples = effective_samples(cfg);
  const long n_t = cfg.t_grid.size();
  std::vector<double> ts(cfg.t_grid.data(), cfg.t_grid.data() + n_t);
  std::vector<std::vector<std::vector<double>>> staged(n_samples);

  parallel_for(n_samples, cfg.threads, [&](int s) {
    bool all_there = true;
    for (long k = 0; k < n_t && all_there; ++k)
      all_there = by_key.count(fmt_g(s) + "," + fmt_g(ts[k])) > 0;
    if (all_there) return;

    SeededRng rng(cfg.master_seed, static_cast<std::uint64_t>(s));
    const PureState psi0 = random_product_state(cfg.model.n, rng);
    DensityMatrix rho0;
    rho0.elements = psi0.amplitudes * psi0.amplitudes.adjoint();
    const Trajectory traj = lindblad_rk4(spec, rho0, ts, cfg.dt);
    for (long k = 0; k < n_t; ++k) {
      const DensityMatrix& rho = traj.states[k];
      const double S = von_neumann_entropy(rho);
      const double F = qfi(rho, lindblad_apply(spec, rho)).first;
      staged[s].push_back({double(s), ts[k], S, F});
    }
  });
  for (auto& rows : staged)
    for (auto& row : rows) by_key[row_key(row, b.key_columns)] = std::move(row);
  finalize_rows(b, std::move(by_key));

  // relaxation metadata: per-sample decay fit, generator gap when the
  // superoperator is small enough to diagonalize
  json fits = json::array();
  for (int s = 0; s < n_samples; ++s) {
    std::vector<double> t_s, f_s;
    for (const auto& row : b.rows)
      if (static_cast<int>(row[0]) == s) {
        t_s.push_back(row[1]);
        f_s.push_back(row[3]);
      }
    try {
      const DecayFit fit = fit_exponential_decay(t_s, f_s);
      fits.push_back({{"sample", s},
                      {"rate", fit.rate},
                      {"amplitude", fit.amplitude},
                      {"residual", fit.residual},
                      {"window", {fit.t_lo, fit.t_hi}}});
    } catch (const std::invalid_argument&) {
      // grid too short or curve never enters the fit window
      fits.push_back({{"sample", s}, {"rate", nullptr}});
    }
  }
  b.nested = {{"fits", fits}, {"entropy_target", cfg.model.n * std::log(2.0)}};
  if (cfg.model.n <= 5)
    b.nested["gap"] = lindblad_gap(spec);
  else
    b.nested["gap"] = nullptr;
}

void run_mle(const ExperimentConfig& cfg, ResultBundle& b) {
  HamiltonianBundle hb = cfg.model.build();
  SeededRng prep(cfg.master_seed, 0);
  const PureState psi0 = random_product_state(cfg.model.n, prep);
  const SubsystemPartition part(cfg.model.n, head_sites(cfg.n_A.front()));
  const LikelihoodTable table =
      likelihood_table(psi0, hb, part, MeasurementBasis{}, cfg.t_grid);
  const ReducedPair rp =
      reduced_state_and_derivative(psi0, hb, part, cfg.t0);

  b.columns = {"rep", "t_est", "score", "loglik_max", "degenerate"};
  b.key_columns = 1;
  json maxima = json::array();
  RowMap by_key;
  for (int r = 0; r < cfg.repetitions; ++r) {
    SeededRng rng(cfg.master_seed, static_cast<std::uint64_t>(r) + 1);
    SampleSet s = born_sample(rp.rho, nullptr, cfg.N, rng);
    s.true_t0 = cfg.t0;
    const MleResult res = mle(s, table);
    by_key[fmt_g(r)] = {double(r), res.t_est, res.score, res.loglik_max,
                        res.degenerate ? 1.0 : 0.0};
    maxima.push_back(res.local_maxima);
  }
  finalize_rows(b, std::move(by_key));
  b.nested = {{"local_maxima", maxima},
              {"grid_too_coarse", table.grid_too_coarse},
              {"fisher_t0", cfi(rp.rho, rp.drho)}};
}

void run_discriminate(const ExperimentConfig& cfg, ResultBundle& b) {
  HamiltonianBundle hb = cfg.model.build();
  SeededRng prep(cfg.master_seed, 0);
  const PureState psi0 = random_product_state(cfg.model.n, prep);
  const SubsystemPartition part(cfg.model.n, head_sites(cfg.n_A.front()));
  const LikelihoodTable table =
      likelihood_table(psi0, hb, part, MeasurementBasis{}, cfg.t_grid);

  std::vector<DensityMatrix> copies;
  if (cfg.truth == "evolving") {
    copies.push_back(reduced_state_and_derivative(psi0, hb, part, cfg.t0).rho);
  } else {
    DensityMatrix mixed;
    mixed.elements = Eigen::MatrixXcd::Identity(part.d_A(), part.d_A()) /
                     double(part.d_A());
    copies.push_back(mixed);
  }
  const bool truth_evolving = cfg.truth == "evolving";

  b.columns = {"run",        "evolving",   "correct", "confidence",
               "var_single", "var_double", "fisher_ref", "ratio",
               "degenerate"};
  b.key_columns = 1;
  RowMap by_key = load_resume(cfg.out, b);
  for (int r = 0; r < cfg.runs; ++r) {
    if (by_key.count(fmt_g(r))) continue;
    SeededRng rng(cfg.master_seed, static_cast<std::uint64_t>(r) + 1);
    const DiscriminationResult d =
        discriminate_state(copies, table, cfg.N, cfg.trials, rng);
    by_key[fmt_g(r)] = {double(r),
                        d.evolving ? 1.0 : 0.0,
                        d.evolving == truth_evolving ? 1.0 : 0.0,
                        d.confidence,
                        d.var_single,
                        d.var_double,
                        d.fisher_ref,
                        d.ratio,
                        d.degenerate ? 1.0 : 0.0};
  }
  finalize_rows(b, std::move(by_key));
  double acc = 0.0;
  for (const auto& row : b.rows) acc += row[2];
  b.nested = {{"accuracy", b.rows.empty() ? 0.0 : acc / b.rows.size()},
              {"truth", cfg.truth}};
}

void run_bgue(const ExperimentConfig& cfg, ResultBundle& b) {
  HamiltonianBundle hb = cfg.model.build();
  SeededRng rng(cfg.master_seed, 0);
  const BgueSpec spec = BgueSpec::standard(hb, cfg.n_S, rng);
  b.columns = {"t",     "F_S",      "F_B",       "F_ent",
               "F_rot", "F_S_plus", "F_S_minus", "H2"};
  b.key_columns = 1;
  RowMap by_key;
  for (const BguePoint& p : bgue_curves(spec, cfg.t_grid))
    by_key[fmt_g(p.t)] = {p.t,     p.F_S,      p.F_B,       p.F_ent,
                          p.F_rot, p.F_S_plus, p.F_S_minus, p.H2};
  finalize_rows(b, std::move(by_key));
}

void run_tracedist(const ExperimentConfig& cfg, ResultBundle& b) {
  b.columns = {"d", "d_Abar", "predicted", "mc_mean", "mc_se", "mc_samples"};
  b.key_columns = 2;
  RowMap by_key = load_resume(cfg.out, b);
  for (int e = 1; e <= cfg.d_exp_max; ++e) {
    const double d = std::pow(2.0, e);
    if (by_key.count(fmt_g(d) + "," + fmt_g(1))) continue;
    by_key[fmt_g(d) + "," + fmt_g(1)] = {
        d, 1.0, trace_distance_full(1L << e), std::nan(""), std::nan(""), 0.0};
  }

  const int n_samples = effective_samples(cfg);
  if (n_samples > 0) {
    const int n = cfg.model.n;
    const long d = 1L << n, d_Ab = 1L << cfg.n_Abar;
    if (!by_key.count(fmt_g(double(d)) + "," + fmt_g(double(d_Ab)))) {
      const SubsystemPartition part(n, head_sites(n - cfg.n_Abar));
      const double flat = 1.0 / double(part.d_A());
      double acc = 0.0, acc2 = 0.0;
      for (int s = 0; s < n_samples; ++s) {
        SeededRng rng(cfg.master_seed, static_cast<std::uint64_t>(s));
        const PureState psi = haar_state(n, rng);
        const Eigen::VectorXd p =
            amplitude_matrix(psi, part).rowwise().squaredNorm();
        const double tv = (p.array() - flat).abs().sum();
        acc += tv;
        acc2 += tv * tv;
      }
      const double mean = acc / n_samples;
      const double var = std::max(0.0, acc2 / n_samples - mean * mean);
      by_key[fmt_g(double(d)) + "," + fmt_g(double(d_Ab))] = {
          double(d),
          double(d_Ab),
          trace_distance_sub(d, d_Ab),
          mean,
          n_samples > 1 ? std::sqrt(var / (n_samples - 1)) : 0.0,
          double(n_samples)};
    }
  }
  finalize_rows(b, std::move(by_key));
}

void run_fidelity(const ExperimentConfig& cfg, ResultBundle& b) {
  HamiltonianBundle hb = cfg.model.build();
  hb.spectral();
  b.columns = {"n_R", "measured_mean", "measured_se", "predicted", "samples"};
  b.key_columns = 1;
  RowMap by_key = load_resume(cfg.out, b);
  for (int n_R : cfg.n_R) {
    if (by_key.count(fmt_g(n_R))) continue;
    const SubsystemPartition part(cfg.model.n, head_sites(n_R));
    SeededRng rng(cfg.master_seed, static_cast<std::uint64_t>(n_R));
    const HolevoEnsemble ens =
        holevo_fidelity_ensemble(hb, part, effective_samples(cfg), rng);
    by_key[fmt_g(n_R)] = {double(n_R), ens.measured_mean, ens.measured_stderr,
                          ens.predicted, double(effective_samples(cfg))};
  }
  finalize_rows(b, std::move(by_key));
}

void run_blackhole(const ExperimentConfig& cfg, ResultBundle& b) {
  BlackHoleSpec bh;
  bh.M0 = cfg.M0;
  bh.G_N = cfg.G_N;
  bh.alpha = cfg.alpha;
  b.columns = {"t",   "mass", "temperature", "var_H_R", "S_B",
               "S_R", "post_page", "F_R", "suppression_exponent"};
  b.key_columns = 1;
  RowMap by_key;
  for (long k = 0; k < cfg.t_grid.size(); ++k) {
    const double t = cfg.t_grid[k];
    const BhPoint p = bh_radiation_qfi(bh, t);
    by_key[fmt_g(t)] = {t,
                        p.mass,
                        p.temperature,
                        p.var_H_R,
                        p.S_B,
                        p.S_R,
                        p.post_page ? 1.0 : 0.0,
                        p.F_R ? *p.F_R : std::nan(""),
                        p.suppression_exponent ? *p.suppression_exponent
                                               : std::nan("")};
  }
  finalize_rows(b, std::move(by_key));
}

}  // namespace

HamiltonianBundle ModelSpec::build() const {
  if (type == "mixed_field_ising")
    return build_mixed_field_ising(n, g, h, boundary);
  if (type == "tfi_integrable") return build_tfi_integrable(n, g, boundary);
  if (type == "xxz") return build_xxz(n, delta);
  throw std::invalid_argument("config /model/type: unknown model '" + type +
                              "'");
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) bad("", "expected a JSON object");
  ExperimentConfig cfg;
  auto it = j.find("experiment");
  if (it == j.end()) bad("/experiment", "required key missing");
  if (!it->is_string()) bad("/experiment", "expected a string");
  cfg.experiment = it->get<std::string>();

  static const std::set<std::string> ids = {
      "qfi-scan", "lindblad", "haar-sat",  "cfi-scan", "mle",     "discriminate",
      "bgue",     "tracedist", "fidelity", "blackhole", "xxz-scan"};
  if (!ids.count(cfg.experiment))
    bad("/experiment", "unknown experiment '" + cfg.experiment + "'");
  const std::string& id = cfg.experiment;

  std::set<std::string> allowed = {"experiment", "master_seed", "out"};
  auto allow = [&allowed](std::initializer_list<const char*> ks) {
    for (const char* k : ks) allowed.insert(k);
  };
  if (id == "qfi-scan" || id == "xxz-scan" || id == "cfi-scan")
    allow({"model", "n_A", "t_grid", "samples", "samples_paper"});
  else if (id == "haar-sat")
    allow({"model", "n_A", "samples", "samples_paper"});
  else if (id == "lindblad")
    allow({"model", "t_grid", "samples", "samples_paper", "gamma", "dt"});
  else if (id == "mle")
    allow({"model", "n_A", "t_grid", "t0", "N", "repetitions"});
  else if (id == "discriminate")
    allow({"model", "n_A", "t_grid", "t0", "N", "trials", "runs", "truth"});
  else if (id == "bgue")
    allow({"model", "t_grid", "n_S", "n_B"});
  else if (id == "tracedist")
    allow({"model", "d_exp_max", "n_Abar", "samples", "samples_paper"});
  else if (id == "fidelity")
    allow({"model", "n_R", "samples", "samples_paper"});
  else if (id == "blackhole")
    allow({"t_grid", "M0", "G_N", "alpha"});
  expect_keys(j, "", allowed);

  {
    auto ms = j.find("master_seed");
    if (ms != j.end()) {
      if (!ms->is_number_integer() || ms->get<long long>() < 0)
        bad("/master_seed", "expected a nonnegative integer");
      cfg.master_seed = ms->get<std::uint64_t>();
    }
  }
  cfg.out = get_str(j, "", "out", "");
  cfg.samples = static_cast<int>(get_int(j, "", "samples", cfg.samples, 0, 1000000));
  cfg.samples_paper = static_cast<int>(
      get_int(j, "", "samples_paper", cfg.samples_paper, 0, 1000000));
  if (j.contains("model")) cfg.model = parse_model(j.at("model"), "/model");
  if (j.contains("t_grid"))
    cfg.t_grid = parse_grid(j.at("t_grid"), "/t_grid",
                            (id == "bgue" || id == "blackhole") ? 1 : 2);
  cfg.n_A = get_int_list(j, "", "n_A", 1, cfg.model.n,
                         id == "qfi-scan" || id == "xxz-scan" ||
                             id == "cfi-scan" || id == "haar-sat");

  if (id == "xxz-scan" && cfg.model.type != "xxz")
    bad("/model/type", "xxz-scan requires the xxz model");
  if (id == "qfi-scan" || id == "xxz-scan" || id == "cfi-scan" ||
      id == "lindblad") {
    if (cfg.t_grid.size() == 0) bad("/t_grid", "required key missing");
    if (effective_samples(cfg) < 1 && cfg.samples < 1)
      bad("/samples", "must be at least 1");
  }
  if (id == "haar-sat")
    for (int a : cfg.n_A)
      if (2 * a > cfg.model.n)
        bad("/n_A", "kept side must be at most half the register");
  if (id == "lindblad") {
    if (cfg.model.n > 7) bad("/model/n", "dissipative chains support n <= 7");
    cfg.gamma = get_num(j, "", "gamma", cfg.gamma);
    if (!(cfg.gamma > 0)) bad("/gamma", "must be positive");
    cfg.dt = get_num(j, "", "dt", cfg.dt);
    if (!(cfg.dt > 0)) bad("/dt", "must be positive");
  }
  if (id == "mle" || id == "discriminate") {
    if (cfg.t_grid.size() == 0) bad("/t_grid", "required key missing");
    if (cfg.n_A.empty()) cfg.n_A = {cfg.model.n};
    if (cfg.n_A.size() != 1) bad("/n_A", "expected a single block size");
    cfg.t0 = get_num(j, "", "t0", cfg.t0);
    if (cfg.t0 < cfg.t_grid[0] || cfg.t0 > cfg.t_grid[cfg.t_grid.size() - 1])
      bad("/t0", "must lie inside t_grid");
    cfg.N = get_int(j, "", "N", cfg.N, 1, 100000000);
    if (id == "mle")
      cfg.repetitions =
          static_cast<int>(get_int(j, "", "repetitions", cfg.repetitions, 1, 100000));
    if (id == "discriminate") {
      cfg.trials = static_cast<int>(get_int(j, "", "trials", cfg.trials, 3, 100000));
      cfg.runs = static_cast<int>(get_int(j, "", "runs", cfg.runs, 1, 100000));
      cfg.truth = get_str(j, "", "truth", cfg.truth);
      if (cfg.truth != "evolving" && cfg.truth != "equilibrium")
        bad("/truth", "expected 'evolving' or 'equilibrium'");
    }
  }
  if (id == "bgue") {
    if (cfg.t_grid.size() == 0) bad("/t_grid", "required key missing");
    cfg.n_S = static_cast<int>(get_int(j, "", "n_S", cfg.n_S, 1, 6));
    cfg.n_B = static_cast<int>(get_int(j, "", "n_B", cfg.n_B, 2, 11));
    if (cfg.n_S > cfg.n_B)
      bad("/n_S", "system register cannot exceed the bath");
    if (cfg.n_S + cfg.n_B != cfg.model.n)
      bad("/model/n", "must equal n_S + n_B");
    if (cfg.t_grid[0] < 0) bad("/t_grid", "times must be nonnegative");
  }
  if (id == "tracedist") {
    cfg.d_exp_max =
        static_cast<int>(get_int(j, "", "d_exp_max", cfg.d_exp_max, 1, 30));
    cfg.n_Abar = static_cast<int>(
        get_int(j, "", "n_Abar", cfg.n_Abar, 1, cfg.model.n - 1));
  }
  if (id == "fidelity") {
    cfg.n_R = get_int_list(j, "", "n_R", 1, cfg.model.n - 1, true);
    if (effective_samples(cfg) < 1 && cfg.samples < 1)
      bad("/samples", "must be at least 1");
  }
  if (id == "blackhole") {
    if (cfg.t_grid.size() == 0) bad("/t_grid", "required key missing");
    cfg.M0 = get_num(j, "", "M0", cfg.M0);
    cfg.G_N = get_num(j, "", "G_N", cfg.G_N);
    cfg.alpha = get_num(j, "", "alpha", cfg.alpha);
    if (!(cfg.M0 > 0)) bad("/M0", "must be positive");
    if (!(cfg.G_N > 0)) bad("/G_N", "must be positive");
    if (!(cfg.alpha > 0)) bad("/alpha", "must be positive");
    const double t_total = cfg.G_N * cfg.G_N * std::pow(cfg.M0, 3);
    if (cfg.t_grid[0] < 0 || cfg.t_grid[cfg.t_grid.size() - 1] >= t_total)
      bad("/t_grid", "must lie inside [0, t_total) with t_total = " +
                         fmt_g(t_total));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f)
    throw std::invalid_argument("config: cannot open '" + path + "'");
  json j;
  f >> j;
  return parse_config(j);
}

nlohmann::json config_echo(const ExperimentConfig& cfg) {
  json e;
  e["experiment"] = cfg.experiment;
  e["master_seed"] = cfg.master_seed;
  const std::string& id = cfg.experiment;
  const bool uses_model = id != "blackhole";
  if (uses_model) {
    e["model"] = {{"type", cfg.model.type},
                  {"n", cfg.model.n},
                  {"g", cfg.model.g},
                  {"h", cfg.model.h},
                  {"delta", cfg.model.delta},
                  {"boundary", cfg.model.boundary == Boundary::periodic
                                   ? "periodic"
                                   : "open"}};
  }
  auto grid_json = [&] {
    json a = json::array();
    for (long i = 0; i < cfg.t_grid.size(); ++i) a.push_back(cfg.t_grid[i]);
    return a;
  };
  if (id == "qfi-scan" || id == "xxz-scan" || id == "cfi-scan") {
    e["n_A"] = cfg.n_A;
    e["t_grid"] = grid_json();
    e["samples"] = effective_samples(cfg);
  } else if (id == "haar-sat") {
    e["n_A"] = cfg.n_A;
    e["samples"] = effective_samples(cfg);
  } else if (id == "lindblad") {
    e["t_grid"] = grid_json();
    e["samples"] = effective_samples(cfg);
    e["gamma"] = cfg.gamma;
    e["dt"] = cfg.dt;
  } else if (id == "mle") {
    e["n_A"] = cfg.n_A;
    e["t_grid"] = grid_json();
    e["t0"] = cfg.t0;
    e["N"] = cfg.N;
    e["repetitions"] = cfg.repetitions;
  } else if (id == "discriminate") {
    e["n_A"] = cfg.n_A;
    e["t_grid"] = grid_json();
    e["t0"] = cfg.t0;
    e["N"] = cfg.N;
    e["trials"] = cfg.trials;
    e["runs"] = cfg.runs;
    e["truth"] = cfg.truth;
  } else if (id == "bgue") {
    e["t_grid"] = grid_json();
    e["n_S"] = cfg.n_S;
    e["n_B"] = cfg.n_B;
  } else if (id == "tracedist") {
    e["d_exp_max"] = cfg.d_exp_max;
    e["n_Abar"] = cfg.n_Abar;
    e["samples"] = effective_samples(cfg);
  } else if (id == "fidelity") {
    e["n_R"] = cfg.n_R;
    e["samples"] = effective_samples(cfg);
  } else if (id == "blackhole") {
    e["t_grid"] = grid_json();
    e["M0"] = cfg.M0;
    e["G_N"] = cfg.G_N;
    e["alpha"] = cfg.alpha;
  }
  return e;
}

ResultBundle run(const ExperimentConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  ResultBundle b;
  b.experiment = cfg.experiment;
  b.echo = config_echo(cfg);
  b.nested = nullptr;

  const std::string& id = cfg.experiment;
  if (id == "qfi-scan" || id == "xxz-scan")
    run_scan(cfg, b, false);
  else if (id == "cfi-scan")
    run_scan(cfg, b, true);
  else if (id == "haar-sat")
    run_haar_sat(cfg, b);
  else if (id == "lindblad")
    run_lindblad(cfg, b);
  else if (id == "mle")
    run_mle(cfg, b);
  else if (id == "discriminate")
    run_discriminate(cfg, b);
  else if (id == "bgue")
    run_bgue(cfg, b);
  else if (id == "tracedist")
    run_tracedist(cfg, b);
  else if (id == "fidelity")
    run_fidelity(cfg, b);
  else if (id == "blackhole")
    run_blackhole(cfg, b);
  else
    bad("/experiment", "unknown experiment '" + id + "'");

  b.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return b;
}

void write_bundle(const ResultBundle& b, const std::string& path) {
  if (path.empty()) bad("/out", "no output path given");
  if (b.experiment == "mle") {
    json out = {{"format_version", b.format_version},
                {"experiment", b.experiment},
                {"config", b.echo},
                {"columns", b.columns},
                {"rows", b.rows},
                {"nested", b.nested}};
    atomic_write(path, out.dump(1) + "\n");
    return;
  }
  std::ostringstream os;
  os << "# format " << b.format_version << "\n";
  os << "# experiment " << b.experiment << "\n";
  os << "# config " << b.echo.dump() << "\n";
  os << "# conventions: sites little-endian; sample/run/rep columns are RNG "
        "stream ids under master_seed; t in inverse-coupling units; Fisher "
        "columns in coupling-squared units; flags 0/1\n";
  if (!b.nested.is_null()) os << "# nested " << b.nested.dump() << "\n";
  for (std::size_t i = 0; i < b.columns.size(); ++i)
    os << (i ? "," : "") << b.columns[i];
  os << "\n";
  for (const auto& row : b.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << fmt_g(row[i]);
    os << "\n";
  }
  atomic_write(path, os.str());
}

SummaryTable summarize(const ResultBundle& b, const std::string& reduction,
                       double window_lo, double window_hi,
                       const std::string& quantity) {
  if (reduction != "mean" && reduction != "median")
    throw std::invalid_argument("summarize: reduction must be mean or median");
  auto col = [&](const std::string& name) {
    const auto it = std::find(b.columns.begin(), b.columns.end(), name);
    if (it == b.columns.end())
      throw std::invalid_argument("summarize: bundle has no column '" + name +
                                  "'");
    return static_cast<int>(it - b.columns.begin());
  };
  const int c_nA = col("n_A"), c_s = col("sample"), c_t = col("t");
  const int c_q = col(quantity);

  // per (n_A, sample): time average inside the window
  std::map<int, std::map<int, std::pair<double, long>>> groups;
  for (const auto& row : b.rows) {
    const double t = row[c_t];
    if (t < window_lo || t > window_hi) continue;
    auto& cell =
        groups[int(std::lround(row[c_nA]))][int(std::lround(row[c_s]))];
    cell.first += row[c_q];
    cell.second += 1;
  }

  int n_register = 0;
  if (b.echo.contains("model")) n_register = b.echo["model"]["n"].get<int>();

  SummaryTable table;
  table.quantity = quantity;
  table.reduction = reduction;
  table.window_lo = window_lo;
  table.window_hi = window_hi;
  for (const auto& [n_A, samples] : groups) {
    std::vector<double> vals;
    vals.reserve(samples.size());
    for (const auto& [s, cell] : samples)
      vals.push_back(cell.first / double(cell.second));
    double value;
    if (reduction == "median") {
      std::vector<double> v = vals;
      std::sort(v.begin(), v.end());
      const std::size_t m = v.size() / 2;
      value = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    } else {
      value = 0.0;
      for (double x : vals) value += x;
      value /= double(vals.size());
    }
    double mean = 0.0;
    for (double x : vals) mean += x;
    mean /= double(vals.size());
    double var = 0.0;
    for (double x : vals) var += (x - mean) * (x - mean);
    const double se =
        vals.size() > 1 ? std::sqrt(var / double(vals.size() - 1) /
                                    double(vals.size()))
                        : 0.0;
    table.rows.push_back({double(n_A), double(2 * n_A - n_register), value, se,
                          long(vals.size())});
  }
  return table;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Fisher-information laboratory for chaotic spin registers"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  std::uint64_t seed_override = 0;
  bool seed_given = false, paper = false;
  int threads = 1;

  static const std::pair<const char*, const char*> ids[] = {
      {"qfi-scan", "subsystem Fisher information over time and cut size"},
      {"lindblad", "dissipative relaxation of entropy and Fisher information"},
      {"haar-sat", "random-state saturation predictions with optional sampling"},
      {"cfi-scan", "product-basis Fisher information over time and cut size"},
      {"mle", "maximum-likelihood time estimates from repeated sampling"},
      {"discriminate", "evolving-versus-equilibrium decision protocol"},
      {"bgue", "Brownian random-matrix curves (exact, no sampling)"},
      {"tracedist", "distance of sampled outcome distributions from uniform"},
      {"fidelity", "overlap fidelity of the energy-companion state"},
      {"blackhole", "evaporating-horizon estimator trajectory"},
      {"xxz-scan", "subsystem Fisher information for the anisotropic chain"}};
  for (const auto& [name, desc] : ids) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON experiment description")
        ->required();
    sub->add_option("--seed", seed_override, "override master_seed")
        ->trigger_on_parse()
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--out", out_override, "override the output path");
    sub->add_option("--threads", threads, "worker threads")
        ->check(CLI::Range(1, 256));
    sub->add_flag("--paper-scale", paper,
                  "use the publication sample counts (multi-hour)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    const std::string sub = app.get_subcommands().front()->get_name();
    if (cfg.experiment != sub)
      throw std::invalid_argument("config /experiment: '" + cfg.experiment +
                                  "' does not match subcommand '" + sub + "'");
    if (seed_given) cfg.master_seed = seed_override;
    if (!out_override.empty()) cfg.out = out_override;
    cfg.paper_scale = paper;
    cfg.threads = threads;
    if (cfg.out.empty())
      throw std::invalid_argument("config /out: required (or pass --out)");

    const ResultBundle b = run(cfg);
    write_bundle(b, cfg.out);
    std::printf("%s: %zu rows -> %s (%.1f s)\n", b.experiment.c_str(),
                b.rows.size(), cfg.out.c_str(), b.wall_seconds);
    return 0;
  } catch (const numerical_error& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

}  // namespace qlab
