#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "qlab/analytic.hpp"
#include "qlab/estimation.hpp"

// Batch driver: named experiments wired from the library modules, with
// JSON configs, seeded ensembles, and plot-ready CSV/JSON output.
// Numeric payloads are deterministic functions of (config, master_seed),
// independent of the thread count.

namespace qlab {

struct ModelSpec {
  std::string type = "mixed_field_ising";  // | tfi_integrable | xxz
  int n = 8;
  double g = -1.05;
  double h = 0.5;
  double delta = 0.5;      // xxz anisotropy
  Boundary boundary = Boundary::periodic;

  HamiltonianBundle build() const;
};

// One experiment, fully resolved: defaults filled in, sample counts
// already switched between desk and paper scale. Fields outside the
// experiment's whitelist are rejected at parse time.
struct ExperimentConfig {
  std::string experiment;  // qfi-scan | lindblad | haar-sat | cfi-scan |
                           // mle | discriminate | bgue | tracedist |
                           // fidelity | blackhole | xxz-scan
  ModelSpec model;
  std::vector<int> n_A;
  Eigen::VectorXd t_grid;
  int samples = 50;
  int samples_paper = 200;
  std::uint64_t master_seed = 1;
  std::string out;
  bool paper_scale = false;
  int threads = 1;

  // estimation experiments
  double t0 = 10.0;
  long N = 50;
  int repetitions = 5;
  int trials = 8;
  int runs = 20;
  std::string truth = "evolving";  // which copies discriminate receives
  // lindblad
  double gamma = 1.0;
  double dt = 0.01;
  // bgue
  int n_S = 3;
  int n_B = 6;
  // tracedist
  int d_exp_max = 10;
  int n_Abar = 3;
  // fidelity
  std::vector<int> n_R;
  // blackhole
  double M0 = 1.0;
  double G_N = 1.0;
  double alpha = 1.0;
};

// Validation failures throw std::invalid_argument whose message names
// the offending key ("config /model/n: ...").
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// The resolved parameters that determine the numeric payload; written
// into every output and compared when resuming.
nlohmann::json config_echo(const ExperimentConfig& cfg);

struct ResultBundle {
  std::string experiment;
  nlohmann::json echo;
  std::vector<std::string> columns;       // numeric schema, key columns first
  int key_columns = 0;                    // leading columns forming the row key
  std::vector<std::vector<double>> rows;  // canonically sorted by key
  nlohmann::json nested;                  // nested results (local maxima, fits)
  double wall_seconds = 0.0;
  int format_version = 1;
};

// Runs the experiment. When cfg.out names an existing output produced by
// the same echo, rows whose keys are already present are not recomputed
// (scan experiments); the rewritten file is byte-identical to a fresh
// run either way.
ResultBundle run(const ExperimentConfig& cfg);

// CSV for curve experiments, JSON when nested results dominate (mle).
// Writes to a temporary file and renames, so readers never see partial
// output.
void write_bundle(const ResultBundle& bundle, const std::string& path);

struct SummaryRow {
  double key = 0.0;        // n_A
  double collapse_x = 0.0; // 2 n_A - n
  double value = 0.0;
  double std_error = 0.0;
  long count = 0;          // samples entering the reduction
};

struct SummaryTable {
  std::string quantity;
  std::string reduction;
  double window_lo = 0.0, window_hi = 0.0;
  std::vector<SummaryRow> rows;
};

// Late-time reduction of a scan bundle: per (n_A, sample) the quantity
// is first averaged over grid times inside the window, then reduced
// across samples (mean or median) with the standard error of the mean.
SummaryTable summarize(const ResultBundle& bundle,
                       const std::string& reduction = "mean",
                       double window_lo = 15.0, double window_hi = 20.0,
                       const std::string& quantity = "F_A");

// Exit codes: 0 success, 2 config/CLI validation, 3 numerical abort.
int run_cli(int argc, char** argv);

}  // namespace qlab
