#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "qksd/basis.hpp"
#include "qksd/cost.hpp"
#include "qksd/models.hpp"
#include "qksd/noise.hpp"

namespace qksd {

// Stable 64-bit hash of an identifier; combined with derive_seed it gives
// every named work item its own reproducible random stream, independent of
// how the surrounding run enumerates or schedules items.
std::uint64_t fnv1a64(std::string_view text);

// A diagonalised benchmark system: Hamiltonian normalised to unit spectral
// norm, its coefficient 1-norm, and the spectral data relative to the model's
// reference state.  Shared immutably between instances and worker threads.
struct PreparedSystem {
  ModelConfig model;
  Lattice lattice;
  PauliSum hamiltonian;  // normalised
  double h_tot = 0.0;    // coefficient 1-norm after normalisation
  double norm_scale = 1.0;  // the spectral norm that was divided out
  double h_norm = 1.0;      // max |E| of the normalised spectrum (~1)
  SpectralDecomposition sd;
  std::string name;
};

using SystemPtr = std::shared_ptr<const PreparedSystem>;

std::string system_name(const ModelConfig& config);

// Build + normalise + diagonalise.  Results are memoised in-process by name;
// a non-empty cache_dir additionally persists the raw spectral data on disk
// so repeated command-line runs skip the dense diagonalisation.
SystemPtr prepare_system(const ModelConfig& config, const std::string& cache_dir = "");

// One benchmark instance: a system together with a subspace dimension.  The
// admission filters reject dimensions whose power-basis subspace error is
// outside (1e-9, 1e-2) and systems whose reference overlap p_g is below 1e-3.
struct PreparedInstance {
  SystemPtr system;
  int d = 2;
  std::string id;
  std::uint64_t seed = 0;   // instance random stream
  double eps_k_p = 0.0;     // power-basis subspace error at this d
  double epsilon = 0.0;     // benchmark accuracy target (factor * eps_k_p)
  bool admitted = false;
  std::string reject_reason;
};

PreparedInstance admit_instance(const SystemPtr& system, int d, std::uint64_t corpus_seed,
                                double epsilon_factor = 2.0);

// Standard instance enumeration: chains and ladders swept over d, random
// graphs with one randomly drawn d each.  Heisenberg sizes count spins,
// Hubbard sizes count orbital sites (two qubits per site).
struct CorpusOptions {
  bool heisenberg = true;
  bool hubbard = true;
  bool chains = true;
  bool ladders = true;
  int random_graphs = 0;  // per model
  int heisenberg_size = 10;
  int hubbard_size = 5;
  int d_min = 2;
  int d_max = 30;
  double epsilon_factor = 2.0;
  std::uint64_t seed = 1;
  std::string cache_dir;
};

// All corpus instances (admitted or not) in deterministic order.
std::vector<PreparedInstance> build_corpus(const CorpusOptions& options, int threads = 1);

// The instance's reproducible draw of the filter-centre offset for the
// Gaussian-damped family, uniform in [-half_width, half_width].
double gp_band_offset(const PreparedInstance& instance, double half_width = 0.1);

// Fully parameterised basis for one family on one system: the shift, widths
// and steps follow the benchmarking conventions (unit-norm anchors for the
// polynomial families, diagnostic-matched widths, grid-searched steps).
struct FamilySetup {
  BasisSpec basis;
  TauSelection tau_sel;   // width selection, when the family has a width
  GridSearchResult grid;  // step search, when the family has a step
  bool ok = false;
  std::string error;
};

FamilySetup family_setup(BasisFamily family, const PreparedSystem& system, int d,
                         double gp_e0_offset = 0.0);

// One measurement-cost evaluation at a fixed accuracy target: the regulariser
// solved on the extended-precision bound function, the overhead factor gamma,
// and the budget decomposition of the structure's collective protocol.
// Unsolvable targets (epsilon inside the subspace error) give infinite gamma.
struct GammaRecord {
  BasisFamily family = BasisFamily::power;
  double e0 = 0.0;
  double tau = 0.0;
  double delta_t = 0.0;
  double delta_e = 0.0;
  double epsilon = 0.0;
  double kappa = 0.0;
  double eps_k = 0.0;  // this family's subspace error
  double eta = 0.0;
  double gamma = 0.0;
  ProtocolKind protocol = ProtocolKind::cm_real_hankel;
  double alpha = 0.0;
  double beta = 0.0;
  double factor1 = 0.0;
  double m_per_part = 0.0;
  double m_tot = 0.0;
  double entries_factor = 0.0;
  bool solvable = false;
  bool identity_ok = true;
  std::string error;
};

GammaRecord evaluate_gamma(const FamilySetup& setup, const PreparedSystem& system,
                           double epsilon, double kappa);

// Least-squares slope of log(m) against log(1/epsilon).
double fit_loglog_slope(const std::vector<double>& epsilon, const std::vector<double>& m);

// Accuracy sweep at the largest admitted dimension whose window
// [window_lo_factor * eps_K(family), window_hi] is non-empty.
struct ScalingCurve {
  BasisFamily family = BasisFamily::power;
  int d = 0;
  double eps_k = 0.0;
  bool found = false;
  std::string note;
  std::vector<GammaRecord> records;
  double slope = 0.0;
};

ScalingCurve scaling_curve(BasisFamily family, const SystemPtr& system, std::uint64_t corpus_seed,
                           int d_min, int d_max, double window_lo_factor, double window_hi,
                           int points, double kappa, double epsilon_factor);

// Deterministic fork-join map: results are collected by index, so the output
// never depends on thread scheduling.  The first exception, if any, is
// rethrown after all workers finish.
template <typename T>
std::vector<T> parallel_map(int n, int threads, const std::function<T(int)>& fn) {
  std::vector<std::optional<T>> slots(static_cast<std::size_t>(n));
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) slots[static_cast<std::size_t>(i)].emplace(fn(i));
  } else {
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          slots[static_cast<std::size_t>(i)].emplace(fn(i));
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min(threads, n);
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(n));
  for (auto& slot : slots) {
    if (!slot.has_value()) throw std::runtime_error("parallel_map: a task produced no result");
    out.push_back(std::move(*slot));
  }
  return out;
}

// ---- command layer ----

struct RunConfig {
  std::string config_text = "{}";  // JSON document (the config file's content)
  std::filesystem::path out_dir;
  int threads = 1;
  std::optional<std::uint64_t> seed_override;
};

struct CommandResult {
  int exit_code = 0;  // nonzero iff any written record failed an identity check
  std::size_t rows = 0;
  std::vector<std::string> outputs;
  std::string log;
};

CommandResult cmd_curve(const RunConfig& run);
CommandResult cmd_distribution(const RunConfig& run);
CommandResult cmd_cost(const RunConfig& run);
CommandResult cmd_noise(const RunConfig& run);
CommandResult cmd_mc(const RunConfig& run);
CommandResult cmd_projector(const RunConfig& run);
CommandResult cmd_scaling(const RunConfig& run);

const std::vector<std::string>& command_names();
CommandResult run_command(const std::string& name, const RunConfig& run);

}  // namespace qksd
