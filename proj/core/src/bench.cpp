#include "qksd/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "qksd/chebyshev.hpp"
#include "qksd/csv.hpp"
#include "qksd/exact.hpp"
#include "qksd/gp_cost.hpp"
#include "qksd/mc.hpp"
#include "qksd/projector.hpp"

namespace qksd {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (!(scale > 0.0)) return 0.0;
  return std::abs(a - b) / scale;
}

std::string pad2(int v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", v);
  return buf;
}

std::vector<double> geometric_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("geometric_grid: need 0 < lo < hi");
  if (n < 2) throw std::invalid_argument("geometric_grid: need at least two points");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double step = std::log(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string system_name(const ModelConfig& config) {
  std::string name = to_string(config.model);
  name += '-';
  switch (config.lattice.kind) {
    case LatticeKind::chain: name += "chain"; break;
    case LatticeKind::ladder: name += "ladder"; break;
    case LatticeKind::random_graph: name += "rg"; break;
  }
  name += std::to_string(config.lattice.size);
  if (config.lattice.kind == LatticeKind::random_graph)
    name += "-s" + std::to_string(config.lattice.seed);
  if (config.j != 1.0) name += "-j" + CsvWriter::format_double(config.j);
  if (config.model == ModelKind::hubbard && config.u != config.j)
    name += "-u" + CsvWriter::format_double(config.u);
  return name;
}

namespace {
std::mutex g_system_mutex;
std::map<std::string, SystemPtr>& system_memo() {
  static std::map<std::string, SystemPtr> memo;
  return memo;
}
}  // namespace

SystemPtr prepare_system(const ModelConfig& config, const std::string& cache_dir) {
  const std::string name = system_name(config);
  {
    std::lock_guard<std::mutex> lock(g_system_mutex);
    auto it = system_memo().find(name);
    if (it != system_memo().end()) return it->second;
  }

  auto sys = std::make_shared<PreparedSystem>();
  sys->model = config;
  sys->name = name;
  sys->lattice = build_lattice(config.lattice);
  const PauliSum h_raw = build_model(config, sys->lattice);
  const Eigen::VectorXcd ref = reference_state(config, sys->lattice);

  SpectralDecomposition raw;
  bool loaded = false;
  std::string cache_path;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    cache_path = (std::filesystem::path(cache_dir) / (name + ".sdc")).string();
    if (auto cached = load_decomposition(cache_path)) {
      raw = *cached;
      loaded = true;
    }
  }
  if (!loaded) {
    raw = diagonalise(h_raw, ref);
    if (!cache_path.empty()) save_decomposition(cache_path, raw);
  }

  const Eigen::Index levels = raw.energies.size();
  const double norm = std::max(std::abs(raw.energies(0)), std::abs(raw.energies(levels - 1)));
  if (!(norm > 0.0)) throw std::runtime_error("prepare_system: spectrum has zero norm");
  sys->norm_scale = norm;
  sys->hamiltonian = normalise(h_raw, norm);
  sys->h_tot = sys->hamiltonian.h_tot();
  sys->sd = raw;
  sys->sd.energies /= norm;
  sys->sd.ground_energy /= norm;
  sys->sd.gap /= norm;
  sys->h_norm =
      std::max(std::abs(sys->sd.energies(0)), std::abs(sys->sd.energies(levels - 1)));

  std::lock_guard<std::mutex> lock(g_system_mutex);
  auto [it, inserted] = system_memo().emplace(name, std::move(sys));
  (void)inserted;  // a racing builder may have landed first; both are identical
  return it->second;
}

PreparedInstance admit_instance(const SystemPtr& system, int d, std::uint64_t corpus_seed,
                                double epsilon_factor) {
  if (!system) throw std::invalid_argument("admit_instance: null system");
  if (d < 1) throw std::invalid_argument("admit_instance: dimension must be positive");
  PreparedInstance inst;
  inst.system = system;
  inst.d = d;
  inst.id = system->name + "-d" + pad2(d);
  inst.seed = derive_seed(corpus_seed, fnv1a64(inst.id));

  BasisSpec p;
  p.family = BasisFamily::power;
  p.d = d;
  p.e0 = system->sd.ground_energy + 1.0;
  inst.eps_k_p = subspace_error_hp(p, system->sd);
  inst.epsilon = epsilon_factor * inst.eps_k_p;

  if (system->sd.p_g < 1e-3) {
    inst.reject_reason = "reference overlap p_g below 1e-3";
  } else if (inst.eps_k_p < 1e-9) {
    inst.reject_reason = "power subspace error below 1e-9";
  } else if (inst.eps_k_p > 1e-2) {
    inst.reject_reason = "power subspace error above 1e-2";
  } else {
    inst.admitted = true;
  }
  return inst;
}

std::vector<PreparedInstance> build_corpus(const CorpusOptions& options, int threads) {
  struct SysJob {
    ModelConfig config;
    std::vector<int> ds;
  };
  std::vector<SysJob> jobs;

  const std::vector<ModelKind> models = [&] {
    std::vector<ModelKind> out;
    if (options.heisenberg) out.push_back(ModelKind::heisenberg);
    if (options.hubbard) out.push_back(ModelKind::hubbard);
    return out;
  }();

  std::vector<int> swept;
  for (int d = options.d_min; d <= options.d_max; ++d) swept.push_back(d);

  for (ModelKind m : models) {
    const int size = m == ModelKind::heisenberg ? options.heisenberg_size : options.hubbard_size;
    for (LatticeKind kind : {LatticeKind::chain, LatticeKind::ladder}) {
      if (kind == LatticeKind::chain && !options.chains) continue;
      if (kind == LatticeKind::ladder && !options.ladders) continue;
      ModelConfig config;
      config.model = m;
      config.lattice.kind = kind;
      config.lattice.size = size;
      jobs.push_back({config, swept});
    }
  }
  for (ModelKind m : models) {
    const int size = m == ModelKind::heisenberg ? options.heisenberg_size : options.hubbard_size;
    const int model_index = m == ModelKind::heisenberg ? 0 : 1;
    for (int g = 0; g < options.random_graphs; ++g) {
      ModelConfig config;
      config.model = m;
      config.lattice.kind = LatticeKind::random_graph;
      config.lattice.size = size;
      config.lattice.seed =
          derive_seed(options.seed, 0x9a000000ULL + static_cast<std::uint64_t>(model_index) * 4096 +
                                        static_cast<std::uint64_t>(g));
      Rng d_rng(derive_seed(config.lattice.seed, 0xd));
      const int span = options.d_max - options.d_min + 1;
      const int d = options.d_min + static_cast<int>(d_rng.below(static_cast<std::uint64_t>(span)));
      jobs.push_back({config, {d}});
    }
  }

  const int n_jobs = static_cast<int>(jobs.size());
  const auto systems = parallel_map<SystemPtr>(n_jobs, threads, [&](int i) {
    return prepare_system(jobs[static_cast<std::size_t>(i)].config, options.cache_dir);
  });

  struct Slot {
    int job = 0;
    int d = 0;
  };
  std::vector<Slot> slots;
  for (int i = 0; i < n_jobs; ++i)
    for (int d : jobs[static_cast<std::size_t>(i)].ds) slots.push_back({i, d});

  return parallel_map<PreparedInstance>(static_cast<int>(slots.size()), threads, [&](int i) {
    const Slot& s = slots[static_cast<std::size_t>(i)];
    return admit_instance(systems[static_cast<std::size_t>(s.job)], s.d, options.seed,
                          options.epsilon_factor);
  });
}

double gp_band_offset(const PreparedInstance& instance, double half_width) {
  Rng rng(derive_seed(instance.seed, 0x6f5));
  return (2.0 * rng.uniform() - 1.0) * half_width;
}

FamilySetup family_setup(BasisFamily family, const PreparedSystem& system, int d,
                         double gp_e0_offset) {
  FamilySetup fs;
  BasisSpec& b = fs.basis;
  b.family = family;
  b.d = d;
  const SpectralDecomposition& sd = system.sd;
  const double e_g = sd.ground_energy;
  try {
    switch (family) {
      case BasisFamily::power:
        b.e0 = e_g + 1.0;
        break;
      case BasisFamily::chebyshev_poly:
        b.e0 = 0.0;
        b.h_tot = system.h_tot;
        break;
      case BasisFamily::inverse_power:
        b.e0 = e_g - 1.0;
        break;
      case BasisFamily::imaginary_time:
        b.e0 = e_g;
        fs.tau_sel = select_tau(family, sd, d, power_diag_error(sd, d));
        b.tau = fs.tau_sel.tau;
        break;
      case BasisFamily::gaussian_power: {
        b.e0 = e_g + gp_e0_offset;
        b.h_tot = system.h_tot;
        fs.tau_sel = select_tau(family, sd, d, power_diag_error(sd, d));
        b.tau = fs.tau_sel.tau;
        const int n_steps = default_lcu_steps(system.h_tot, b.tau);
        b.rescale.resize(static_cast<std::size_t>(d));
        for (int k = 1; k <= d; ++k)
          b.rescale[static_cast<std::size_t>(k - 1)] =
              gp_cost_ck(k, b.tau, system.h_tot, n_steps);
        break;
      }
      case BasisFamily::real_time:
        b.e0 = e_g;
        fs.grid = grid_search_param(family, sd, d);
        b.delta_t = fs.grid.param;
        break;
      case BasisFamily::filter_sinc:
        b.e0 = e_g;
        fs.tau_sel = select_tau(family, sd, d, power_diag_error(sd, d));
        b.tau = fs.tau_sel.tau;
        fs.grid = grid_search_param(family, sd, d, b.tau);
        b.delta_e = fs.grid.param;
        break;
    }
    fs.ok = true;
  } catch (const std::exception& e) {
    fs.ok = false;
    fs.error = e.what();
  }
  return fs;
}

GammaRecord evaluate_gamma(const FamilySetup& setup, const PreparedSystem& system,
                           double epsilon, double kappa) {
  GammaRecord r;
  r.family = setup.basis.family;
  r.e0 = setup.basis.e0;
  r.tau = setup.basis.tau;
  r.delta_t = setup.basis.delta_t;
  r.delta_e = setup.basis.delta_e;
  r.epsilon = epsilon;
  r.kappa = kappa;
  r.eps_k = kInf;
  r.gamma = kInf;
  r.m_per_part = kInf;
  r.m_tot = kInf;
  r.protocol = Protocol::for_structure(structure_of(r.family)).kind;
  if (!setup.ok) {
    r.error = setup.error;
    return r;
  }
  try {
    const KrylovMatricesHp km = build_matrices_hp(setup.basis, system.sd);
    const BoundFunction bf(km);
    const double e_g = system.sd.ground_energy;
    r.eps_k = std::max(static_cast<double>(bf.eps_k(e_g)), 0.0);

    const Protocol proto = Protocol::for_structure(km.structure);
    r.protocol = proto.kind;
    r.alpha = proto.alpha(kappa);
    r.beta = proto.beta(setup.basis.d);
    r.entries_factor = proto.entries_factor(setup.basis.d);
    const double p_g = system.sd.p_g;
    const double h2 = system.h_norm * system.h_norm;
    r.factor1 = r.alpha * h2 / (p_g * p_g * epsilon * epsilon);

    if (!(epsilon > r.eps_k)) {
      r.error = "accuracy target within the subspace error";
      return r;
    }
    if (!(e_g + epsilon < 0.0)) {
      r.error = "bound equation needs a negative target energy";
      return r;
    }
    const double eta = static_cast<double>(
        bf.solve(static_cast<long double>(e_g), static_cast<long double>(epsilon)));
    r.eta = eta;
    r.gamma = gamma_factor(p_g, epsilon, system.h_norm, eta);
    r.m_per_part = proto.m_for(setup.basis.d, eta, kappa);
    r.m_tot = m_tot(proto, setup.basis.d, kappa, eta);
    r.solvable = true;

    const double recomposed = r.factor1 * r.beta * r.gamma;
    const double eta_back = proto.eta_for(setup.basis.d, r.m_per_part, kappa);
    r.identity_ok = rel_diff(r.m_tot, recomposed) <= 1e-9 && rel_diff(eta_back, eta) <= 1e-9;
  } catch (const std::exception& e) {
    r.error = e.what();
    r.solvable = false;
  }
  return r;
}

double fit_loglog_slope(const std::vector<double>& epsilon, const std::vector<double>& m) {
  if (epsilon.size() != m.size())
    throw std::invalid_argument("fit_loglog_slope: size mismatch");
  double sx = 0.0, sy = 0.0;
  int n = 0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < epsilon.size(); ++i) {
    if (!(epsilon[i] > 0.0) || !std::isfinite(m[i]) || !(m[i] > 0.0)) continue;
    const double x = -std::log(epsilon[i]);
    const double y = std::log(m[i]);
    pts.emplace_back(x, y);
    sx += x;
    sy += y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("fit_loglog_slope: need at least two usable points");
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog_slope: degenerate abscissa");
  return sxy / sxx;
}

ScalingCurve scaling_curve(BasisFamily family, const SystemPtr& system, std::uint64_t corpus_seed,
                           int d_min, int d_max, double window_lo_factor, double window_hi,
                           int points, double kappa, double epsilon_factor) {
  ScalingCurve out;
  out.family = family;
  for (int d = d_max; d >= d_min; --d) {
    const PreparedInstance inst = admit_instance(system, d, corpus_seed, epsilon_factor);
    if (!inst.admitted) continue;
    const FamilySetup fs = family_setup(family, *system, d, 0.0);
    if (!fs.ok) continue;

    double eps_k = 0.0;
    try {
      const KrylovMatricesHp km = build_matrices_hp(fs.basis, system->sd);
      const BoundFunction bf(km);
      eps_k = std::max(static_cast<double>(bf.eps_k(system->sd.ground_energy)), 0.0);
    } catch (const std::exception&) {
      continue;
    }
    const double lo = window_lo_factor * std::max(eps_k, 1e-14);
    if (!(lo < window_hi)) continue;

    out.d = d;
    out.eps_k = eps_k;
    out.found = true;
    for (double eps : geometric_grid(lo, window_hi, points))
      out.records.push_back(evaluate_gamma(fs, *system, eps, kappa));

    std::vector<double> xs, ys;
    for (const GammaRecord& r : out.records) {
      if (!r.solvable || !std::isfinite(r.m_tot)) continue;
      xs.push_back(r.epsilon);
      ys.push_back(r.m_tot);
    }
    out.slope = fit_loglog_slope(xs, ys);
    return out;
  }
  out.note = "no admitted dimension with a non-empty accuracy window";
  return out;
}

// ---- command layer ----

namespace {

json parse_config(const RunConfig& run) {
  json cfg = json::parse(run.config_text.empty() ? std::string("{}") : run.config_text);
  if (!cfg.is_object()) throw std::runtime_error("config: top level must be a JSON object");
  return cfg;
}

double num_or(const json& cfg, const char* key, double fallback) {
  if (!cfg.contains(key)) return fallback;
  return cfg.at(key).get<double>();
}

int int_or(const json& cfg, const char* key, int fallback) {
  if (!cfg.contains(key)) return fallback;
  return cfg.at(key).get<int>();
}

bool bool_or(const json& cfg, const char* key, bool fallback) {
  if (!cfg.contains(key)) return fallback;
  return cfg.at(key).get<bool>();
}

std::uint64_t seed_of(const json& cfg, const RunConfig& run) {
  if (run.seed_override) return *run.seed_override;
  if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
  return 1;
}

ModelConfig model_of(const json& cfg) {
  ModelConfig out;
  out.model = model_kind_from_string(
      cfg.contains("model") ? cfg.at("model").get<std::string>() : "heisenberg");
  const int default_size = out.model == ModelKind::heisenberg ? 10 : 5;
  if (cfg.contains("lattice")) {
    const json& lat = cfg.at("lattice");
    out.lattice.kind = lattice_kind_from_string(
        lat.contains("kind") ? lat.at("kind").get<std::string>() : "chain");
    out.lattice.size = lat.contains("size") ? lat.at("size").get<int>() : default_size;
    out.lattice.seed = lat.contains("seed") ? lat.at("seed").get<std::uint64_t>() : 0;
  } else {
    out.lattice.size = default_size;
  }
  out.j = num_or(cfg, "j", 1.0);
  out.u = num_or(cfg, "u", out.j);
  return out;
}

std::vector<BasisFamily> families_of(const json& cfg) {
  if (!cfg.contains("families")) return all_families();
  std::vector<BasisFamily> out;
  for (const json& item : cfg.at("families")) {
    const std::string tag = item.get<std::string>();
    const auto f = family_from_tag(tag);
    if (!f) throw std::runtime_error("config: unknown family tag '" + tag + "'");
    out.push_back(*f);
  }
  if (out.empty()) throw std::runtime_error("config: families list is empty");
  return out;
}

std::string cache_dir_of(const json& cfg, const RunConfig& run) {
  if (!bool_or(cfg, "cache", true)) return "";
  return (run.out_dir / "cache").string();
}

std::filesystem::path out_path(const RunConfig& run, const std::string& file) {
  std::filesystem::create_directories(run.out_dir);
  return run.out_dir / file;
}

// The benchmark's accuracy target: absolute when "epsilon" is present,
// otherwise a multiple of the instance's power-basis subspace error.
double epsilon_of(const json& cfg, const PreparedInstance& inst) {
  if (cfg.contains("epsilon")) return cfg.at("epsilon").get<double>();
  return inst.epsilon;
}

// Offsets of the filter-centre sweep: the band edges plus a fine grid
// around the centre, all in units of the spectral radius.
std::vector<double> band_offsets() {
  std::vector<double> out;
  out.push_back(-0.1);
  for (int i = -9; i <= 9; ++i) out.push_back(0.002 * i);
  out.push_back(0.1);
  return out;
}

void write_instance_cell_block(CsvWriter& csv, const PreparedInstance& inst) {
  const ModelConfig& mc = inst.system->model;
  csv.cell(inst.id)
      .cell(to_string(mc.model))
      .cell(to_string(mc.lattice.kind))
      .cell(mc.lattice.size)
      .cell(std::to_string(mc.lattice.seed))
      .cell(inst.d);
}

const std::vector<std::string> kInstanceColumns = {"instance", "model",      "lattice",
                                                   "size",     "graph_seed", "d"};

std::vector<std::string> with_instance_columns(std::initializer_list<const char*> extra) {
  std::vector<std::string> cols = kInstanceColumns;
  for (const char* c : extra) cols.emplace_back(c);
  return cols;
}

void write_gamma_cells(CsvWriter& csv, const GammaRecord& r) {
  csv.cell(family_tag(r.family))
      .cell(r.e0)
      .cell(r.tau)
      .cell(r.delta_t)
      .cell(r.delta_e)
      .cell(r.epsilon)
      .cell(r.kappa)
      .cell(r.eps_k)
      .cell(r.eta)
      .cell(r.gamma)
      .cell(protocol_tag(r.protocol))
      .cell(r.alpha)
      .cell(r.beta)
      .cell(r.factor1)
      .cell(r.m_per_part)
      .cell(r.m_tot)
      .cell(r.entries_factor)
      .cell(r.solvable)
      .cell(r.identity_ok)
      .cell(r.error);
}

const std::initializer_list<const char*> kGammaColumns = {
    "family", "e0",      "tau",        "delta_t", "delta_e",    "epsilon",        "kappa",
    "eps_k",  "eta",     "gamma",      "protocol", "alpha",     "beta",           "factor1",
    "m_per_part", "m_tot", "entries_factor", "solvable", "identity_ok", "error"};

struct CommandContext {
  json cfg;
  std::uint64_t seed = 1;
  std::string cache_dir;
  std::ostringstream log;
  bool identity_failure = false;

  CommandContext(const RunConfig& run) : cfg(parse_config(run)) {
    seed = seed_of(cfg, run);
    cache_dir = cache_dir_of(cfg, run);
  }

  void note_gamma(const GammaRecord& r) {
    if (!r.identity_ok) identity_failure = true;
  }

  CommandResult finish(const RunConfig& run, const char* command,
                       const std::vector<std::pair<std::string, std::size_t>>& files) {
    CommandResult result;
    std::size_t total = 0;
    for (const auto& [file, rows] : files) {
      const auto path = run.out_dir / file;
      write_meta_sidecar(path, command, cfg.dump(), rows, seed);
      result.outputs.push_back(path.string());
      total += rows;
      log << "wrote " << rows << " rows to " << path.string() << "\n";
    }
    if (identity_failure) log << "IDENTITY CHECK FAILURE: at least one record is inconsistent\n";
    result.rows = total;
    result.exit_code = identity_failure ? 2 : 0;
    result.log = log.str();
    return result;
  }
};

}  // namespace

CommandResult cmd_curve(const RunConfig& run) {
  CommandContext ctx(run);
  const ModelConfig mc = model_of(ctx.cfg);
  const int d = int_or(ctx.cfg, "d", 5);
  const double kappa = num_or(ctx.cfg, "kappa", 0.1);
  const int n_points = int_or(ctx.cfg, "epsilon_points", 40);
  const double eps_max = num_or(ctx.cfg, "epsilon_max", 0.05);
  const double min_factor = num_or(ctx.cfg, "epsilon_min_factor", 1.05);
  const bool gp_band = bool_or(ctx.cfg, "gp_band", true);
  const auto families = families_of(ctx.cfg);

  const SystemPtr system = prepare_system(mc, ctx.cache_dir);
  const PreparedInstance inst =
      admit_instance(system, d, ctx.seed, num_or(ctx.cfg, "epsilon_factor", 2.0));

  auto csv = CsvWriter(out_path(run, "curve.csv"), [&] {
    auto cols = with_instance_columns({"e0_offset"});
    for (const char* c : kGammaColumns) cols.emplace_back(c);
    return cols;
  }());

  if (!inst.admitted) {
    ctx.log << "instance " << inst.id << " not admitted: " << inst.reject_reason << "\n";
    csv.close();
    return ctx.finish(run, "curve", {{"curve.csv", csv.rows_written()}});
  }

  struct Task {
    BasisFamily family;
    double offset;
  };
  std::vector<Task> tasks;
  for (BasisFamily f : families) {
    if (f == BasisFamily::gaussian_power && gp_band) {
      for (double off : band_offsets()) tasks.push_back({f, off});
    } else {
      tasks.push_back({f, 0.0});
    }
  }

  const auto groups = parallel_map<std::vector<GammaRecord>>(
      static_cast<int>(tasks.size()), run.threads, [&](int ti) {
        const Task& t = tasks[static_cast<std::size_t>(ti)];
        const FamilySetup fs = family_setup(t.family, *system, d, t.offset);
        std::vector<GammaRecord> out;
        if (!fs.ok) {
          out.push_back(evaluate_gamma(fs, *system, eps_max, kappa));
          return out;
        }
        double eps_k = kInf;
        try {
          const KrylovMatricesHp km = build_matrices_hp(fs.basis, system->sd);
          eps_k = std::max(
              static_cast<double>(BoundFunction(km).eps_k(system->sd.ground_energy)), 0.0);
        } catch (const std::exception&) {
        }
        const double lo = std::max(eps_k * min_factor, 1e-13);
        if (!(lo < eps_max)) {
          GammaRecord r = evaluate_gamma(fs, *system, eps_max, kappa);
          r.error = r.error.empty() ? "accuracy window empty" : r.error;
          out.push_back(r);
          return out;
        }
        for (double eps : geometric_grid(lo, eps_max, n_points))
          out.push_back(evaluate_gamma(fs, *system, eps, kappa));
        return out;
      });

  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    for (const GammaRecord& r : groups[ti]) {
      ctx.note_gamma(r);
      write_instance_cell_block(csv, inst);
      csv.cell(tasks[ti].offset);
      write_gamma_cells(csv, r);
      csv.end_row();
    }
  }
  csv.close();
  return ctx.finish(run, "curve", {{"curve.csv", csv.rows_written()}});
}

CommandResult cmd_distribution(const RunConfig& run) {
  CommandContext ctx(run);
  CorpusOptions co;
  if (ctx.cfg.contains("models")) {
    co.heisenberg = co.hubbard = false;
    for (const json& item : ctx.cfg.at("models")) {
      const ModelKind m = model_kind_from_string(item.get<std::string>());
      (m == ModelKind::heisenberg ? co.heisenberg : co.hubbard) = true;
    }
  }
  bool graphs_enabled = true;
  if (ctx.cfg.contains("lattice_kinds")) {
    co.chains = co.ladders = graphs_enabled = false;
    for (const json& item : ctx.cfg.at("lattice_kinds")) {
      const LatticeKind k = lattice_kind_from_string(item.get<std::string>());
      if (k == LatticeKind::chain) co.chains = true;
      if (k == LatticeKind::ladder) co.ladders = true;
      if (k == LatticeKind::random_graph) graphs_enabled = true;
    }
  }
  co.random_graphs = graphs_enabled ? int_or(ctx.cfg, "random_graphs", 10) : 0;
  co.heisenberg_size = int_or(ctx.cfg, "heisenberg_size", 10);
  co.hubbard_size = int_or(ctx.cfg, "hubbard_size", 5);
  co.d_min = int_or(ctx.cfg, "d_min", 2);
  co.d_max = int_or(ctx.cfg, "d_max", 30);
  co.epsilon_factor = num_or(ctx.cfg, "epsilon_factor", 2.0);
  co.seed = ctx.seed;
  co.cache_dir = ctx.cache_dir;
  const double kappa = num_or(ctx.cfg, "kappa", 0.1);
  const auto families = families_of(ctx.cfg);

  const auto instances = build_corpus(co, run.threads);

  auto inst_csv = CsvWriter(out_path(run, "instances.csv"),
                            with_instance_columns({"p_g", "eps_k_p", "epsilon", "admitted",
                                                   "reject_reason"}));
  std::vector<const PreparedInstance*> admitted;
  for (const PreparedInstance& inst : instances) {
    write_instance_cell_block(inst_csv, inst);
    inst_csv.cell(inst.system->sd.p_g)
        .cell(inst.eps_k_p)
        .cell(inst.epsilon)
        .cell(inst.admitted)
        .cell(inst.reject_reason);
    inst_csv.end_row();
    if (inst.admitted) admitted.push_back(&inst);
  }
  inst_csv.close();

  const auto groups = parallel_map<std::vector<GammaRecord>>(
      static_cast<int>(admitted.size()), run.threads, [&](int i) {
        const PreparedInstance& inst = *admitted[static_cast<std::size_t>(i)];
        std::vector<GammaRecord> out;
        out.reserve(families.size());
        for (BasisFamily f : families) {
          const double off =
              f == BasisFamily::gaussian_power ? gp_band_offset(inst) : 0.0;
          const FamilySetup fs = family_setup(f, *inst.system, inst.d, off);
          out.push_back(evaluate_gamma(fs, *inst.system, inst.epsilon, kappa));
        }
        return out;
      });

  auto csv = CsvWriter(out_path(run, "distribution.csv"), [&] {
    auto cols = with_instance_columns({"p_g", "eps_k_p"});
    for (const char* c : kGammaColumns) cols.emplace_back(c);
    return cols;
  }());
  for (std::size_t i = 0; i < admitted.size(); ++i) {
    for (const GammaRecord& r : groups[i]) {
      ctx.note_gamma(r);
      write_instance_cell_block(csv, *admitted[i]);
      csv.cell(admitted[i]->system->sd.p_g).cell(admitted[i]->eps_k_p);
      write_gamma_cells(csv, r);
      csv.end_row();
    }
  }
  csv.close();
  ctx.log << "corpus: " << instances.size() << " instances, " << admitted.size()
          << " admitted\n";
  return ctx.finish(run, "distribution",
                    {{"instances.csv", inst_csv.rows_written()},
                     {"distribution.csv", csv.rows_written()}});
}

CommandResult cmd_cost(const RunConfig& run) {
  CommandContext ctx(run);
  const ModelConfig mc = model_of(ctx.cfg);
  const int d = int_or(ctx.cfg, "d", 5);
  const double kappa = num_or(ctx.cfg, "kappa", 0.1);
  const double gp_off = num_or(ctx.cfg, "gp_e0_offset", 0.0);
  const auto families = families_of(ctx.cfg);

  const SystemPtr system = prepare_system(mc, ctx.cache_dir);
  const PreparedInstance inst =
      admit_instance(system, d, ctx.seed, num_or(ctx.cfg, "epsilon_factor", 2.0));
  const double epsilon = epsilon_of(ctx.cfg, inst);

  struct Row {
    GammaRecord base;
    Protocol proto;
    CostReport report;
    SmallEtaEstimate small;
    bool small_ok = false;
    bool have_report = false;
    bool identity_ok = true;
  };

  const auto groups = parallel_map<std::vector<Row>>(
      static_cast<int>(families.size()), run.threads, [&](int fi) {
        const BasisFamily family = families[static_cast<std::size_t>(fi)];
        const FamilySetup fs = family_setup(family, *system, d, gp_off);
        std::vector<Row> rows;

        Row base_row;
        base_row.base = evaluate_gamma(fs, *system, epsilon, kappa);
        if (fs.ok) {
          try {
            const KrylovMatricesHp km = build_matrices_hp(fs.basis, system->sd);
            base_row.small = gamma_small_eta(km, system->sd.ground_energy, system->sd.p_g,
                                             system->h_norm, epsilon);
            base_row.small_ok = true;
          } catch (const std::exception&) {
          }
        }

        std::vector<Protocol> protos;
        protos.push_back(Protocol::for_structure(structure_of(family)));
        protos.push_back({ProtocolKind::im_chebyshev, false});
        protos.push_back({ProtocolKind::im_hoeffding, false});
        if (structure_of(family) == MatrixStructure::real_hankel)
          protos.push_back({ProtocolKind::cm_real_hankel, true});

        for (const Protocol& proto : protos) {
          Row row = base_row;
          row.proto = proto;
          if (row.base.solvable) {
            row.report = make_cost_report(proto, d, kappa, row.base.eta, epsilon,
                                          system->sd.p_g, system->h_norm);
            row.have_report = true;
            const double recomposed = row.report.factor1 * row.report.beta * row.report.gamma;
            const double eta_back = proto.eta_for(d, row.report.m_per_part, kappa);
            row.identity_ok = rel_diff(row.report.m_tot, recomposed) <= 1e-9 &&
                              rel_diff(eta_back, row.base.eta) <= 1e-9;
          }
          rows.push_back(row);
        }
        return rows;
      });

  auto csv = CsvWriter(
      out_path(run, "cost.csv"),
      with_instance_columns({"family", "protocol", "reduced_constants", "epsilon", "kappa",
                             "eps_k", "eta", "alpha", "beta", "gamma", "factor1", "m_per_part",
                             "m_tot", "entries_factor", "gamma_small", "u", "u_bound",
                             "norm_ratio", "solvable", "identity_ok", "error"}));
  for (const auto& rows : groups) {
    for (const Row& row : rows) {
      if (!row.identity_ok) ctx.identity_failure = true;
      write_instance_cell_block(csv, inst);
      csv.cell(family_tag(row.base.family))
          .cell(protocol_tag(row.proto.kind))
          .cell(row.proto.reduced_constants)
          .cell(row.base.epsilon)
          .cell(row.base.kappa)
          .cell(row.base.eps_k)
          .cell(row.base.eta);
      if (row.have_report) {
        csv.cell(row.report.alpha)
            .cell(row.report.beta)
            .cell(row.report.gamma)
            .cell(row.report.factor1)
            .cell(row.report.m_per_part)
            .cell(row.report.m_tot)
            .cell(row.proto.entries_factor(d));
      } else {
        csv.cell(row.proto.alpha(kappa))
            .cell(row.proto.beta(d))
            .cell(kInf)
            .cell(row.base.factor1)
            .cell(kInf)
            .cell(kInf)
            .cell(row.proto.entries_factor(d));
      }
      if (row.small_ok) {
        csv.cell(row.small.gamma).cell(row.small.u).cell(row.small.u_bound).cell(
            row.small.norm_ratio);
      } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        csv.cell(nan).cell(nan).cell(nan).cell(nan);
      }
      csv.cell(row.base.solvable).cell(row.identity_ok).cell(row.base.error);
      csv.end_row();
    }
  }
  csv.close();
  return ctx.finish(run, "cost", {{"cost.csv", csv.rows_written()}});
}

CommandResult cmd_noise(const RunConfig& run) {
  CommandContext ctx(run);
  const ModelConfig mc = model_of(ctx.cfg);
  const int d = int_or(ctx.cfg, "d", 5);
  const double kappa = num_or(ctx.cfg, "kappa", 0.1);
  const int trials = int_or(ctx.cfg, "trials", 100);
  const double m_floor = num_or(ctx.cfg, "m_floor", 1.0);
  const double m_ceiling = num_or(ctx.cfg, "m_ceiling", 1e12);
  const double gp_off = num_or(ctx.cfg, "gp_e0_offset", 0.0);
  const bool do_necessary = bool_or(ctx.cfg, "necessary", true);
  const bool do_sufficiency = bool_or(ctx.cfg, "sufficiency", true);
  const auto families = [&] {
    if (ctx.cfg.contains("families")) return families_of(ctx.cfg);
    return std::vector<BasisFamily>{BasisFamily::gaussian_power};
  }();
  std::vector<EtaRule> rules = {EtaRule::table2, EtaRule::threshold10};
  if (ctx.cfg.contains("rules")) {
    rules.clear();
    for (const json& item : ctx.cfg.at("rules")) {
      const std::string tag = item.get<std::string>();
      if (tag == eta_rule_tag(EtaRule::table2)) rules.push_back(EtaRule::table2);
      else if (tag == eta_rule_tag(EtaRule::threshold10)) rules.push_back(EtaRule::threshold10);
      else throw std::runtime_error("config: unknown eta rule '" + tag + "'");
    }
  }

  const SystemPtr system = prepare_system(mc, ctx.cache_dir);
  const PreparedInstance inst =
      admit_instance(system, d, ctx.seed, num_or(ctx.cfg, "epsilon_factor", 2.0));
  const double epsilon = epsilon_of(ctx.cfg, inst);
  const double e_g = system->sd.ground_energy;

  struct FamilyData {
    BasisFamily family;
    bool ok = false;
    std::string error;
    KrylovMatrices km;
    ProtocolKind kind = ProtocolKind::cm_real_hankel;
  };
  std::vector<FamilyData> data(families.size());
  for (std::size_t i = 0; i < families.size(); ++i) {
    FamilyData& fd = data[i];
    fd.family = families[i];
    const FamilySetup fs = family_setup(fd.family, *system, d,
                                        fd.family == BasisFamily::gaussian_power ? gp_off : 0.0);
    if (!fs.ok) {
      fd.error = fs.error;
      continue;
    }
    try {
      fd.km = build_matrices(fs.basis, system->sd);
      fd.kind = Protocol::for_structure(fd.km.structure).kind;
      fd.ok = true;
    } catch (const std::exception& e) {
      fd.error = e.what();
    }
  }

  struct NecTask {
    std::size_t family_index;
    EtaRule rule;
  };
  std::vector<NecTask> nec_tasks;
  if (do_necessary)
    for (std::size_t i = 0; i < data.size(); ++i)
      for (EtaRule rule : rules) nec_tasks.push_back({i, rule});

  const auto nec_results = parallel_map<NecessaryMResult>(
      static_cast<int>(nec_tasks.size()), run.threads, [&](int ti) {
        const NecTask& t = nec_tasks[static_cast<std::size_t>(ti)];
        const FamilyData& fd = data[t.family_index];
        if (!fd.ok) return NecessaryMResult{};
        Rng rng(derive_seed(ctx.seed, fnv1a64(inst.id + "-necessary-" +
                                              family_tag(fd.family) + "-" +
                                              eta_rule_tag(t.rule))));
        return necessary_measurement(fd.km, fd.kind, e_g, epsilon, kappa, trials, t.rule, rng,
                                     m_floor, m_ceiling);
      });

  const auto suff_results = parallel_map<SufficiencyResult>(
      do_sufficiency ? static_cast<int>(data.size()) : 0, run.threads, [&](int i) {
        const FamilyData& fd = data[static_cast<std::size_t>(i)];
        if (!fd.ok) return SufficiencyResult{};
        Rng rng(derive_seed(ctx.seed, fnv1a64(inst.id + "-sufficiency-" +
                                              family_tag(fd.family))));
        try {
          return sufficiency_check(fd.km, Protocol::for_structure(fd.km.structure), e_g, epsilon,
                                   kappa, trials, rng);
        } catch (const std::exception&) {
          return SufficiencyResult{};
        }
      });

  auto nec_csv = CsvWriter(out_path(run, "noise_necessary.csv"),
                           with_instance_columns({"family", "protocol", "rule", "epsilon",
                                                  "kappa", "trials", "m_necessary", "found",
                                                  "error"}));
  auto grid_csv = CsvWriter(out_path(run, "noise_grid.csv"),
                            with_instance_columns(
                                {"family", "rule", "m", "successes", "trials"}));
  for (std::size_t ti = 0; ti < nec_tasks.size(); ++ti) {
    const FamilyData& fd = data[nec_tasks[ti].family_index];
    const NecessaryMResult& res = nec_results[ti];
    write_instance_cell_block(nec_csv, inst);
    nec_csv.cell(family_tag(fd.family))
        .cell(protocol_tag(fd.kind))
        .cell(eta_rule_tag(nec_tasks[ti].rule))
        .cell(epsilon)
        .cell(kappa)
        .cell(trials)
        .cell(res.m_necessary)
        .cell(res.found)
        .cell(fd.error);
    nec_csv.end_row();
    for (const auto& [m, successes] : res.successes_per_m) {
      write_instance_cell_block(grid_csv, inst);
      grid_csv.cell(family_tag(fd.family))
          .cell(eta_rule_tag(nec_tasks[ti].rule))
          .cell(m)
          .cell(successes)
          .cell(trials);
      grid_csv.end_row();
    }
  }
  nec_csv.close();
  grid_csv.close();

  auto suff_csv = CsvWriter(out_path(run, "noise_sufficiency.csv"),
                            with_instance_columns({"family", "protocol", "epsilon", "kappa",
                                                   "eta", "m_per_part", "m_total", "trials",
                                                   "fraction_in_range", "fraction_variational",
                                                   "error"}));
  for (std::size_t i = 0; i < suff_results.size(); ++i) {
    const FamilyData& fd = data[i];
    const SufficiencyResult& res = suff_results[i];
    write_instance_cell_block(suff_csv, inst);
    suff_csv.cell(family_tag(fd.family))
        .cell(protocol_tag(fd.kind))
        .cell(epsilon)
        .cell(kappa)
        .cell(res.eta)
        .cell(res.m_per_part)
        .cell(res.m_total)
        .cell(res.trials)
        .cell(res.fraction_in_range)
        .cell(res.fraction_variational)
        .cell(fd.error);
    suff_csv.end_row();
  }
  suff_csv.close();

  return ctx.finish(run, "noise",
                    {{"noise_necessary.csv", nec_csv.rows_written()},
                     {"noise_grid.csv", grid_csv.rows_written()},
                     {"noise_sufficiency.csv", suff_csv.rows_written()}});
}

CommandResult cmd_mc(const RunConfig& run) {
  CommandContext ctx(run);
  json default_model = {{"model", "heisenberg"},
                        {"lattice", {{"kind", "chain"}, {"size", 4}}}};
  json model_cfg = ctx.cfg;
  if (!ctx.cfg.contains("model") && !ctx.cfg.contains("lattice")) {
    model_cfg.update(default_model);
  }
  const ModelConfig mc = model_of(model_cfg);
  const int k_max = int_or(ctx.cfg, "k_max", 3);
  const long long shots = static_cast<long long>(num_or(ctx.cfg, "shots", 1e4));
  const double e0_offset = num_or(ctx.cfg, "e0_offset", 0.0);

  const SystemPtr system = prepare_system(mc, ctx.cache_dir);
  const Eigen::VectorXcd reference = reference_state(mc, system->lattice);
  const double e_g = system->sd.ground_energy;
  const double e0 = e_g + e0_offset;

  double tau = num_or(ctx.cfg, "tau", 0.0);
  if (!(tau > 0.0))
    tau = select_tau(BasisFamily::gaussian_power, system->sd, std::max(k_max, 2),
                     power_diag_error(system->sd, std::max(k_max, 2)))
              .tau;
  const int n_steps = default_lcu_steps(system->h_tot, tau);

  std::vector<GpBasisSampler> samplers;
  samplers.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k)
    samplers.emplace_back(system->hamiltonian, k, e0, tau, n_steps);

  // Exact spectral values of the unrescaled entries.
  BasisSpec exact_spec;
  exact_spec.family = BasisFamily::gaussian_power;
  exact_spec.d = k_max;
  exact_spec.e0 = e0;
  exact_spec.tau = tau;
  exact_spec.h_tot = system->h_tot;
  auto exact_entry = [&](EntryKind kind, int k, int q) {
    std::complex<double> acc = 0.0;
    for (Eigen::Index m = 0; m < system->sd.energies.size(); ++m) {
      const double w = system->sd.weights(m);
      if (w == 0.0) continue;
      const double x = system->sd.energies(m) - e0;
      const std::complex<double> fk = eval_f(exact_spec, k, x);
      const std::complex<double> fq = eval_f(exact_spec, q, x);
      const double mid = kind == EntryKind::hamiltonian ? system->sd.energies(m) : 1.0;
      acc += w * std::conj(fk) * mid * fq;
    }
    return acc;
  };

  struct Task {
    EntryKind kind;
    int k, q;
  };
  std::vector<Task> tasks;
  std::vector<EntryKind> kinds = {EntryKind::hamiltonian, EntryKind::overlap};
  if (ctx.cfg.contains("kinds")) {
    kinds.clear();
    for (const json& item : ctx.cfg.at("kinds")) {
      const std::string tag = item.get<std::string>();
      if (tag == "H") kinds.push_back(EntryKind::hamiltonian);
      else if (tag == "S") kinds.push_back(EntryKind::overlap);
      else throw std::runtime_error("config: unknown entry kind '" + tag + "'");
    }
  }
  for (EntryKind kind : kinds)
    for (int k = 1; k <= k_max; ++k)
      for (int q = k; q <= k_max; ++q) tasks.push_back({kind, k, q});

  const auto estimates = parallel_map<EntryEstimate>(
      static_cast<int>(tasks.size()), run.threads, [&](int ti) {
        const Task& t = tasks[static_cast<std::size_t>(ti)];
        const char* kind_tag = t.kind == EntryKind::hamiltonian ? "H" : "S";
        Rng rng(derive_seed(ctx.seed, fnv1a64(system->name + "-mc-" + kind_tag + "-" +
                                              std::to_string(t.k) + "-" + std::to_string(t.q))));
        return estimate_entry(t.kind, system->hamiltonian,
                              samplers[static_cast<std::size_t>(t.k - 1)],
                              samplers[static_cast<std::size_t>(t.q - 1)], reference, shots, rng);
      });

  auto csv = CsvWriter(
      out_path(run, "mc_entries.csv"),
      {"system", "kind", "k", "q", "tau", "n_steps", "shots", "exact_re", "exact_im",
       "estimate_re", "estimate_im", "cost_factor", "c_k", "c_q", "mean_importance_k",
       "mean_importance_q", "per_shot_variance", "variance_cap", "std_error", "abs_error",
       "z_score", "variance_ok", "within_5se"});
  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    const Task& t = tasks[ti];
    const EntryEstimate& est = estimates[ti];
    const std::complex<double> exact = exact_entry(t.kind, t.k, t.q);
    const double cap = 2.0 * est.cost_factor * est.cost_factor;
    const double abs_err = std::abs(est.value - exact);
    const double z = est.std_error > 0.0 ? abs_err / est.std_error : kInf;
    const bool variance_ok = est.per_shot_variance <= cap * (1.0 + 1e-12);
    if (!variance_ok) ctx.identity_failure = true;
    csv.cell(system->name)
        .cell(t.kind == EntryKind::hamiltonian ? "H" : "S")
        .cell(t.k)
        .cell(t.q)
        .cell(tau)
        .cell(n_steps)
        .cell(static_cast<std::int64_t>(est.shots))
        .cell(exact)
        .cell(est.value)
        .cell(est.cost_factor)
        .cell(samplers[static_cast<std::size_t>(t.k - 1)].cost())
        .cell(samplers[static_cast<std::size_t>(t.q - 1)].cost())
        .cell(est.mean_importance_k)
        .cell(est.mean_importance_q)
        .cell(est.per_shot_variance)
        .cell(cap)
        .cell(est.std_error)
        .cell(abs_err)
        .cell(z)
        .cell(variance_ok)
        .cell(z <= 5.0);
    csv.end_row();
  }
  csv.close();
  return ctx.finish(run, "mc", {{"mc_entries.csv", csv.rows_written()}});
}

CommandResult cmd_projector(const RunConfig& run) {
  CommandContext ctx(run);
  const ModelConfig mc = model_of(ctx.cfg);
  const double tau_scale = num_or(ctx.cfg, "tau_scale", 1.5);
  std::vector<int> n_values = {0, 1, 2, 3, 4, 5};
  if (ctx.cfg.contains("n")) n_values = {int_or(ctx.cfg, "n", 5)};
  if (ctx.cfg.contains("n_values")) {
    n_values.clear();
    for (const json& item : ctx.cfg.at("n_values")) n_values.push_back(item.get<int>());
  }

  const SystemPtr system = prepare_system(mc, ctx.cache_dir);

  const auto reports = parallel_map<ProjectorReport>(
      static_cast<int>(n_values.size()), run.threads, [&](int i) {
        const int n = n_values[static_cast<std::size_t>(i)];
        double tau = num_or(ctx.cfg, "tau", 0.0);
        if (!(tau > 0.0)) {
          const double floor = std::sqrt(std::pow(std::max(n, 1), 3) / std::exp(1.0)) /
                               std::max(system->h_norm, 1e-12);
          tau = tau_scale * std::max(floor, 1.0);
        }
        const int n_steps = default_lcu_steps(system->h_tot, tau);
        return compose_projector(n, system->sd, tau, system->h_tot, n_steps);
      });

  auto csv = CsvWriter(
      out_path(run, "projector.csv"),
      {"system", "n", "tau", "z1", "t_n_z1", "h_norm", "omega_norm", "omega_norm_bound",
       "omega_ok", "b_ratio_max", "b_ok", "gamma", "gamma_bound", "gamma_ok", "recon_err",
       "identity_ok", "energy_error_composed", "energy_error_gaussian"});
  auto coeff_csv = CsvWriter(out_path(run, "projector_coefficients.csv"),
                             {"system", "n", "index", "b", "a"});
  for (const ProjectorReport& rep : reports) {
    double b_ratio_max = 0.0;
    for (std::size_t l = 0; l < rep.b.size(); ++l) {
      const double cap = std::pow(static_cast<double>(rep.n), static_cast<double>(l)) *
                         rep.t_n_z1;
      const double ratio = cap > 0.0 ? std::abs(rep.b[l]) / cap
                                     : (rep.b[l] == 0.0 ? 0.0 : kInf);
      b_ratio_max = std::max(b_ratio_max, ratio);
    }
    if (rep.n == 0) b_ratio_max = std::abs(rep.b[0]) / rep.t_n_z1;
    // Advertised coefficient/overhead caps: reported for inspection. They are
    // claims about the composition, not identities of this computation, and a
    // small-gap system genuinely exceeds the coefficient cap at every width.
    const bool omega_ok = rep.omega_norm <= rep.omega_norm_bound * (1.0 + 1e-9);
    const bool b_ok = b_ratio_max <= 1.0 + 1e-9;
    const bool gamma_ok = rep.gamma <= rep.gamma_bound * (1.0 + 1e-9);

    // Identity checks wired to the exit code: the residual block never exceeds
    // either normalisation bound, b_0 equals T_n(z1), the stored coefficients
    // reproduce T_n(Z) on the whole spectrum, and the reported overhead cap
    // matches its closed form.
    const bool omega_tight_ok = rep.omega_norm <= (1.0 / rep.t_n_z1) * (1.0 + 1e-9);
    const bool b0_ok = std::abs(rep.b[0] - rep.t_n_z1) <= 1e-9 * std::max(rep.t_n_z1, 1.0);
    long double recon_err = 0.0L;
    {
      const long double e_g = system->sd.ground_energy;
      const long double e2 = e_g + static_cast<long double>(system->sd.gap);
      const long double hn = rep.h_norm;
      for (Eigen::Index m = 0; m < system->sd.energies.size(); ++m) {
        const long double e = system->sd.energies(m);
        const long double x = (e - e_g) / hn;
        long double horner = 0.0L, scale = 0.0L, xpow = 1.0L;
        for (std::size_t l = rep.b.size(); l-- > 0;)
          horner = horner * x + static_cast<long double>(rep.b[l]);
        for (std::size_t l = 0; l < rep.b.size(); ++l, xpow *= std::abs(x))
          scale += std::abs(static_cast<long double>(rep.b[l])) * xpow;
        const long double target =
            chebyshev_t<long double>(rep.n, 1.0L - (e - e2) / hn);
        recon_err = std::max(recon_err, std::abs(horner - target) / (scale + 1.0L));
      }
    }
    const bool recon_ok = recon_err <= 1e-9L;
    const double nl = rep.n;
    const double gamma_bound_ref =
        4.0 / (1.0 - nl * nl * nl / (std::exp(1.0) * rep.h_norm * rep.h_norm * rep.tau * rep.tau));
    const bool gbound_ok = rel_diff(rep.gamma_bound, gamma_bound_ref) <= 1e-9;
    const bool identity_ok = omega_ok && omega_tight_ok && b0_ok && recon_ok && gbound_ok;
    if (!identity_ok) ctx.identity_failure = true;
    if (!b_ok)
      ctx.log << "projector: n=" << rep.n << " exceeds the advertised coefficient cap (max ratio "
              << b_ratio_max << "); reported in projector.csv\n";
    if (!gamma_ok)
      ctx.log << "projector: n=" << rep.n << " exceeds the advertised overhead cap (" << rep.gamma
              << " > " << rep.gamma_bound << "); reported in projector.csv\n";
    csv.cell(system->name)
        .cell(rep.n)
        .cell(rep.tau)
        .cell(rep.z1)
        .cell(rep.t_n_z1)
        .cell(rep.h_norm)
        .cell(rep.omega_norm)
        .cell(rep.omega_norm_bound)
        .cell(omega_ok)
        .cell(b_ratio_max)
        .cell(b_ok)
        .cell(rep.gamma)
        .cell(rep.gamma_bound)
        .cell(gamma_ok)
        .cell(static_cast<double>(recon_err))
        .cell(identity_ok)
        .cell(rep.energy_error_composed)
        .cell(rep.energy_error_gaussian);
    csv.end_row();
    for (std::size_t l = 0; l < rep.a.size(); ++l) {
      coeff_csv.cell(system->name)
          .cell(rep.n)
          .cell(static_cast<std::int64_t>(l))
          .cell(l < rep.b.size() ? rep.b[l] : 0.0)
          .cell(rep.a[l]);
      coeff_csv.end_row();
    }
  }
  csv.close();
  coeff_csv.close();
  return ctx.finish(run, "projector",
                    {{"projector.csv", csv.rows_written()},
                     {"projector_coefficients.csv", coeff_csv.rows_written()}});
}

CommandResult cmd_scaling(const RunConfig& run) {
  CommandContext ctx(run);
  const ModelConfig mc = model_of(ctx.cfg);
  const double kappa = num_or(ctx.cfg, "kappa", 0.1);
  const int points = int_or(ctx.cfg, "epsilon_points", 25);
  const double lo_factor = num_or(ctx.cfg, "window_lo_factor", 30.0);
  const double hi = num_or(ctx.cfg, "window_hi", 0.05);
  const int d_min = int_or(ctx.cfg, "d_min", 2);
  const int d_max = int_or(ctx.cfg, "d_max", 30);
  const double eps_factor = num_or(ctx.cfg, "epsilon_factor", 2.0);
  const auto families = families_of(ctx.cfg);

  const SystemPtr system = prepare_system(mc, ctx.cache_dir);

  const auto curves = parallel_map<ScalingCurve>(
      static_cast<int>(families.size()), run.threads, [&](int i) {
        return scaling_curve(families[static_cast<std::size_t>(i)], system, ctx.seed, d_min,
                             d_max, lo_factor, hi, points, kappa, eps_factor);
      });

  auto csv = CsvWriter(out_path(run, "scaling.csv"), [&] {
    std::vector<std::string> cols = {"system", "d"};
    for (const char* c : kGammaColumns) cols.emplace_back(c);
    return cols;
  }());
  auto fit_csv = CsvWriter(out_path(run, "scaling_fit.csv"),
                           {"system", "family", "d", "eps_k", "points", "slope", "found",
                            "note"});
  for (const ScalingCurve& curve : curves) {
    for (const GammaRecord& r : curve.records) {
      ctx.note_gamma(r);
      csv.cell(system->name).cell(curve.d);
      write_gamma_cells(csv, r);
      csv.end_row();
    }
    fit_csv.cell(system->name)
        .cell(family_tag(curve.family))
        .cell(curve.d)
        .cell(curve.eps_k)
        .cell(static_cast<std::int64_t>(curve.records.size()))
        .cell(curve.found ? curve.slope : std::numeric_limits<double>::quiet_NaN())
        .cell(curve.found)
        .cell(curve.note);
    fit_csv.end_row();
  }
  csv.close();
  fit_csv.close();
  return ctx.finish(run, "scaling",
                    {{"scaling.csv", csv.rows_written()},
                     {"scaling_fit.csv", fit_csv.rows_written()}});
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"curve", "distribution", "cost",     "noise",
                                                 "mc",    "projector",    "scaling"};
  return names;
}

CommandResult run_command(const std::string& name, const RunConfig& run) {
  if (name == "curve") return cmd_curve(run);
  if (name == "distribution") return cmd_distribution(run);
  if (name == "cost") return cmd_cost(run);
  if (name == "noise") return cmd_noise(run);
  if (name == "mc") return cmd_mc(run);
  if (name == "projector") return cmd_projector(run);
  if (name == "scaling") return cmd_scaling(run);
  throw std::runtime_error("unknown command '" + name + "'");
}

}  // namespace qksd
