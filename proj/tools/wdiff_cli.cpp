#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wdiff/config.hpp"
#include "wdiff/corpus.hpp"
#include "wdiff/dirichlet_form.hpp"
#include "wdiff/dynamics.hpp"
#include "wdiff/errors.hpp"
#include "wdiff/measure.hpp"
#include "wdiff/verify.hpp"

namespace fs = std::filesystem;
using namespace wdiff;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::string out_dir = ".";
};

/// Every key any command understands; anything else is reported as a typo.
const std::initializer_list<std::string_view> kKnownKeys = {
    "model.N",          "model.beta",        "model.seed",        "dynamics.scheme",
    "dynamics.kernel",  "dynamics.epsilon",  "dynamics.dt",       "dynamics.delta_reg",
    "dynamics.horizon", "dynamics.record_every", "dynamics.replicas", "dynamics.start",
    "dynamics.max_rejection_tries", "sample.count", "sweep.quantity", "sweep.N_values",
    "sweep.samples",    "sweep.quantile",    "sweep.phi",         "sweep.functional"};

Config load_config(const std::string& path, const Globals& g) {
  auto cfg = Config::load(path);
  cfg.require_known(kKnownKeys);
  if (g.seed) cfg.set("model.seed", std::to_string(*g.seed));
  return cfg;
}

fs::path output_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::string beta_suffix(const std::vector<double>& betas, std::size_t b) {
  return betas.size() > 1 ? "_beta" + format_double(betas[b]) : "";
}

int cmd_sample(const std::string& config_path, const Globals& g) {
  const auto cfg = load_config(config_path, g);
  const auto count = cfg.get_uint("sample.count");
  const auto betas = cfg.get_doubles("model.beta");
  for (std::size_t b = 0; b < betas.size(); ++b) {
    const auto p = sim_params_from(cfg, b);
    const auto path = output_path(g, "configs" + beta_suffix(betas, b) + ".csv");
    auto out = open_out(path);
    out << "# N=" << p.N << " beta=" << format_double(p.beta) << " seed=" << p.seed << " count=" << count
        << " version=" << version_string() << '\n';
    for (std::size_t i = 1; i < p.N; ++i) out << (i > 1 ? "," : "") << 'x' << i;
    out << '\n';
    RandomSource rng(p.seed, 0);
    for (std::uint64_t k = 0; k < count; ++k) out << format_config(sample_config(p, rng)) << '\n';
    std::cout << "wrote " << path.string() << '\n';
  }
  return kOk;
}

StartMode parse_start(const std::string& s) {
  if (s == "stationary") return StartMode::Stationary;
  if (s == "equidistant") return StartMode::Equidistant;
  throw ConfigError("dynamics.start", "expected stationary or equidistant, got '" + s + "'");
}

nlohmann::json params_json(const SimParams& p) {
  return {{"N", p.N},
          {"beta", p.beta},
          {"epsilon", p.epsilon},
          {"dt", p.dt},
          {"delta_reg", p.delta_reg},
          {"horizon", p.horizon},
          {"seed", p.seed},
          {"scheme", to_string(p.scheme)},
          {"kernel", p.kernel == BallWalkKernel::Metropolis ? "Metropolis" : "ExactRejection"}};
}

int cmd_simulate(const std::string& config_path, const Globals& g) {
  const auto cfg = load_config(config_path, g);
  const auto betas = cfg.get_doubles("model.beta");
  const auto replicas = cfg.get_uint("dynamics.replicas", 1);
  const auto start_name = cfg.get_string("dynamics.start", "stationary");
  const auto start = parse_start(start_name);
  nlohmann::json manifest = {{"version", version_string()}, {"config", config_path}, {"runs", nlohmann::json::array()}};
  for (std::size_t b = 0; b < betas.size(); ++b) {
    const auto p = sim_params_from(cfg, b);
    p.validate();
    const double record_every = cfg.get_double("dynamics.record_every", p.horizon > 0.0 ? p.horizon / 100.0 : 1.0);
    if (!(record_every > 0.0)) throw ConfigError("dynamics.record_every", "must be > 0");
    std::vector<SimulationPath> paths;
    try {
      paths = simulate_replicas(p, record_every, replicas, start, g.jobs);
    } catch (const StepSizeError& e) {
      std::cerr << "error: beta=" << format_double(p.beta) << ": " << e.what() << '\n';
      return kFailed;
    }
    nlohmann::json run = {{"params", params_json(p)},
                          {"record_every", record_every},
                          {"replicas", replicas},
                          {"start", start_name},
                          {"files", nlohmann::json::array()}};
    for (std::size_t r = 0; r < paths.size(); ++r) {
      const std::string name = "path" + beta_suffix(betas, b) + "_r" + std::to_string(r) + ".csv";
      auto out = open_out(output_path(g, name));
      write_path_csv(out, paths[r]);
      run["files"].push_back(name);
    }
    manifest["runs"].push_back(std::move(run));
  }
  const auto mpath = output_path(g, "manifest.json");
  open_out(mpath) << manifest.dump(2) << '\n';
  std::cout << "wrote " << mpath.string() << '\n';
  return kOk;
}

struct SweepLine {
  std::string N;
  std::string quantity;
  double estimate;
  double std_error;
};

int cmd_sweep(const std::string& config_path, const Globals& g) {
  const auto cfg = load_config(config_path, g);
  const auto quantity = cfg.get_string("sweep.quantity");
  // Sweeps range over N themselves; only beta and the seed come from [model].
  SimParams p;
  const auto betas = cfg.get_doubles("model.beta");
  if (betas.size() != 1 || !(betas[0] > 0.0)) throw ConfigError("model.beta", "a sweep takes one positive beta");
  p.beta = betas[0];
  p.seed = cfg.get_uint("model.seed", 0);
  std::vector<std::size_t> Ns;
  for (const auto n : cfg.get_uints("sweep.N_values")) {
    if (n < 2) throw ConfigError("sweep.N_values", "every N must be >= 2");
    Ns.push_back(static_cast<std::size_t>(n));
  }
  const auto field = [&](const std::string& key, auto&& parse, const std::string& fallback) {
    try {
      return parse(cfg.get_string(key, fallback));
    } catch (const InvalidArgument& e) {
      throw ConfigError(key, e.what());
    }
  };
  const auto phi = field("sweep.phi", [](const std::string& s) { return parse_test_function(s); }, "sin:1");
  const auto w = field("sweep.functional", [](const std::string& s) { return parse_cylinder(s); }, "1");

  std::vector<SweepLine> lines;
  const auto emit_rows = [&](const std::vector<SweepRow>& rows) {
    for (const auto& r : rows) {
      lines.push_back({std::to_string(r.N), quantity, r.discrete, 0.0});
      lines.push_back({std::to_string(r.N), quantity + "_error", r.error(), 0.0});
    }
    if (!rows.empty()) lines.push_back({"inf", quantity, rows.front().continuum, 0.0});
  };
  std::string detail;
  if (quantity == "projection") {
    const auto samples = cfg.get_uint("sweep.samples", 100'000);
    try {
      const auto sw = projection_sweep(w, Ns, p.beta, samples, RandomSource(p.seed, 0), McOptions{g.jobs});
      for (std::size_t k = 0; k < Ns.size(); ++k) {
        lines.push_back({std::to_string(Ns[k]), quantity, sw.norms[k].value, sw.norms[k].std_error});
      }
    } catch (const InvalidArgument& e) {
      throw ConfigError("sweep.N_values", e.what());
    }
    detail = " functional=" + w.name() + " samples=" + std::to_string(samples);
  } else {
    const auto gq = field("sweep.quantile", [](const std::string& s) { return parse_quantile(s); }, "");
    const VectorFieldSpec zeta{w, phi};
    if (quantity != "vbeta") {
      try {
        zeta.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError("sweep.phi", e.what());
      }
    }
    if (quantity == "vbeta") {
      emit_rows(v_beta_sweep(gq, phi, p.beta, Ns));
    } else if (quantity == "divergence") {
      emit_rows(divergence_sweep(gq, zeta, p.beta, Ns));
    } else if (quantity == "pairing") {
      emit_rows(pairing_sweep(gq, w, phi, Ns));
    } else if (quantity == "field_norm") {
      emit_rows(field_norm_sweep(gq, zeta, Ns));
    } else {
      throw ConfigError("sweep.quantity",
                        "expected vbeta, divergence, pairing, field_norm or projection, got '" + quantity + "'");
    }
    detail = " quantile=" + format_quantile(gq) + " phi=" + phi.name + " functional=" + w.name();
  }
  const auto path = output_path(g, "sweep_" + quantity + ".csv");
  auto out = open_out(path);
  out << "# quantity=" << quantity << " beta=" << format_double(p.beta) << " seed=" << p.seed << detail
      << " version=" << version_string() << '\n';
  out << "N,quantity,estimate,stderr\n";
  for (const auto& l : lines) {
    out << l.N << ',' << l.quantity << ',' << format_double(l.estimate) << ',' << format_double(l.std_error) << '\n';
  }
  std::cout << "wrote " << path.string() << '\n';
  return kOk;
}

int cmd_verify(const std::string& suite, double tamper, bool quick, const std::string& corpus, const Globals& g) {
  if (!is_suite(suite)) {
    std::cerr << "error: unknown suite '" << suite << "' (expected one of:";
    for (const auto& s : suite_names()) std::cerr << ' ' << s;
    std::cerr << ")\n";
    return kUsage;
  }
  VerifyOptions opt;
  if (g.seed) opt.seed = *g.seed;
  opt.jobs = g.jobs;
  opt.tamper_beta = tamper;
  opt.quick = quick;
  opt.corpus_dir = corpus;
  const auto results = run_suite(suite, opt);
  std::ostringstream comment;
  comment << "suite=" << suite << " seed=" << opt.seed << " tamper_beta=" << format_double(tamper)
          << " quick=" << (quick ? 1 : 0) << " version=" << version_string();
  {
    auto out = open_out(output_path(g, "verify_" + suite + ".csv"));
    write_report_csv(out, results, comment.str());
  }
  // Timings vary between runs, so they go to stdout only.
  std::ostringstream summary;
  write_summary(summary, results);
  std::cout << summary.str();
  {
    auto out = open_out(output_path(g, "verify_" + suite + "_summary.txt"));
    out << "# " << comment.str() << '\n';
    for (const auto& r : results) out << (r.passed ? "PASS " : "FAIL ") << r.id << ' ' << r.name << ": " << r.summary << '\n';
  }
  bool all = true;
  for (const auto& r : results) all = all && r.passed;
  if (!all) {
    std::cerr << "failed criteria:";
    for (const auto& r : results) {
      if (!r.passed) std::cerr << ' ' << r.id << " (" << r.name << ')';
    }
    std::cerr << '\n';
  }
  return all ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein diffusion: samplers, dynamics and verification suites"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the seed (model.seed, or the verify default)");
  app.add_option("--jobs", g.jobs, "Worker threads for replicas and Monte Carlo blocks")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for output files");

  std::string config_path, suite, corpus;
  double tamper = 1.0;
  bool quick = false;
  auto* sample = app.add_subcommand("sample", "Draw configurations from q_N");
  sample->add_option("config", config_path, "Config file")->required();
  auto* simulate = app.add_subcommand("simulate", "Simulate replica paths");
  simulate->add_option("config", config_path, "Config file")->required();
  auto* sweep = app.add_subcommand("sweep", "Discrete-to-continuum convergence sweep");
  sweep->add_option("config", config_path, "Config file")->required();
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("suite", suite, "stationarity|generator|ibp|divergence|projection|martingale|all")->required();
  verify->add_option("--tamper-beta", tamper, "Scale beta in the reference laws (negative control)")
      ->check(CLI::PositiveNumber);
  verify->add_flag("--quick", quick, "Reduced sample sizes");
  verify->add_option("--corpus", corpus, "Corpus directory (default: shipped data)");
  for (auto* s : {sample, simulate, sweep, verify}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*sample) return cmd_sample(config_path, g);
    if (*simulate) return cmd_simulate(config_path, g);
    if (*sweep) return cmd_sweep(config_path, g);
    return cmd_verify(suite, tamper, quick, corpus, g);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
}
