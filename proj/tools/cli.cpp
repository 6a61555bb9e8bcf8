#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "depcen/cg.hpp"
#include "depcen/datagen.hpp"
#include "depcen/error.hpp"
#include "depcen/estimator.hpp"
#include "depcen/inference.hpp"
#include "depcen/io.hpp"
#include "depcen/mle.hpp"
#include "depcen/parallel.hpp"
#include "depcen/report.hpp"
#include "depcen/rng.hpp"

namespace depcen::cli {

namespace {

// Thrown for bad input that should exit with the usage code even when a
// library error class would otherwise map to an estimation failure.
struct UsageError : ConfigError {
  using ConfigError::ConfigError;
};

std::string shortest(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset load_dataset(const std::string& path) {
  std::istringstream in(read_text(path));
  Dataset d = read_dataset_csv(in);
  if (d.records.empty()) throw UsageError("'" + path + "' holds no records");
  return d;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_file_atomic(path, content);
  }
}

// Estimator knobs shared by estimate, bootstrap and study grids.
struct EstimatorFlags {
  std::size_t bag = EstimatorOptions{}.bag_replicates;
  int budget = 0;
  std::size_t weight_reps = EstimatorOptions{}.weight_replicates;
  std::size_t inner_weight_reps = EstimatorOptions{}.inner_weight_replicates;
  std::size_t region_fits = RegionOptions{}.fits_per_tau;
  double region_spread = RegionOptions{}.spread_sds;
  std::string engine = "auto";
  bool negative = false;

  EstimatorOptions options(std::uint64_t seed, unsigned threads) const {
    EstimatorOptions o;
    o.bag_replicates = bag;
    o.budget = budget;
    o.weight_replicates = weight_reps;
    o.inner_weight_replicates = inner_weight_reps;
    o.region.fits_per_tau = region_fits;
    o.region.spread_sds = region_spread;
    if (engine != "auto") o.engine = parse_engine_kind(engine);
    o.negative_dependence = negative;
    o.seed = seed;
    o.threads = threads;
    o.region.threads = threads;
    return o;
  }
};

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& f) {
  cmd->add_option("--bag", f.bag, "Bagging replicates")->capture_default_str();
  cmd->add_option("--budget", f.budget, "Annealing evaluations per replicate and range (0: engine default)")
      ->capture_default_str();
  cmd->add_option("--weight-reps", f.weight_reps, "Bootstrap size for the weight matrix")->capture_default_str();
  cmd->add_option("--inner-weight-reps", f.inner_weight_reps, "Weight-matrix bootstrap size inside bagging")
      ->capture_default_str();
  cmd->add_option("--region-fits", f.region_fits, "Bootstrap refits per representative tau for the region")
      ->capture_default_str();
  cmd->add_option("--region-spread", f.region_spread, "Region widening in bootstrap SDs")->capture_default_str();
  cmd->add_option("--engine", f.engine, "Moment engine: auto, closed, quadrature, mc")->capture_default_str();
  cmd->add_flag("--negative", f.negative, "Estimate a negative tau");
}

// Grid files use the flag names with underscores.
EstimatorFlags flags_from_json(const Json& j, EstimatorFlags f) {
  static const std::set<std::string> known{"bag", "budget", "weight_reps", "inner_weight_reps",
                                           "region_fits", "region_spread", "engine", "negative"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw UsageError("grid: unknown estimator option '" + key + "'");
  }
  f.bag = j.value("bag", f.bag);
  f.budget = j.value("budget", f.budget);
  f.weight_reps = j.value("weight_reps", f.weight_reps);
  f.inner_weight_reps = j.value("inner_weight_reps", f.inner_weight_reps);
  f.region_fits = j.value("region_fits", f.region_fits);
  f.region_spread = j.value("region_spread", f.region_spread);
  f.engine = j.value("engine", f.engine);
  f.negative = j.value("negative", f.negative);
  return f;
}

struct ModelFlags {
  std::string copula = "normal";
  std::string marg_t = "lognormal";
  std::string marg_c = "lognormal";
};

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
  cmd->add_option("--copula", m.copula, "normal, clayton, gumbel, frank or independence")->capture_default_str();
  cmd->add_option("--marg-t", m.marg_t, "Family of T: exp, weibull or lognormal")->capture_default_str();
  cmd->add_option("--marg-c", m.marg_c, "Family of C")->capture_default_str();
}

// Accepts a bare family name or a full spec such as weibull:0.63,0.06.
MarginalFamily family_of(const std::string& text) {
  const auto colon = text.find(':');
  return parse_marginal_family(colon == std::string::npos ? text : text.substr(0, colon));
}

struct Common {
  std::uint64_t seed = 1;
  unsigned threads = 0;

  unsigned worker_count() const { return threads == 0 ? default_thread_count() : threads; }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads (0: DEPCEN_THREADS or all cores)")
      ->capture_default_str();
}

// ---- simulate ----

struct SimulateArgs {
  Common common;
  std::string copula = "normal";
  double tau = 0.5;
  std::string marg_t;
  std::string marg_c;
  std::size_t n = 0;
  std::string out;
  bool rct = false;
  RctConfig rct_cfg;
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  GenConfig g;
  const CopulaFamily family = parse_copula_family(a.copula);
  try {
    g.copula = copula_at(family, a.tau);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  g.marginal_t = parse_marginal_spec(a.marg_t);
  g.marginal_c = parse_marginal_spec(a.marg_c);
  g.n = a.n;
  g.seed = a.common.seed;
  if (a.rct) g.rct = a.rct_cfg;
  g.validate();

  std::ostringstream csv;
  double events = 0.0;
  if (g.rct) {
    const auto recs = sample_rct(g);
    for (const auto& r : recs) events += r.delta;
    write_dataset_csv(csv, recs);
  } else {
    const auto recs = censor(sample_pairs(g));
    for (const auto& r : recs) events += r.delta;
    write_dataset_csv(csv, recs);
  }

  Json side;
  side["copula"] = std::string(to_string(family));
  side["tau"] = a.tau;
  side["copula_param"] = g.copula.param();
  side["marginal_t"] = marginal_json(g.marginal_t);
  side["marginal_c"] = marginal_json(g.marginal_c);
  side["n"] = g.n;
  side["seed"] = g.seed;
  if (g.rct) {
    side["rct"] = Json{{"beta_t", g.rct->beta_t}, {"beta_c", g.rct->beta_c}, {"trt_prob", g.rct->trt_prob}};
  } else {
    side["rct"] = nullptr;
  }
  side["event_fraction"] = events / static_cast<double>(g.n);

  std::filesystem::path sidecar(a.out);
  sidecar.replace_extension(".json");
  if (sidecar == std::filesystem::path(a.out)) sidecar += ".json";
  write_file_atomic(a.out, csv.str());
  write_file_atomic(sidecar.string(), dump(side));
  out << a.out << '\n' << sidecar.string() << '\n';
}

// ---- estimate ----

struct EstimateArgs {
  Common common;
  ModelFlags model;
  EstimatorFlags est;
  std::string data;
  std::string method = "gmm";
  std::string out;
};

ModelSpec model_of(const ModelFlags& m, bool negative) {
  return {parse_copula_family(m.copula), family_of(m.marg_t), family_of(m.marg_c), negative};
}

void check_mle_model(const ModelSpec& model) {
  if (model.rotated && model.copula != CopulaFamily::Normal) {
    throw UsageError("--method mle with --negative needs the normal copula");
  }
}

void cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const Method method = parse_method(a.method);
  const ModelSpec model = model_of(a.model, a.est.negative);
  const auto data = load_dataset(a.data).records;
  Json report;
  if (method == Method::Mle) {
    check_mle_model(model);
    const MleFit fit = mle_fit(data, model.copula, model.family_t, model.family_c);
    report = mle_json(fit, model, a.common.seed);
  } else {
    const EstimatorOptions o = a.est.options(a.common.seed, a.common.worker_count());
    const EstimateReport r = estimate(data, model.copula, model.family_t, model.family_c, o);
    report = estimate_json(r, o);
  }
  emit(a.out, dump(report), out);
}

// ---- bootstrap ----

struct BootstrapArgs {
  EstimateArgs base;
  std::size_t B = 200;
  double alpha = 0.05;
  std::optional<double> truth;
  bool reuse_region = false;
};

void cmd_bootstrap(const BootstrapArgs& a, std::ostream& out) {
  const EstimateArgs& b = a.base;
  const Method method = parse_method(b.method);
  const ModelSpec model = model_of(b.model, b.est.negative);
  const auto data = canonical_order(load_dataset(b.data).records);
  const unsigned threads = b.common.worker_count();

  TauEstimator point;
  TauEstimator replicate;
  if (method == Method::Mle) {
    check_mle_model(model);
    point = mle_estimator(model.copula, model.family_t, model.family_c);
    replicate = point;
  } else {
    EstimatorOptions o = b.est.options(b.common.seed, 1);
    if (a.reuse_region) {
      RegionOptions ro = o.region;
      ro.seed = Rng(b.common.seed).split(0).split(1).key();
      ro.threads = threads;
      ro.negative_dependence = o.negative_dependence;
      o.region_override = feasible_region(data, model.copula, model.family_t, model.family_c, ro);
    }
    point = gmm_estimator(model.copula, model.family_t, model.family_c, o);
    replicate = point;
  }
  BootstrapOptions bo;
  bo.B = a.B;
  bo.alpha = a.alpha;
  bo.seed = b.common.seed;
  bo.threads = threads;
  bo.truth = a.truth;
  const BootstrapSummary s = bootstrap_tau(data, point, replicate, bo);
  Json j;
  j["method"] = std::string(to_string(method));
  j["model"] = Json{{"copula", std::string(to_string(model.copula))},
                    {"marginal_t", std::string(to_string(model.family_t))},
                    {"marginal_c", std::string(to_string(model.family_c))},
                    {"negative_dependence", model.rotated}};
  j["seed"] = b.common.seed;
  j["reuse_region"] = a.reuse_region;
  j["bootstrap"] = bootstrap_json(s);
  if (method == Method::Gmm) j["options"] = options_json(b.est.options(b.common.seed, 1));
  emit(b.out, dump(j), out);
}

// ---- study ----

struct StudyArgs {
  Common common;
  std::string grid;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> inner_B;
  std::string out_csv;
  std::string out_json;
  std::string layout = "auto";
};

StudyCell cell_from_json(const Json& c, std::size_t index) {
  static const std::set<std::string> known{"name", "copula", "tau", "marginal_t", "marginal_c",
                                           "n", "method", "rct"};
  for (const auto& [key, value] : c.items()) {
    if (!known.count(key)) throw UsageError("grid: unknown cell field '" + key + "'");
  }
  StudyCell cell;
  cell.name = c.value("name", "cell" + std::to_string(index + 1));
  cell.copula = parse_copula_family(c.at("copula").get<std::string>());
  cell.tau = c.at("tau").get<double>();
  cell.marginal_t = parse_marginal_spec(c.at("marginal_t").get<std::string>());
  cell.marginal_c = parse_marginal_spec(c.at("marginal_c").get<std::string>());
  cell.n = c.at("n").get<std::size_t>();
  cell.method = parse_method(c.value("method", std::string("gmm")));
  if (c.contains("rct") && !c["rct"].is_null()) {
    RctConfig r;
    r.beta_t = c["rct"].value("beta_t", 0.0);
    r.beta_c = c["rct"].value("beta_c", 0.0);
    r.trt_prob = c["rct"].value("trt_prob", 0.5);
    cell.rct = r;
  }
  try {
    cell_generator(cell, 0).validate();
    copula_at(cell.copula, cell.tau);
  } catch (const Error& e) {
    throw UsageError("grid cell '" + cell.name + "': " + e.what());
  }
  return cell;
}

void cmd_study(const StudyArgs& a, std::ostream& out) {
  Json grid;
  try {
    grid = Json::parse(read_text(a.grid));
  } catch (const Json::parse_error& e) {
    throw UsageError("grid '" + a.grid + "': " + e.what());
  }
  StudyConfig cfg;
  try {
    cfg.runs = a.runs.value_or(grid.value("runs", cfg.runs));
    cfg.inner_B = a.inner_B.value_or(grid.value("inner_B", cfg.inner_B));
    cfg.alpha = grid.value("alpha", cfg.alpha);
    cfg.seed = grid.value("seed", a.common.seed);
    cfg.reuse_region = grid.value("reuse_region", cfg.reuse_region);
    const EstimatorFlags base = flags_from_json(grid.value("options", Json::object()), EstimatorFlags{});
    const EstimatorFlags boot = flags_from_json(grid.value("bootstrap_options", Json::object()), base);
    cfg.point_options = base.options(cfg.seed, 1);
    cfg.bootstrap_options = boot.options(cfg.seed, 1);
    const Json& cells = grid.at("cells");
    for (std::size_t i = 0; i < cells.size(); ++i) cfg.cells.push_back(cell_from_json(cells[i], i));
  } catch (const Json::exception& e) {
    throw UsageError("grid '" + a.grid + "': " + e.what());
  }
  if (cfg.cells.empty()) throw UsageError("grid '" + a.grid + "' has no cells");
  cfg.threads = a.common.worker_count();

  const auto summaries = monte_carlo_study(cfg);
  std::ostringstream csv;
  const bool single = a.layout == "single" || (a.layout == "auto" && cfg.runs == 1);
  if (a.layout != "auto" && a.layout != "single" && a.layout != "summary") {
    throw UsageError("--layout must be auto, single or summary");
  }
  if (single) {
    write_single_dataset_csv(csv, summaries);
  } else {
    write_study_csv(csv, summaries);
  }
  emit(a.out_csv, csv.str(), out);
  if (!a.out_json.empty()) write_file_atomic(a.out_json, dump(study_json(summaries, cfg)));
  for (const auto& s : summaries) {
    if (s.failed) throw InferenceError("study cell '" + s.cell.name + "' failed: more than 20% of runs failed");
  }
}

// ---- curves ----

struct CurvesArgs {
  Common common;
  std::string data;
  std::string copula = "clayton";
  std::vector<double> taus{0.0};
  std::string target = "t";
  std::string prefix = "curve";
  bool clayton_proxy = false;
};

void cmd_curves(const CurvesArgs& a, std::ostream& out) {
  const CopulaFamily family = parse_copula_family(a.copula);
  if (family == CopulaFamily::Normal && !a.clayton_proxy) {
    throw UsageError("CG curves need an Archimedean copula; pass --clayton-proxy to use Clayton for normal");
  }
  std::vector<Target> targets;
  if (a.target == "t" || a.target == "both") targets.push_back(Target::T);
  if (a.target == "c" || a.target == "both") targets.push_back(Target::C);
  if (targets.empty()) throw UsageError("--target must be t, c or both");
  const auto data = load_dataset(a.data).records;

  for (double tau : a.taus) {
    CopulaSpec cop;
    try {
      cop = cg_copula_for(family, std::abs(tau), tau < 0.0);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
    for (Target t : targets) {
      const SurvivalCurve curve = cg_survival(data, cop, t);
      std::ostringstream csv;
      write_curve_csv(csv, curve.steps);
      const std::string path = a.prefix + (t == Target::T ? "_T" : "_C") + "_tau" + shortest(tau) + ".csv";
      write_file_atomic(path, csv.str());
      out << path << '\n';
    }
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kendall's tau between event time and dependent censoring time"};
  app.name("depcen");
  app.set_config("--config", "", "TOML or INI file with flag values (sections per subcommand)");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a dependently censored dataset");
  add_common(simulate, sim.common);
  simulate->add_option("--copula", sim.copula, "Copula family")->capture_default_str();
  simulate->add_option("--tau", sim.tau, "Kendall's tau")->capture_default_str();
  simulate->add_option("--marg-t", sim.marg_t, "Marginal of T, e.g. exp:0.025")->required();
  simulate->add_option("--marg-c", sim.marg_c, "Marginal of C, e.g. weibull:0.86,0.04")->required();
  simulate->add_option("--n", sim.n, "Sample size")->required();
  simulate->add_option("--out", sim.out, "CSV path; the sidecar gets a .json extension")->required();
  simulate->add_flag("--rct", sim.rct, "Treatment scenario with a trt column");
  simulate->add_option("--beta-t", sim.rct_cfg.beta_t, "Log hazard ratio of treatment on T")->capture_default_str();
  simulate->add_option("--beta-c", sim.rct_cfg.beta_c, "Log hazard ratio of treatment on C")->capture_default_str();
  simulate->add_option("--trt-prob", sim.rct_cfg.trt_prob, "Treatment probability")->capture_default_str();

  EstimateArgs est;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate tau and the marginals from a CSV");
  add_common(estimate_cmd, est.common);
  add_model_flags(estimate_cmd, est.model);
  add_estimator_flags(estimate_cmd, est.est);
  estimate_cmd->add_option("--data", est.data, "Input CSV with columns x,delta")->required();
  estimate_cmd->add_option("--method", est.method, "gmm or mle")->capture_default_str();
  estimate_cmd->add_option("--out", est.out, "JSON report path (stdout when absent)");

  BootstrapArgs boot;
  auto* bootstrap = app.add_subcommand("bootstrap", "Percentile bootstrap of the tau estimate");
  add_common(bootstrap, boot.base.common);
  add_model_flags(bootstrap, boot.base.model);
  add_estimator_flags(bootstrap, boot.base.est);
  bootstrap->add_option("--data", boot.base.data, "Input CSV with columns x,delta")->required();
  bootstrap->add_option("--method", boot.base.method, "gmm or mle")->capture_default_str();
  bootstrap->add_option("--out", boot.base.out, "JSON path (stdout when absent)");
  bootstrap->add_option("--b", boot.B, "Bootstrap replicates")->capture_default_str();
  bootstrap->add_option("--alpha", boot.alpha, "1 - confidence level")->capture_default_str();
  bootstrap->add_option("--truth", boot.truth, "True tau, for the bootstrap MAE");
  bootstrap->add_flag("--reuse-region", boot.reuse_region, "Build the search region once on the data");

  StudyArgs study;
  auto* study_cmd = app.add_subcommand("study", "Monte-Carlo study over a grid file");
  add_common(study_cmd, study.common);
  study_cmd->add_option("--grid", study.grid, "JSON grid file")->required();
  study_cmd->add_option("--runs", study.runs, "Override the grid's run count");
  study_cmd->add_option("--inner-b", study.inner_B, "Override the grid's bootstrap size");
  study_cmd->add_option("--out", study.out_csv, "CSV path (stdout when absent)");
  study_cmd->add_option("--json", study.out_json, "Full JSON report path");
  study_cmd->add_option("--layout", study.layout, "auto, single or summary")->capture_default_str();

  CurvesArgs curves;
  auto* curves_cmd = app.add_subcommand("curves", "Copula-graphic survival curves at given taus");
  add_common(curves_cmd, curves.common);
  curves_cmd->add_option("--data", curves.data, "Input CSV with columns x,delta")->required();
  curves_cmd->add_option("--copula", curves.copula, "Archimedean family")->capture_default_str();
  curves_cmd->add_option("--tau", curves.taus, "One or more tau values")->capture_default_str();
  curves_cmd->add_option("--target", curves.target, "t, c or both")->capture_default_str();
  curves_cmd->add_option("--prefix", curves.prefix, "Output path prefix")->capture_default_str();
  curves_cmd->add_flag("--clayton-proxy", curves.clayton_proxy, "Use Clayton curves for the normal copula");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) {
      try {
        cmd_simulate(sim, out);
      } catch (const DomainError& e) {
        throw UsageError(e.what());
      }
    } else if (*estimate_cmd) {
      cmd_estimate(est, out);
    } else if (*bootstrap) {
      if (boot.B < 20) throw UsageError("--b must be at least 20");
      cmd_bootstrap(boot, out);
    } else if (*study_cmd) {
      if (study.runs && *study.runs < 1) throw UsageError("--runs must be positive");
      cmd_study(study, out);
    } else if (*curves_cmd) {
      cmd_curves(curves, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace depcen::cli
