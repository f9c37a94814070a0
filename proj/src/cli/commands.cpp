#include "psou/cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "psou/cli/config.hpp"
#include "psou/cli/validation.hpp"
#include "psou/cp_factor.hpp"

namespace psou::cli {

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string out_dir;
};

struct Context {
  std::string command;
  CommonFlags flags;
  ExperimentConfig cfg;
  fs::path dir;
  Json artifacts = Json::array();

  std::uint64_t seed() const { return flags.seed.value_or(cfg.run.seed); }

  fs::path resolve(const std::string& name) const {
    fs::path p(name);
    return p.is_absolute() ? p : dir / p;
  }

  fs::path output(const std::string& fallback) const { return resolve(flags.out.empty() ? fallback : flags.out); }

  const OUProcessSpec& model() const {
    if (!cfg.model) throw Error(ErrorCode::kConfig, command + " requires a 'model' section");
    return *cfg.model;
  }

  void write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
    f << content;
    f.close();
    if (!f) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
    artifacts.push_back(path.string());
  }

  void write_json(const fs::path& path, const Json& j) { write(path, j.dump(2) + "\n"); }
};

/// "dir/stem.ext" -> "dir/stem<suffix>"
fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kConfig, what + " is not valid JSON: " + e.what());
  }
}

// ---- simulate -----------------------------------------------------------

Json cmd_simulate(Context& ctx) {
  const OUProcessSpec& spec = ctx.model();
  RandomStream rng(ctx.seed());
  const OUPath path = simulate_path(spec, ctx.cfg.run.horizon, rng);
  const fs::path path_file = ctx.output("path.csv");
  std::ostringstream p, j;
  write_path_csv(p, path);
  write_jumps_csv(j, path);
  ctx.write(path_file, p.str());
  ctx.write(sibling(path_file, "_jumps.csv"), j.str());
  Json s;
  s["states"] = path.states.size();
  s["jumps"] = path.jumps.size();
  s["psd"] = to_json(psd_diagnostics(path.states));
  return s;
}

// ---- moments ------------------------------------------------------------

Json cmd_moments(Context& ctx) {
  const MomentReport report = stationary_moments(ctx.model(), ctx.cfg.run.lags);
  ctx.write_json(ctx.output("moments.json"), to_json(report));
  Json s;
  s["stability"] = to_json(ctx.model().drift.stability());
  return s;
}

// ---- sample-stationary --------------------------------------------------

std::vector<double> sorted_lags(std::vector<double> lags) {
  std::sort(lags.begin(), lags.end());
  lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
  return lags;
}

Json cmd_sample_stationary(Context& ctx) {
  const OUProcessSpec& spec = ctx.model();
  const std::vector<double> lags = sorted_lags(ctx.cfg.run.lags);
  RandomStream rng(ctx.seed());
  const auto draws = sample_stationary_lagged(spec, static_cast<int>(ctx.cfg.run.n_samples), lags, rng);

  std::ostringstream csv;
  const int d = spec.drift.dim();
  csv << vech_header(d, {"sample", "lag"}) << '\n';
  std::vector<SymMat> heads;
  heads.reserve(draws.size());
  for (size_t i = 0; i < draws.size(); ++i) {
    heads.push_back(draws[i][0]);
    write_vech_row(csv, {std::to_string(i), format_double(0.0)}, draws[i][0]);
    for (size_t k = 0; k < lags.size(); ++k) {
      write_vech_row(csv, {std::to_string(i), format_double(lags[k])}, draws[i][k + 1]);
    }
  }
  const fs::path draws_file = ctx.output("draws.csv");
  ctx.write(draws_file, csv.str());
  ctx.write_json(sibling(draws_file, "_moments.json"), to_json(empirical_moments(draws, lags)));
  Json s;
  s["samples"] = draws.size();
  s["psd"] = to_json(psd_diagnostics(heads));
  return s;
}

// ---- fit ----------------------------------------------------------------

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, what + ": cannot parse number '" + s + "'");
  }
}

/// Reads a draws CSV as written by sample-stationary.
MomentReport moments_from_draws_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kConfig, "draws CSV is empty");
  const auto header = split_csv_line(line);
  const long m = static_cast<long>(header.size()) - 2;
  int d = 0;
  while (vech_size(d + 1) <= m) ++d;
  if (header.size() < 3 || header[0] != "sample" || header[1] != "lag" || vech_size(d) != m ||
      line != vech_header(d, {"sample", "lag"})) {
    throw Error(ErrorCode::kConfig, "draws CSV: unexpected header '" + line + "'");
  }
  std::map<long, std::map<double, SymMat>> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = "draws CSV line " + std::to_string(lineno);
    if (static_cast<long>(cells.size()) != m + 2) throw Error(ErrorCode::kConfig, where + ": wrong column count");
    HalfVec h{d, Vector(m)};
    for (long k = 0; k < m; ++k) h.data(k) = parse_double(cells[k + 2], where);
    rows[static_cast<long>(parse_double(cells[0], where))][parse_double(cells[1], where)] = unvech(h);
  }
  if (rows.size() < 2) throw Error(ErrorCode::kConfig, "draws CSV needs at least two samples");
  std::vector<double> lags;
  for (const auto& [lag, x] : rows.begin()->second) {
    if (lag > 0.0) lags.push_back(lag);
  }
  std::vector<LaggedDraw> draws;
  for (const auto& [id, by_lag] : rows) {
    if (by_lag.size() != lags.size() + 1 || !by_lag.count(0.0)) {
      throw Error(ErrorCode::kConfig, "draws CSV: sample " + std::to_string(id) + " has inconsistent lags");
    }
    LaggedDraw draw;
    for (const auto& [lag, x] : by_lag) draw.push_back(x);
    draws.push_back(std::move(draw));
  }
  return empirical_moments(draws, lags);
}

Json cmd_fit(Context& ctx, const std::string& input_flag) {
  const Json fit = ctx.cfg.fit.value_or(Json::object());
  require_keys(fit, {"input", "lag", "fallback_lags", "multi_lag", "max_condition"}, "fit");
  std::string input = input_flag;
  if (input.empty() && fit.contains("input")) input = fit.at("input").get<std::string>();
  if (input.empty()) throw Error(ErrorCode::kConfig, "fit needs an input (--input or fit.input)");

  MomFitOptions opts;
  if (fit.contains("lag")) opts.lag = fit.at("lag").get<double>();
  if (fit.contains("fallback_lags")) opts.fallback_lags = fit.at("fallback_lags").get<std::vector<double>>();
  if (fit.contains("multi_lag")) opts.multi_lag = fit.at("multi_lag").get<bool>();
  if (fit.contains("max_condition")) opts.max_condition = fit.at("max_condition").get<double>();

  const std::string text = read_file(ctx.resolve(input));
  const size_t first = text.find_first_not_of(" \t\r\n");
  MomentReport report = (first != std::string::npos && text[first] == '{')
                            ? moment_report_from_json(parse_json_text(text, "moments file"))
                            : moments_from_draws_csv(text);
  const MoMEstimate est = mom_fit(report, opts);
  ctx.write_json(ctx.output("fit.json"), to_json(est));
  Json s;
  s["stable"] = est.stable;
  s["mean_L_psd"] = est.mean_L_psd;
  return s;
}

// ---- subordinator -------------------------------------------------------

CpOptions cp_options(const Json& j, std::uint64_t seed) {
  CpOptions o;
  o.seed = seed;
  if (j.contains("k")) o.k = j.at("k").get<int>();
  if (j.contains("tol")) o.tol = j.at("tol").get<double>();
  if (j.contains("restarts")) o.restarts = j.at("restarts").get<int>();
  if (j.contains("max_iterations")) o.max_iterations = j.at("max_iterations").get<int>();
  return o;
}

Json model_summary(const SubordinatorModel& model) {
  Json j;
  j["model"] = to_json(model);
  j["is_subordinator"] = is_subordinator(model);
  j["mean"] = to_json(driver_mean(model));
  j["var_vec"] = matrix_to_json(driver_var_vec(model));
  return j;
}

Json cmd_subordinator(Context& ctx) {
  if (!ctx.cfg.subordinator) throw Error(ErrorCode::kConfig, "subordinator requires a 'subordinator' section");
  const Json& j = *ctx.cfg.subordinator;
  if (!j.contains("operation") || !j.at("operation").is_string()) {
    throw Error(ErrorCode::kConfig, "subordinator.operation must be a string");
  }
  const std::string op = j.at("operation").get<std::string>();
  Json result;
  result["operation"] = op;
  if (op == "cp_factorize") {
    require_keys(j, {"operation", "C", "k", "tol", "restarts", "max_iterations"}, "subordinator");
    const SymMat c = sym_from_json(j.at("C"), "subordinator.C");
    std::string reason;
    result["doubly_nonnegative"] = is_doubly_nonnegative(c, &reason);
    result["factorization"] = to_json(cp_factorize(c, cp_options(j, ctx.seed())));
  } else if (op == "build_multivariate") {
    require_keys(j, {"operation", "mu", "C", "B", "k", "tol", "restarts", "max_iterations"}, "subordinator");
    const Vector mu = vector_from_json(j.at("mu"), "subordinator.mu");
    SubordinatorModel model = j.contains("B")
        ? build_multivariate_subordinator(mu, matrix_from_json(j.at("B"), "subordinator.B"))
        : build_multivariate_subordinator(mu, sym_from_json(j.at("C"), "subordinator.C"), cp_options(j, ctx.seed()));
    result.update(model_summary(model));
  } else if (op == "qv_moments") {
    require_keys(j, {"operation", "kind", "rate", "C", "mixing"}, "subordinator");
    const std::string kind = j.value("kind", std::string("compound_poisson"));
    if (kind != "compound_poisson" && kind != "type_gbar") {
      throw Error(ErrorCode::kConfig, "subordinator.kind must be compound_poisson or type_gbar");
    }
    const SymMat c = sym_from_json(j.at("C"), "subordinator.C");
    const PsdMat cp = require_psd(c, scaled_psd_tol(c));
    const double rate = j.contains("rate") ? j.at("rate").get<double>() : 1.0;
    const MixingLaw law = j.contains("mixing") ? mixing_from_json(j.at("mixing")) : MixingLaw{ConstantMixing{}};
    const QvMoments m = mixture_qv_moments(kind == "type_gbar" ? QvKind::kTypeGbar : QvKind::kCompoundPoisson,
                                           rate, mixing_moments(law), cp);
    result["kind"] = kind;
    result["mean"] = to_json(m.mean);
    result["var"] = matrix_to_json(m.var);
  } else if (op == "driver_moments") {
    require_keys(j, {"operation"}, "subordinator");
    result.update(model_summary(ctx.model().driver));
  } else {
    throw Error(ErrorCode::kConfig, "unknown subordinator operation '" + op + "'");
  }
  ctx.write_json(ctx.output("subordinator.json"), result);
  return Json::object();
}

// ---- extract-op ---------------------------------------------------------

Json cmd_extract_op(Context& ctx) {
  if (!ctx.cfg.probe) throw Error(ErrorCode::kConfig, "extract-op requires a 'probe' section");
  const Json& j = *ctx.cfg.probe;
  if (!j.contains("kind") || !j.at("kind").is_string()) throw Error(ErrorCode::kConfig, "probe.kind must be a string");
  const std::string kind = j.at("kind").get<std::string>();
  Json result;
  result["method"] = kind;
  if (kind == "exact") {
    require_keys(j, {"kind", "A", "base_step", "max_halvings", "representation_tol"}, "probe");
    const DriftOperator truth(matrix_from_json(j.at("A"), "probe.A"));
    ExtractOptions opts;
    if (j.contains("base_step")) opts.base_step = j.at("base_step").get<double>();
    if (j.contains("max_halvings")) opts.max_halvings = j.at("max_halvings").get<int>();
    if (j.contains("representation_tol")) opts.representation_tol = j.at("representation_tol").get<double>();
    const SemigroupProbe probe = [&truth](double t, const SymMat& x) { return truth.semigroup(t, x); };
    const ExtractionResult r = extract_generator(probe, truth.dim(), opts);
    result["drift"] = to_json(r.op);
    result["step"] = r.step;
    result["representation_residual"] = r.representation_residual;
    result["stability"] = to_json(r.op.stability());
  } else if (kind == "basis_images") {
    require_keys(j, {"kind", "images"}, "probe");
    if (!j.at("images").is_array()) throw Error(ErrorCode::kConfig, "probe.images must be an array");
    std::vector<SymMat> images;
    for (const auto& im : j.at("images")) images.push_back(sym_from_json(im, "probe.images"));
    const DriftOperator op = recover_from_basis_action(images);
    result["drift"] = to_json(op);
    result["stability"] = to_json(op.stability());
  } else {
    throw Error(ErrorCode::kConfig, "unknown probe kind '" + kind + "'");
  }
  ctx.write_json(ctx.output("extracted.json"), result);
  return Json::object();
}

// ---- validate -----------------------------------------------------------

Json cmd_validate(Context& ctx, std::vector<std::string> suites, bool& all_passed) {
  if (suites.empty()) suites = suite_names();
  Json file;
  file["seed"] = ctx.seed();
  Json list = Json::array();
  Json timing = Json::object();
  all_passed = true;
  for (const auto& name : suites) {
    const SuiteResult r = run_suite(name, ctx.seed());
    all_passed = all_passed && r.passed;
    list.push_back(to_json(r));
    timing[name] = {{"passed", r.passed}, {"seconds", r.seconds}};
  }
  file["passed"] = all_passed;
  file["suites"] = std::move(list);
  ctx.write_json(ctx.output("validation.json"), file);
  Json s;
  s["passed"] = all_passed;
  s["suites"] = std::move(timing);
  return s;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kIo:
      return kExitConfig;
    default:
      return kExitNumerical;
  }
}

void report_error(std::ostream& err, const std::string& command, const std::string& code, const std::string& message,
                  int exit_code) {
  Json j;
  j["command"] = command;
  j["error"] = {{"code", code}, {"message", message}};
  j["exit_code"] = exit_code;
  err << j.dump() << '\n';
}

void add_common(CLI::App* sub, CommonFlags& flags, bool config_required) {
  auto* c = sub->add_option("--config", flags.config, "Experiment configuration (JSON)");
  if (config_required) c->required();
  sub->add_option("--seed", flags.seed, "Master seed; overrides run.seed");
  sub->add_option("--out", flags.out, "Primary output file");
  sub->add_option("--out-dir", flags.out_dir, "Directory for relative output paths");
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Positive semidefinite OU processes driven by matrix subordinators", "psou"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string fit_input;
  std::vector<std::string> suites;

  struct Sub {
    const char* name;
    const char* help;
    bool needs_config;
  };
  const Sub subs[] = {
      {"simulate", "Simulate a path; writes path and jump CSV files", true},
      {"moments", "Closed-form stationary moments as JSON", true},
      {"sample-stationary", "Stationary draws as CSV plus Monte Carlo moments JSON", true},
      {"fit", "Method-of-moments fit from a moments JSON or draws CSV", false},
      {"subordinator", "Factorize, build or summarize matrix subordinators", true},
      {"extract-op", "Recover the drift matrix from a semigroup probe", true},
      {"validate", "Run validation suites and write a pass/fail report", false},
  };
  std::map<std::string, CLI::App*> handles;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, flags, s.needs_config);
    handles[s.name] = sub;
  }
  handles["fit"]->add_option("--input", fit_input, "Moments JSON or draws CSV");
  handles["validate"]->add_option("--suite", suites, "Suite name (repeatable); default all")
      ->check(CLI::IsMember(suite_names()));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "", "usage", e.what(), kExitConfig);
    return kExitConfig;
  }

  Context ctx;
  for (const auto& [name, sub] : handles) {
    if (sub->parsed()) ctx.command = name;
  }
  ctx.flags = flags;
  bool loading = true;
  try {
    if (!flags.config.empty()) ctx.cfg = load_config(flags.config);
    if (!flags.out_dir.empty()) {
      ctx.dir = flags.out_dir;
    } else if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
      ctx.dir = env;
    } else {
      ctx.dir = ctx.cfg.output_dir;
    }
    loading = false;

    Json summary;
    int code = kExitOk;
    if (ctx.command == "simulate") {
      summary = cmd_simulate(ctx);
    } else if (ctx.command == "moments") {
      summary = cmd_moments(ctx);
    } else if (ctx.command == "sample-stationary") {
      summary = cmd_sample_stationary(ctx);
    } else if (ctx.command == "fit") {
      summary = cmd_fit(ctx, fit_input);
    } else if (ctx.command == "subordinator") {
      summary = cmd_subordinator(ctx);
    } else if (ctx.command == "extract-op") {
      summary = cmd_extract_op(ctx);
    } else {
      bool passed = false;
      summary = cmd_validate(ctx, suites, passed);
      if (!passed) code = kExitValidation;
    }
    Json line;
    line["command"] = ctx.command;
    line["status"] = code == kExitOk ? "ok" : "validation_failed";
    line["artifacts"] = ctx.artifacts;
    if (!summary.empty()) line["summary"] = summary;
    out << line.dump() << '\n';
    return code;
  } catch (const Error& e) {
    const int code = loading ? kExitConfig : exit_code_for(e.code());
    report_error(err, ctx.command, std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const Json::exception& e) {
    report_error(err, ctx.command, "config", e.what(), kExitConfig);
    return kExitConfig;
  } catch (const std::exception& e) {
    report_error(err, ctx.command, "internal", e.what(), kExitNumerical);
    return kExitNumerical;
  }
}

}  // namespace psou::cli
