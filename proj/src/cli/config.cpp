#include "psou/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace psou::cli {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

double positive(const Json& j, const char* key, const std::string& ctx) {
  if (!j.at(key).is_number()) fail(ctx + "." + key + " must be a number");
  const double v = j.at(key).get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) fail(ctx + "." + key + " must be positive and finite");
  return v;
}

OUProcessSpec parse_model(const Json& j, const OUOptions& options) {
  require_keys(j, {"drift", "driver", "sigma0"}, "model");
  if (!j.contains("drift")) fail("model: missing 'drift'");
  if (!j.contains("driver")) fail("model: missing 'driver'");
  DriftOperator drift = drift_from_json(j.at("drift"));
  SubordinatorModel driver = model_from_json(j.at("driver"));
  const int d = drift.dim();
  if (model_dim(driver) != d) {
    fail("model: driver dimension " + std::to_string(model_dim(driver)) + " does not match drift dimension " +
         std::to_string(d));
  }
  if (!j.contains("sigma0")) return make_spec(std::move(drift), std::move(driver), options);
  const SymMat s0 = sym_from_json(j.at("sigma0"), "model.sigma0");
  if (s0.dim() != d) fail("model: sigma0 dimension does not match drift dimension");
  auto p = psd_check(s0, scaled_psd_tol(s0));
  if (!p) fail("model: sigma0 is not positive semidefinite");
  return make_spec(std::move(drift), std::move(driver), *p, options);
}

RunParams parse_run(const Json& j) {
  require_keys(j, {"horizon", "grid_step", "n_samples", "seed", "lags", "batches"}, "run");
  RunParams r;
  if (j.contains("horizon")) r.horizon = positive(j, "horizon", "run");
  if (j.contains("grid_step")) r.grid_step = positive(j, "grid_step", "run");
  if (j.contains("n_samples")) {
    if (!j.at("n_samples").is_number_integer() || j.at("n_samples").get<long>() < 2) {
      fail("run.n_samples must be an integer >= 2");
    }
    r.n_samples = j.at("n_samples").get<long>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) fail("run.seed must be a nonnegative integer");
    r.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("lags")) {
    if (!j.at("lags").is_array()) fail("run.lags must be an array");
    for (const auto& v : j.at("lags")) {
      if (!v.is_number() || !(v.get<double>() > 0.0)) fail("run.lags entries must be positive numbers");
      r.lags.push_back(v.get<double>());
    }
  }
  if (j.contains("batches")) {
    if (!j.at("batches").is_number_integer() || j.at("batches").get<int>() < 2) {
      fail("run.batches must be an integer >= 2");
    }
    r.batches = j.at("batches").get<int>();
  }
  return r;
}

OUOptions parse_tolerances(const Json& j, double grid_step) {
  require_keys(j, {"burn_in_tol", "charfn_tail_tol", "charfn_abs_tol", "charfn_rel_tol"}, "tolerances");
  OUOptions o;
  o.grid_step = grid_step;
  if (j.contains("burn_in_tol")) o.burn_in_tol = positive(j, "burn_in_tol", "tolerances");
  if (j.contains("charfn_tail_tol")) o.charfn_tail_tol = positive(j, "charfn_tail_tol", "tolerances");
  if (j.contains("charfn_abs_tol")) o.charfn_abs_tol = positive(j, "charfn_abs_tol", "tolerances");
  if (j.contains("charfn_rel_tol")) o.charfn_rel_tol = positive(j, "charfn_rel_tol", "tolerances");
  return o;
}

}  // namespace

ExperimentConfig parse_config(const Json& doc) {
  require_keys(doc, {"model", "run", "tolerances", "output", "subordinator", "probe", "fit"}, "config");
  ExperimentConfig cfg;
  if (doc.contains("run")) cfg.run = parse_run(doc.at("run"));
  OUOptions options;
  options.grid_step = cfg.run.grid_step;
  if (doc.contains("tolerances")) options = parse_tolerances(doc.at("tolerances"), cfg.run.grid_step);
  if (doc.contains("model")) cfg.model = parse_model(doc.at("model"), options);
  if (doc.contains("output")) {
    const Json& o = doc.at("output");
    require_keys(o, {"dir"}, "output");
    if (o.contains("dir")) {
      if (!o.at("dir").is_string()) fail("output.dir must be a string");
      cfg.output_dir = o.at("dir").get<std::string>();
    }
  }
  for (const char* key : {"subordinator", "probe", "fit"}) {
    if (!doc.contains(key)) continue;
    if (!doc.at(key).is_object()) fail(std::string(key) + " must be an object");
    std::optional<Json>& slot = std::string(key) == "subordinator" ? cfg.subordinator
                                : std::string(key) == "probe"      ? cfg.probe
                                                                   : cfg.fit;
    slot = doc.at(key);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    fail("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace psou::cli
