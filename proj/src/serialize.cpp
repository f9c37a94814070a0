#include "psou/serialize.hpp"

#include <cstdio>
#include <ostream>
#include <set>

namespace psou {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

double number(const Json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) config_error(context + ": missing key '" + key + "'");
  if (!j.at(key).is_number()) config_error(context + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

std::string kind_of(const Json& j, const std::string& context) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    config_error(context + ": expected an object with a string 'kind'");
  }
  return j.at("kind").get<std::string>();
}

PsdMat psd_from_json(const Json& j, const std::string& context) {
  const SymMat x = sym_from_json(j, context);
  auto p = psd_check(x, scaled_psd_tol(x));
  if (!p) config_error(context + ": matrix is not positive semidefinite");
  return *p;
}

}  // namespace

void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) config_error(context + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) config_error(context + ": unknown key '" + key + "'");
  }
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& context) {
  if (!j.is_array() || j.empty() || !j.front().is_array() || j.front().empty()) {
    config_error(context + ": expected a non-empty array of rows");
  }
  const size_t rows = j.size();
  const size_t cols = j.front().size();
  Matrix m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) config_error(context + ": ragged rows");
    for (size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) config_error(context + ": entries must be numbers");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j, const std::string& context) {
  if (!j.is_array() || j.empty()) config_error(context + ": expected a non-empty array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) config_error(context + ": entries must be numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

Json to_json(const SymMat& x) { return matrix_to_json(x.matrix()); }

SymMat sym_from_json(const Json& j, const std::string& context) {
  const Matrix m = matrix_from_json(j, context);
  if (m.rows() != m.cols()) config_error(context + ": matrix must be square");
  try {
    return SymMat(m);
  } catch (const Error& e) {
    config_error(context + ": " + e.what());
  }
}

Json to_json(const HalfVec& h) { return vector_to_json(h.data); }

HalfVec halfvec_from_json(const Json& j, int d) {
  HalfVec h{d, vector_from_json(j, "halfvec")};
  if (h.data.size() != vech_size(d)) config_error("halfvec: length must be d(d+1)/2");
  return h;
}

Json to_json(const DriftOperator& op) {
  Json j;
  j["d"] = op.dim();
  j["A"] = matrix_to_json(op.A());
  return j;
}

DriftOperator drift_from_json(const Json& j) {
  require_keys(j, {"d", "A"}, "drift");
  const Matrix a = matrix_from_json(j.at("A"), "drift.A");
  if (a.rows() != a.cols()) config_error("drift.A: must be square");
  if (j.contains("d") && (!j.at("d").is_number_integer() || j.at("d").get<int>() != a.rows())) {
    config_error("drift: 'd' does not match the size of A");
  }
  return DriftOperator(a);
}

Json to_json(const MixingLaw& law) {
  return std::visit(Overloaded{
                        [](const ConstantMixing& c) {
                          Json j;
                          j["kind"] = "constant";
                          j["value"] = c.value;
                          return j;
                        },
                        [](const GigMixing& g) {
                          Json j;
                          j["kind"] = "gig";
                          j["nu"] = g.nu;
                          j["delta"] = g.delta;
                          j["alpha"] = g.alpha;
                          return j;
                        },
                    },
                    law);
}

MixingLaw mixing_from_json(const Json& j) {
  const std::string kind = kind_of(j, "mixing");
  if (kind == "constant") {
    require_keys(j, {"kind", "value"}, "mixing");
    return ConstantMixing{number(j, "value", "mixing")};
  }
  if (kind == "gig") {
    require_keys(j, {"kind", "nu", "delta", "alpha"}, "mixing");
    return GigMixing{number(j, "nu", "mixing"), number(j, "delta", "mixing"), number(j, "alpha", "mixing")};
  }
  if (kind == "inverse_gaussian") {
    require_keys(j, {"kind", "delta", "alpha"}, "mixing");
    return GigMixing{-0.5, number(j, "delta", "mixing"), number(j, "alpha", "mixing")};
  }
  config_error("mixing: unknown kind '" + kind + "'");
}

Json to_json(const SubordinatorModel& model) {
  Json j;
  j["kind"] = model_kind(model);
  std::visit(Overloaded{
                 [&](const DriftOnly& m) { j["gamma"] = to_json(m.gamma); },
                 [&](const DiagonalCP& m) {
                   j["B"] = matrix_to_json(m.B);
                   j["rate"] = m.rate;
                   j["jump_rate"] = m.jump_rate;
                   j["gamma"] = vector_to_json(m.gamma);
                 },
                 [&](const GaussMixtureCP& m) {
                   j["rate"] = m.rate;
                   j["C"] = to_json(m.C.base());
                   j["mixing"] = to_json(m.mixing);
                   if (m.drift) j["drift"] = to_json(*m.drift);
                 },
                 [&](const TypeGbar& m) {
                   j["C"] = to_json(m.C.base());
                   j["mixing"] = to_json(MixingLaw{m.mixing});
                   j["substeps"] = m.substeps;
                 },
             },
             model);
  return j;
}

SubordinatorModel model_from_json(const Json& j) {
  const std::string kind = kind_of(j, "driver");
  SubordinatorModel model = [&]() -> SubordinatorModel {
    if (kind == "drift_only") {
      require_keys(j, {"kind", "gamma"}, "driver");
      return DriftOnly{sym_from_json(j.at("gamma"), "driver.gamma")};
    }
    if (kind == "diagonal_cp") {
      require_keys(j, {"kind", "B", "rate", "jump_rate", "gamma"}, "driver");
      return DiagonalCP{matrix_from_json(j.at("B"), "driver.B"), number(j, "rate", "driver"),
                        number(j, "jump_rate", "driver"), vector_from_json(j.at("gamma"), "driver.gamma")};
    }
    if (kind == "multivariate") {
      require_keys(j, {"kind", "mu", "C", "B"}, "driver");
      const Vector mu = vector_from_json(j.at("mu"), "driver.mu");
      if (j.contains("B")) return build_multivariate_subordinator(mu, matrix_from_json(j.at("B"), "driver.B"));
      if (!j.contains("C")) config_error("driver: multivariate needs 'C' or 'B'");
      return build_multivariate_subordinator(mu, sym_from_json(j.at("C"), "driver.C"));
    }
    if (kind == "gauss_mixture_cp") {
      require_keys(j, {"kind", "rate", "C", "mixing", "drift"}, "driver");
      std::optional<SymMat> drift;
      if (j.contains("drift")) drift = sym_from_json(j.at("drift"), "driver.drift");
      return GaussMixtureCP{number(j, "rate", "driver"), psd_from_json(j.at("C"), "driver.C"),
                            mixing_from_json(j.at("mixing")), drift};
    }
    if (kind == "type_gbar") {
      require_keys(j, {"kind", "C", "mixing", "substeps"}, "driver");
      const MixingLaw law = mixing_from_json(j.at("mixing"));
      if (!std::holds_alternative<GigMixing>(law)) config_error("driver: type_gbar mixing must be gig");
      TypeGbar m{psd_from_json(j.at("C"), "driver.C"), std::get<GigMixing>(law), 16};
      if (j.contains("substeps")) {
        if (!j.at("substeps").is_number_integer()) config_error("driver: substeps must be an integer");
        m.substeps = j.at("substeps").get<int>();
      }
      return m;
    }
    config_error("driver: unknown kind '" + kind + "'");
  }();
  try {
    validate_model(model);
  } catch (const Error& e) {
    config_error(std::string("driver: ") + e.what());
  }
  if (const auto* m = std::get_if<GaussMixtureCP>(&model); m && m->drift && m->drift->dim() != m->C.dim()) {
    config_error("driver: drift dimension mismatch");
  }
  return model;
}

namespace {

Json autocov_to_json(const std::map<double, Matrix>& autocov) {
  Json arr = Json::array();
  for (const auto& [lag, m] : autocov) {
    Json e;
    e["lag"] = lag;
    e["matrix"] = matrix_to_json(m);
    arr.push_back(std::move(e));
  }
  return arr;
}

std::map<double, Matrix> autocov_from_json(const Json& j) {
  if (!j.is_array()) config_error("moment report: autocov must be an array");
  std::map<double, Matrix> out;
  for (const auto& e : j) {
    require_keys(e, {"lag", "matrix"}, "moment report autocov");
    out[number(e, "lag", "moment report autocov")] = matrix_from_json(e.at("matrix"), "autocov.matrix");
  }
  return out;
}

}  // namespace

Json to_json(const MomentReport& report) {
  Json j;
  j["mean"] = to_json(report.mean);
  j["var_vec"] = matrix_to_json(report.var_vec);
  j["autocov"] = autocov_to_json(report.autocov);
  j["provenance"] = to_string(report.provenance);
  if (report.samples > 0) j["samples"] = report.samples;
  if (report.gamma_sigma) j["gamma_sigma"] = to_json(*report.gamma_sigma);
  if (report.std_errors) {
    Json se;
    se["mean"] = matrix_to_json(report.std_errors->mean);
    se["var_vec"] = matrix_to_json(report.std_errors->var_vec);
    se["autocov"] = autocov_to_json(report.std_errors->autocov);
    j["std_errors"] = std::move(se);
  }
  return j;
}

MomentReport moment_report_from_json(const Json& j) {
  require_keys(j, {"mean", "var_vec", "autocov", "provenance", "samples", "gamma_sigma", "std_errors"},
               "moment report");
  MomentReport r;
  r.mean = sym_from_json(j.at("mean"), "moment report mean");
  r.var_vec = matrix_from_json(j.at("var_vec"), "moment report var_vec");
  const int dd = r.mean.dim() * r.mean.dim();
  if (r.var_vec.rows() != dd || r.var_vec.cols() != dd) config_error("moment report: var_vec must be d^2 x d^2");
  r.autocov = j.contains("autocov") ? autocov_from_json(j.at("autocov")) : std::map<double, Matrix>{};
  for (const auto& [lag, m] : r.autocov) {
    if (m.rows() != dd || m.cols() != dd) config_error("moment report: autocov matrices must be d^2 x d^2");
  }
  const std::string prov = j.value("provenance", std::string("closed_form"));
  if (prov != "closed_form" && prov != "monte_carlo") config_error("moment report: unknown provenance");
  r.provenance = prov == "closed_form" ? Provenance::kClosedForm : Provenance::kMonteCarlo;
  r.samples = j.value("samples", 0L);
  if (j.contains("gamma_sigma")) r.gamma_sigma = sym_from_json(j.at("gamma_sigma"), "gamma_sigma");
  if (j.contains("std_errors")) {
    const Json& se = j.at("std_errors");
    require_keys(se, {"mean", "var_vec", "autocov"}, "moment report std_errors");
    r.std_errors = MomentStdErrors{matrix_from_json(se.at("mean")), matrix_from_json(se.at("var_vec")),
                                   autocov_from_json(se.at("autocov"))};
  }
  return r;
}

Json to_json(const MoMEstimate& est) {
  Json j;
  j["A_hat"] = matrix_to_json(est.A_hat.A());
  j["mean_L"] = to_json(est.mean_L);
  j["var_vec_L"] = matrix_to_json(est.var_vec_L);
  Json r;
  r["projection_distance"] = est.residuals.projection_distance;
  r["reconstruction_error"] = est.residuals.reconstruction_error;
  r["psd_clip"] = est.residuals.psd_clip;
  r["condition"] = est.residuals.condition;
  r["lags_used"] = est.residuals.lags_used;
  j["residuals"] = std::move(r);
  Json c;
  c["stable"] = est.stable;
  c["stability_margin"] = est.A_hat.stability().margin;
  c["mean_L_psd"] = est.mean_L_psd;
  j["condition_check"] = std::move(c);
  return j;
}

Json to_json(const CpResult& cp) {
  Json j;
  j["status"] = to_string(cp.status);
  if (cp.B.size() > 0) j["B"] = matrix_to_json(cp.B);
  j["residual"] = cp.residual;
  j["restarts_used"] = cp.restarts_used;
  if (!cp.reason.empty()) j["reason"] = cp.reason;
  return j;
}

Json to_json(const StabilityReport& s) {
  Json spectrum = Json::array();
  for (const auto& ev : s.spectrum) spectrum.push_back(Json::array({ev.real(), ev.imag()}));
  Json j;
  j["spectrum"] = std::move(spectrum);
  j["margin"] = s.margin;
  j["stable"] = s.stable;
  return j;
}

Json to_json(const PsdDiagnostics& diag) {
  Json j;
  j["count"] = diag.count;
  j["min_eigenvalue"] = diag.min_eigenvalue;
  j["fraction_positive_definite"] = diag.fraction_positive_definite;
  Json hist = Json::object();
  for (const auto& [rank, n] : diag.rank_histogram) hist[std::to_string(rank)] = n;
  j["rank_histogram"] = std::move(hist);
  return j;
}

std::string vech_header(int d, const std::vector<std::string>& prefix) {
  std::string out;
  for (const auto& p : prefix) out += p + ",";
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) out += "s_" + std::to_string(i + 1) + std::to_string(j + 1) + ",";
  }
  out.pop_back();
  return out;
}

void write_vech_row(std::ostream& os, const std::vector<std::string>& prefix, const SymMat& x) {
  bool first = true;
  for (const auto& p : prefix) {
    os << (first ? "" : ",") << p;
    first = false;
  }
  const HalfVec h = vech(x);
  for (Eigen::Index k = 0; k < h.data.size(); ++k) {
    os << (first ? "" : ",") << format_double(h.data(k));
    first = false;
  }
  os << '\n';
}

void write_path_csv(std::ostream& os, const OUPath& path) {
  const int d = path.states.empty() ? 1 : path.states.front().dim();
  os << vech_header(d, {"time"}) << '\n';
  for (size_t i = 0; i < path.states.size(); ++i) write_vech_row(os, {format_double(path.times[i])}, path.states[i]);
}

void write_jumps_csv(std::ostream& os, const OUPath& path) {
  const int d = path.states.empty() ? 1 : path.states.front().dim();
  os << vech_header(d, {"time"}) << '\n';
  for (const auto& j : path.jumps) write_vech_row(os, {format_double(j.time)}, j.matrix);
}

}  // namespace psou
