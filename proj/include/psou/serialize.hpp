#pragma once

// JSON and CSV wire formats. Matrices are arrays of rows; HalfVec is a flat
// array in vech order; CSV files use "%.17g" floats and vech columns
// s_11, s_21, ..., s_dd.

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "psou/calibration.hpp"
#include "psou/cp_factor.hpp"
#include "psou/driftop.hpp"
#include "psou/oup.hpp"
#include "psou/subordinators.hpp"

namespace psou {

using Json = nlohmann::ordered_json;

/// Throws kConfig when `j` is not an object or has keys outside `allowed`.
void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& context);

std::string format_double(double x);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& context = "matrix");
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& context = "vector");

Json to_json(const SymMat& x);
SymMat sym_from_json(const Json& j, const std::string& context = "symmetric matrix");
Json to_json(const HalfVec& h);
HalfVec halfvec_from_json(const Json& j, int d);

Json to_json(const DriftOperator& op);
DriftOperator drift_from_json(const Json& j);

Json to_json(const MixingLaw& law);
MixingLaw mixing_from_json(const Json& j);
Json to_json(const SubordinatorModel& model);
SubordinatorModel model_from_json(const Json& j);

Json to_json(const MomentReport& report);
MomentReport moment_report_from_json(const Json& j);

Json to_json(const MoMEstimate& est);
Json to_json(const CpResult& cp);
Json to_json(const StabilityReport& s);
Json to_json(const PsdDiagnostics& diag);

/// Header "s_11,s_21,...,s_dd" (1-based, vech order) with the given prefix columns.
std::string vech_header(int d, const std::vector<std::string>& prefix);
void write_vech_row(std::ostream& os, const std::vector<std::string>& prefix, const SymMat& x);

void write_path_csv(std::ostream& os, const OUPath& path);
void write_jumps_csv(std::ostream& os, const OUPath& path);

}  // namespace psou
