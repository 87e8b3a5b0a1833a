#ifndef KS_IO_HPP
#define KS_IO_HPP

#include "ks/barycenter.hpp"
#include "ks/solver.hpp"
#include "ks/testfn.hpp"
#include "ks/topology.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace ks {

using json = nlohmann::json;

/// Rounds to 12 significant digits, the precision of every emitted number.
real round12(real x);
/// Plain %.12g formatting.
std::string fmt12(real x);

json to_json(const BarycenterMeasure& mu);
BarycenterMeasure measure_from_json(const json& j);

json to_json(const JoinPoint& z);
JoinPoint join_point_from_json(const json& j);

json to_json(const ConditionReport& r);
ConditionReport report_from_json(const json& j);

json to_json(const SolveResult& r);
SolveResult solve_result_from_json(const json& j);

json to_json(const BlowupDiagnostic& d);

/// `index,lambda` with 1-based indices.
std::string spectrum_csv(const vec& eigenvalues);
/// `lambda,dirichlet,mean,logint,energy`.
std::string probe_csv(const std::vector<ProbeRow>& rows);
/// `step,beta,rho,classification,residual,energy,h1`.
std::string continuation_csv(const FeSpace& space, const ContinuationResult& c);

/// Human-readable verdict table.
std::string render_report(const ConditionReport& r);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace ks

#endif  // KS_IO_HPP
