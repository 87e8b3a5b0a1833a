#include "ks/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ks {

std::string fmt12(real x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

real round12(real x) { return std::isfinite(x) ? std::stod(fmt12(x)) : x; }

namespace {

json num(real x) {
  if (!std::isfinite(x)) return nullptr;
  return round12(x);
}

real get_real(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::parse, std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<real>::quiet_NaN();
  if (!v.is_number()) throw Error(ErrorKind::parse, std::string("field '") + key + "' is not a number");
  return v.get<real>();
}

json vec_json(const vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

vec vec_from_json(const json& a) {
  if (!a.is_array()) throw Error(ErrorKind::parse, "expected an array of numbers");
  vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(i) = a[i].is_null() ? std::numeric_limits<real>::quiet_NaN() : a[i].get<real>();
  return v;
}

}  // namespace

json to_json(const BarycenterMeasure& mu) {
  json atoms = json::array();
  for (const auto& a : mu.atoms)
    atoms.push_back({{"x", num(a.point.x())}, {"y", num(a.point.y())}, {"w", num(a.weight)}, {"tag", to_string(a.tag)}});
  return {{"atoms", atoms}};
}

BarycenterMeasure measure_from_json(const json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j.at("atoms").is_array())
    throw Error(ErrorKind::parse, "barycenter measure needs an 'atoms' array");
  BarycenterMeasure mu;
  for (const auto& a : j.at("atoms")) {
    if (!a.contains("tag") || !a.at("tag").is_string()) throw Error(ErrorKind::parse, "atom without a tag");
    mu.atoms.push_back({vec2(get_real(a, "x"), get_real(a, "y")), get_real(a, "w"), parse_atom_tag(a.at("tag").get<std::string>())});
  }
  return mu;
}

json to_json(const JoinPoint& z) { return {{"measure", to_json(z.measure)}, {"sphere", vec_json(z.sphere)}, {"t", num(z.t)}}; }

JoinPoint join_point_from_json(const json& j) {
  JoinPoint z;
  z.measure = measure_from_json(j.at("measure"));
  z.sphere = vec_from_json(j.at("sphere"));
  z.t = get_real(j, "t");
  return z;
}

json to_json(const ConditionReport& r) {
  json j;
  j["beta"] = num(r.params.beta);
  j["rho"] = num(r.params.rho);
  j["area"] = num(r.area);
  j["genus"] = r.genus;
  if (r.indices) j["indices"] = {{"K", r.indices->k}, {"I", r.indices->i}, {"J", r.indices->j}};
  else j["indices"] = nullptr;
  j["resonant"] = {{"rho", r.resonant.rho}, {"beta", r.resonant.beta}, {"beta_shift", r.resonant.beta_shift}};
  j["verdict"] = to_string(r.verdict);
  if (r.homology) j["homology"] = {{"degree", r.homology->degree}, {"rank", r.homology->rank}};
  else j["homology"] = nullptr;
  j["note"] = r.note;
  return j;
}

ConditionReport report_from_json(const json& j) {
  ConditionReport r;
  r.params = {get_real(j, "beta"), get_real(j, "rho")};
  r.area = get_real(j, "area");
  r.genus = j.at("genus").get<int>();
  if (!j.at("indices").is_null()) {
    const auto& ix = j.at("indices");
    r.indices = Indices{ix.at("K").get<Eigen::Index>(), ix.at("I").get<Eigen::Index>(), ix.at("J").get<Eigen::Index>()};
  }
  const auto& rs = j.at("resonant");
  r.resonant = {rs.at("rho").get<bool>(), rs.at("beta").get<bool>(), rs.at("beta_shift").get<bool>()};
  const std::string v = j.at("verdict").get<std::string>();
  if (v == "guaranteed_nontrivial") r.verdict = Verdict::guaranteed_nontrivial;
  else if (v == "not_guaranteed") r.verdict = Verdict::not_guaranteed;
  else if (v == "degenerate") r.verdict = Verdict::degenerate;
  else throw Error(ErrorKind::parse, "unknown verdict '" + v + "'");
  if (!j.at("homology").is_null())
    r.homology = HomologyClass{j.at("homology").at("degree").get<long>(), j.at("homology").at("rank").get<std::uint64_t>()};
  r.note = j.value("note", "");
  return r;
}

json to_json(const SolveResult& r) {
  json j;
  j["beta"] = num(r.params.beta);
  j["rho"] = num(r.params.rho);
  j["residual"] = num(r.residual);
  j["energy"] = num(r.energy);
  j["classification"] = to_string(r.classification);
  j["morse_index"] = r.morse_index ? json(*r.morse_index) : json(nullptr);
  j["iterations"] = r.iterations;
  if (r.seed) j["seed"] = {{"lambda", num(r.seed->lambda)}, {"zeta", to_json(r.seed->zeta)}};
  else j["seed"] = nullptr;
  j["note"] = r.note;
  j["u"] = vec_json(r.u);
  return j;
}

SolveResult solve_result_from_json(const json& j) {
  SolveResult r;
  r.params = {get_real(j, "beta"), get_real(j, "rho")};
  r.residual = get_real(j, "residual");
  r.energy = get_real(j, "energy");
  r.classification = parse_classification(j.at("classification").get<std::string>());
  if (!j.at("morse_index").is_null()) r.morse_index = j.at("morse_index").get<Eigen::Index>();
  r.iterations = j.at("iterations").get<int>();
  if (!j.at("seed").is_null()) r.seed = TestConfig{get_real(j.at("seed"), "lambda"), join_point_from_json(j.at("seed").at("zeta"))};
  r.note = j.value("note", "");
  r.u = vec_from_json(j.at("u"));
  return r;
}

json to_json(const BlowupDiagnostic& d) {
  json c = json::array();
  for (const auto& x : d.candidates)
    c.push_back({{"x", num(x.point.x())}, {"y", num(x.point.y())}, {"local_mass", num(x.local_mass)}, {"tag", to_string(x.tag)}});
  return {{"candidates", c}, {"interpretation", to_string(d.interpretation)}};
}

std::string spectrum_csv(const vec& eigenvalues) {
  std::ostringstream os;
  os << "index,lambda\n";
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) os << i + 1 << ',' << fmt12(eigenvalues(i)) << '\n';
  return os.str();
}

std::string probe_csv(const std::vector<ProbeRow>& rows) {
  std::ostringstream os;
  os << "lambda,dirichlet,mean,logint,energy\n";
  for (const auto& r : rows)
    os << fmt12(r.lambda) << ',' << fmt12(r.dirichlet) << ',' << fmt12(r.mean) << ',' << fmt12(r.logint) << ','
       << fmt12(r.energy) << '\n';
  return os.str();
}

std::string continuation_csv(const FeSpace& space, const ContinuationResult& c) {
  std::ostringstream os;
  os << "step,beta,rho,classification,residual,energy,h1\n";
  for (std::size_t s = 0; s < c.steps.size(); ++s) {
    const auto& r = c.steps[s];
    os << s << ',' << fmt12(r.params.beta) << ',' << fmt12(r.params.rho) << ',' << to_string(r.classification) << ','
       << fmt12(r.residual) << ',' << fmt12(r.energy) << ',' << fmt12(space.h1_norm(r.u)) << '\n';
  }
  return os.str();
}

std::string render_report(const ConditionReport& r) {
  std::ostringstream os;
  os << "beta        " << fmt12(r.params.beta) << '\n'
     << "rho         " << fmt12(r.params.rho) << '\n'
     << "area        " << fmt12(r.area) << '\n'
     << "genus       " << r.genus << '\n';
  if (r.indices) os << "K, I, J     " << r.indices->k << ", " << r.indices->i << ", " << r.indices->j << '\n';
  else os << "K, I, J     -\n";
  os << "resonance   rho=" << r.resonant.rho << " beta=" << r.resonant.beta << " beta-rho/area=" << r.resonant.beta_shift << '\n';
  if (r.homology) os << "homology    rank " << r.homology->rank << " in degree " << r.homology->degree << '\n';
  else os << "homology    -\n";
  os << "verdict     " << to_string(r.verdict) << '\n';
  if (!r.note.empty()) os << "note        " << r.note << '\n';
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(ErrorKind::io, "cannot write '" + path + "'");
}

}  // namespace ks
