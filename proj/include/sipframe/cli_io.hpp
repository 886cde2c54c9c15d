#ifndef SIPFRAME_CLI_IO_HPP_
#define SIPFRAME_CLI_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sipframe/sipframe.hpp"

// Problem specs in, reports out.
//
// A spec is a JSON object with "schema": 1. Exponents are decimal strings,
// complex numbers are [re, im] (a bare number is read as a real), vectors are
// arrays of complex numbers and matrices are arrays of rows. A report is an
// ordered JSON object; non-finite numbers are stored as the strings "inf",
// "-inf" and "nan" so that every report survives a parse/dump round trip.

namespace sipframe::io {

using json = nlohmann::ordered_json;

constexpr int kSchema = 1;

// A spec that does not match the schema; the message starts with the field.
class SchemaError : public PreconditionError {
public:
  SchemaError(const std::string &field, const std::string &what)
      : PreconditionError(field + ": " + what) {}
};

enum class Task { Axioms, Certify, Reconstruct, Perturb, Sample };

inline std::string to_string(Task t) {
  switch (t) {
  case Task::Axioms:
    return "axioms";
  case Task::Certify:
    return "certify";
  case Task::Reconstruct:
    return "reconstruct";
  case Task::Perturb:
    return "perturb";
  case Task::Sample:
    return "sample";
  }
  return "unknown";
}

inline Task parse_task(const std::string &s, const std::string &field = "task") {
  for (Task t : {Task::Axioms, Task::Certify, Task::Reconstruct, Task::Perturb, Task::Sample}) {
    if (to_string(t) == s) {
      return t;
    }
  }
  throw SchemaError(field, "unknown task '" + s + "'");
}

struct FamilySpec {
  cmat synthesis; // columns are members
  double p_d = 2.0;
};

struct PerturbSpec {
  FamilySpec family;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

struct RkbsSpec {
  std::vector<std::string> points;
  cmat features;
  std::optional<double> p_d;
  std::vector<std::string> pattern;
};

struct ProblemSpec {
  Task task = Task::Certify;
  std::uint64_t seed = 0;
  double p = 2.0;
  rvec weights;
  std::optional<FamilySpec> family;
  std::optional<cmat> K;
  std::optional<PerturbSpec> perturb;
  std::optional<RkbsSpec> rkbs;
  std::optional<cvec> target;
  int restarts = 64;
  int threads = 1;
  int oracle_resolution = 0;
  int draws = 1000;
  int samples = 200;
  Tolerances tol;
  json source;

  SipSpace space() const { return SipSpace(p, weights); }
  Index dim() const { return weights.size(); }
  LinearOperator op() const { return K ? LinearOperator{*K} : LinearOperator::identity(dim()); }
  FrameFamily frame_family() const {
    require(family.has_value(), "family: required for task " + to_string(task));
    return FrameFamily(space(), family->synthesis, family->p_d);
  }
  CertifyOptions options() const {
    CertifyOptions o;
    o.optimizer.seed = seed;
    o.optimizer.restarts = restarts;
    o.optimizer.threads = threads;
    o.tol = tol;
    o.oracle_resolution = oracle_resolution;
    return o;
  }
};

namespace detail {

inline const json &field(const json &obj, const std::string &key, const std::string &path) {
  if (!obj.is_object()) {
    throw SchemaError(path.empty() ? "spec" : path, "expected an object");
  }
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(path.empty() ? key : path + "." + key, "missing required field");
  }
  return *it;
}

inline std::string join(const std::string &path, const std::string &key) {
  return path.empty() ? key : path + "." + key;
}

inline std::string at(const std::string &path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

inline double parse_decimal(const json &j, const std::string &path) {
  if (!j.is_string()) {
    throw SchemaError(path, "expected a decimal string such as \"1.5\"");
  }
  const std::string s = j.get<std::string>();
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    throw SchemaError(path, "'" + s + "' is not a finite decimal number");
  }
  return v;
}

// decimal string or JSON number
inline double parse_real(const json &j, const std::string &path) {
  if (j.is_string()) {
    return parse_decimal(j, path);
  }
  if (!j.is_number()) {
    throw SchemaError(path, "expected a number");
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    throw SchemaError(path, "expected a finite number");
  }
  return v;
}

inline int parse_count(const json &j, const std::string &path, int lo) {
  if (!j.is_number_integer() || j.get<long long>() < lo || j.get<long long>() > (1 << 30)) {
    throw SchemaError(path, "expected an integer >= " + std::to_string(lo));
  }
  return j.get<int>();
}

inline cplx parse_complex(const json &j, const std::string &path) {
  if (j.is_number()) {
    return {parse_real(j, path), 0.0};
  }
  if (!j.is_array() || j.size() != 2) {
    throw SchemaError(path, "expected a complex number [re, im]");
  }
  return {parse_real(j[0], at(path, 0)), parse_real(j[1], at(path, 1))};
}

inline cvec parse_cvec(const json &j, const std::string &path) {
  if (!j.is_array()) {
    throw SchemaError(path, "expected an array of complex numbers");
  }
  cvec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Index>(i)] = parse_complex(j[i], at(path, i));
  }
  return v;
}

// rows x cols; rows given as arrays
inline cmat parse_cmat(const json &j, const std::string &path) {
  if (!j.is_array() || j.empty()) {
    throw SchemaError(path, "expected a non-empty array of rows");
  }
  std::vector<cvec> rows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    rows.push_back(parse_cvec(j[i], at(path, i)));
    if (rows.back().size() != rows.front().size() || rows.back().size() == 0) {
      throw SchemaError(at(path, i), "rows must be non-empty and of equal length");
    }
  }
  cmat M(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    M.row(static_cast<Index>(i)) = rows[i].transpose();
  }
  return M;
}

inline FamilySpec parse_family(const json &j, const std::string &path, Index dim) {
  FamilySpec f;
  f.p_d = parse_decimal(field(j, "p_d", path), join(path, "p_d"));
  if (!(f.p_d > 1.0)) {
    throw SchemaError(join(path, "p_d"), "must satisfy 1 < p_d < infinity");
  }
  const json &members = field(j, "members", path);
  const std::string mpath = join(path, "members");
  if (!members.is_array() || members.empty()) {
    throw SchemaError(mpath, "the family must not be empty");
  }
  f.synthesis.resize(dim, static_cast<Index>(members.size()));
  for (std::size_t k = 0; k < members.size(); ++k) {
    const cvec v = parse_cvec(members[k], at(mpath, k));
    if (v.size() != dim) {
      throw SchemaError(at(mpath, k), "expected " + std::to_string(dim) + " coordinates, got " +
                                          std::to_string(v.size()));
    }
    f.synthesis.col(static_cast<Index>(k)) = v;
  }
  return f;
}

inline std::vector<std::string> parse_labels(const json &j, const std::string &path) {
  if (!j.is_array() || j.empty()) {
    throw SchemaError(path, "expected a non-empty array of point labels");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) {
      throw SchemaError(at(path, i), "expected a string label");
    }
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

inline void parse_tolerances(const json &j, Tolerances &tol) {
  struct Entry {
    const char *name;
    double Tolerances::*member;
  };
  static const Entry entries[] = {
      {"conjugate_exponent", &Tolerances::conjugate_exponent},
      {"refute_ratio", &Tolerances::refute_ratio},
      {"ratio_change", &Tolerances::ratio_change},
      {"grid_error", &Tolerances::grid_error},
      {"rank_rel", &Tolerances::rank_rel},
      {"span_membership", &Tolerances::span_membership},
      {"first_order", &Tolerances::first_order},
      {"irls_eps_start", &Tolerances::irls_eps_start},
      {"irls_eps_floor", &Tolerances::irls_eps_floor},
      {"reconstruction", &Tolerances::reconstruction},
      {"local_reproduction", &Tolerances::local_reproduction},
      {"premise_slack", &Tolerances::premise_slack},
      {"bessel_slack", &Tolerances::bessel_slack},
      {"lower_bound_slack", &Tolerances::lower_bound_slack},
      {"sandwich_slack", &Tolerances::sandwich_slack},
      {"transformed_slack", &Tolerances::transformed_slack},
  };
  if (!j.is_object()) {
    throw SchemaError("tolerances", "expected an object");
  }
  for (const auto &[key, value] : j.items()) {
    const std::string path = "tolerances." + key;
    if (key == "irls_max_iterations") {
      tol.irls_max_iterations = parse_count(value, path, 1);
      continue;
    }
    bool known = false;
    for (const Entry &e : entries) {
      if (key == e.name) {
        const double v = parse_real(value, path);
        if (!(v > 0.0)) {
          throw SchemaError(path, "must be positive");
        }
        tol.*(e.member) = v;
        known = true;
      }
    }
    if (!known) {
      throw SchemaError(path, "unknown tolerance");
    }
  }
}

} // namespace detail

inline ProblemSpec parse_spec(const json &j) {
  using namespace detail;
  if (!j.is_object()) {
    throw SchemaError("spec", "expected a JSON object");
  }
  const json &schema = field(j, "schema", "");
  if (!schema.is_number_integer() || schema.get<int>() != kSchema) {
    throw SchemaError("schema", "unsupported schema version (expected " +
                                    std::to_string(kSchema) + ")");
  }
  ProblemSpec s;
  s.source = j;
  const json &task = field(j, "task", "");
  if (!task.is_string()) {
    throw SchemaError("task", "expected a string");
  }
  s.task = parse_task(task.get<std::string>());
  const json &seed = field(j, "seed", "");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    throw SchemaError("seed", "expected a nonnegative integer");
  }
  s.seed = seed.get<std::uint64_t>();

  const json &space = field(j, "space", "");
  const json &dim = field(space, "dim", "space");
  const Index n = parse_count(dim, "space.dim", 1);
  s.p = parse_decimal(field(space, "p", "space"), "space.p");
  if (!(s.p > 1.0)) {
    throw SchemaError("space.p", "must satisfy 1 < p < infinity");
  }
  s.weights = rvec::Ones(n);
  if (space.contains("weights")) {
    const json &w = space["weights"];
    if (!w.is_array() || static_cast<Index>(w.size()) != n) {
      throw SchemaError("space.weights", "expected " + std::to_string(n) + " positive numbers");
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      s.weights[static_cast<Index>(i)] = parse_real(w[i], at("space.weights", i));
      if (!(s.weights[static_cast<Index>(i)] > 0.0)) {
        throw SchemaError(at("space.weights", i), "weights must be positive");
      }
    }
  }

  if (j.contains("family")) {
    s.family = parse_family(j["family"], "family", n);
  }
  if (j.contains("operator")) {
    s.K = parse_cmat(j["operator"], "operator");
    if (s.K->rows() != n || s.K->cols() != n) {
      throw SchemaError("operator", "expected a " + std::to_string(n) + " x " +
                                        std::to_string(n) + " matrix");
    }
  }
  if (j.contains("target")) {
    s.target = parse_cvec(j["target"], "target");
    if (s.target->size() != n) {
      throw SchemaError("target", "expected " + std::to_string(n) + " coordinates");
    }
  }
  if (j.contains("perturb")) {
    const json &pj = j["perturb"];
    PerturbSpec ps;
    ps.family = parse_family(field(pj, "family", "perturb"), "perturb.family", n);
    ps.alpha = parse_real(field(pj, "alpha", "perturb"), "perturb.alpha");
    ps.beta = parse_real(field(pj, "beta", "perturb"), "perturb.beta");
    ps.gamma = parse_real(field(pj, "gamma", "perturb"), "perturb.gamma");
    const std::pair<const char *, double> constants[] = {
        {"alpha", ps.alpha}, {"beta", ps.beta}, {"gamma", ps.gamma}};
    for (const auto &[name, v] : constants) {
      if (v < 0.0) {
        throw SchemaError(std::string("perturb.") + name, "must be nonnegative");
      }
    }
    s.perturb = ps;
  }
  if (j.contains("rkbs")) {
    const json &rj = j["rkbs"];
    RkbsSpec rs;
    rs.points = parse_labels(field(rj, "points", "rkbs"), "rkbs.points");
    rs.features = parse_cmat(field(rj, "features", "rkbs"), "rkbs.features");
    if (rs.features.rows() != static_cast<Index>(rs.points.size()) || rs.features.cols() != n) {
      throw SchemaError("rkbs.features", "expected " + std::to_string(rs.points.size()) + " x " +
                                             std::to_string(n) + " (points x space.dim)");
    }
    if (rj.contains("p_d")) {
      rs.p_d = parse_decimal(rj["p_d"], "rkbs.p_d");
      if (!(*rs.p_d > 1.0)) {
        throw SchemaError("rkbs.p_d", "must satisfy 1 < p_d < infinity");
      }
    }
    rs.pattern = parse_labels(field(rj, "pattern", "rkbs"), "rkbs.pattern");
    for (std::size_t i = 0; i < rs.pattern.size(); ++i) {
      if (std::find(rs.points.begin(), rs.points.end(), rs.pattern[i]) == rs.points.end()) {
        throw SchemaError(at("rkbs.pattern", i), "unknown point '" + rs.pattern[i] + "'");
      }
    }
    s.rkbs = rs;
  }

  if (j.contains("optimizer")) {
    const json &o = j["optimizer"];
    if (o.contains("restarts")) {
      s.restarts = parse_count(o["restarts"], "optimizer.restarts", 0);
    }
    if (o.contains("oracle_resolution")) {
      s.oracle_resolution = parse_count(o["oracle_resolution"], "optimizer.oracle_resolution", 0);
    }
    if (o.contains("draws")) {
      s.draws = parse_count(o["draws"], "optimizer.draws", 1);
    }
    if (o.contains("samples")) {
      s.samples = parse_count(o["samples"], "optimizer.samples", 1);
    }
  }
  if (j.contains("tolerances")) {
    parse_tolerances(j["tolerances"], s.tol);
  }

  switch (s.task) {
  case Task::Axioms:
    break;
  case Task::Certify:
  case Task::Reconstruct:
    if (!s.family) {
      throw SchemaError("family", "missing required field for task " + to_string(s.task));
    }
    break;
  case Task::Perturb:
    if (!s.family) {
      throw SchemaError("family", "missing required field for task perturb");
    }
    if (!s.perturb) {
      throw SchemaError("perturb", "missing required field for task perturb");
    }
    break;
  case Task::Sample:
    if (!s.rkbs) {
      throw SchemaError("rkbs", "missing required field for task sample");
    }
    break;
  }
  return s;
}

inline ProblemSpec parse_spec(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw SchemaError("spec", std::string("invalid JSON: ") + e.what());
  }
  return parse_spec(j);
}

// ---------------------------------------------------------------------------
// Report

struct Report {
  json body;

  // column names and rows for the CSV form, kept inside body["series"]
  const json &series() const { return body.at("series"); }
};

inline json number(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  return v;
}

inline json complex_json(cplx z) { return json::array({number(z.real()), number(z.imag())}); }

inline json vector_json(const cvec &v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) {
    a.push_back(complex_json(v[i]));
  }
  return a;
}

inline json matrix_json(const cmat &M) {
  json a = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    a.push_back(vector_json(M.row(i).transpose()));
  }
  return a;
}

inline json optional_number(const std::optional<double> &v) {
  return v ? number(*v) : json(nullptr);
}

inline json strings_json(const std::vector<std::string> &v) {
  json a = json::array();
  for (const std::string &s : v) {
    a.push_back(s);
  }
  return a;
}

inline json certification_json(const CertificationReport &r, const Tolerances &tol) {
  json o;
  o["verdict"] = to_string(r.verdict);
  o["A_est"] = number(r.A_est);
  o["B_est"] = number(r.B_est);
  o["witness_lower"] = vector_json(r.witness_lower.action);
  o["witness_upper"] = vector_json(r.witness_upper.action);
  o["oracle_A"] = optional_number(r.oracle_A);
  o["oracle_B"] = optional_number(r.oracle_B);
  if (r.oracle_A && r.oracle_B) {
    const bool a_ok = std::isinf(r.A_est) ? std::isinf(*r.oracle_A)
                                          : std::abs(r.A_est - *r.oracle_A) <= tol.grid_error;
    o["oracle_agrees"] = a_ok && std::abs(r.B_est - *r.oracle_B) <= tol.grid_error;
  }
  o["K_norm_est"] = number(r.K_norm_est);
  o["sanity_ok"] = r.sanity_ok;
  o["restarts_used"] = r.restarts_used;
  o["converged"] = r.converged;
  o["notes"] = strings_json(r.notes);
  return o;
}

inline json make_series(std::vector<std::string> columns) {
  json s;
  s["columns"] = strings_json(columns);
  s["rows"] = json::array();
  return s;
}

namespace detail {

inline cvec seeded_vector(std::uint64_t seed, Index n) {
  return unpack(random_start(2 * n, seed));
}

inline json run_axioms(const ProblemSpec &s, json &series) {
  const SipSpace space = s.space();
  json out;
  json checks = json::array();
  bool passed = true;
  series = make_series({"check", "worst", "tolerance", "passed"});
  for (const AxiomCheck &c : check_axioms(space, s.draws, split_seed(s.seed, 0x4158))) {
    json e;
    e["name"] = c.name;
    e["worst"] = number(c.worst);
    e["tolerance"] = number(c.tolerance);
    e["passed"] = c.passed;
    checks.push_back(e);
    series["rows"].push_back(json::array({c.name, number(c.worst), number(c.tolerance), c.passed}));
    passed = passed && c.passed;
  }
  out["draws"] = s.draws;
  out["checks"] = checks;
  if (s.family) {
    const AdjointCheck adj = adjoint_check(s.frame_family(), split_seed(s.seed, 0x4144));
    out["adjoint"] = {{"max_residual", number(adj.max_residual)}, {"passed", adj.passed}};
    series["rows"].push_back(
        json::array({"adjoint", number(adj.max_residual), number(1e-9), adj.passed}));
    passed = passed && adj.passed;
  }
  out["passed"] = passed;
  return out;
}

inline json run_certify(const ProblemSpec &s, json &series) {
  const FrameFamily fam = s.frame_family();
  const LinearOperator K = s.op();
  CertifyOptions opts = s.options();
  opts.oracle_resolution = 0;
  const LinearOperator I = LinearOperator::identity(fam.dim());
  CertificationReport frame = certify_k_frame(fam, I, opts);
  CertificationReport kframe = certify_k_frame(fam, K, opts);
  if (s.oracle_resolution > 0) {
    // one grid pass serves both operators
    const std::vector<OracleValues> o = grid_oracle(fam, {I, K}, s.oracle_resolution);
    frame.oracle_A = o[0].A;
    frame.oracle_B = o[0].B;
    kframe.oracle_A = K.is_zero() ? std::numeric_limits<double>::infinity() : o[1].A;
    kframe.oracle_B = o[1].B;
  }
  json out;
  out["frame"] = certification_json(frame, s.tol);
  out["k_frame"] = certification_json(kframe, s.tol);

  // lower ratio ||T f*|| / ||K* f*|| along seeded directions, for plotting
  series = make_series({"direction_index", "ratio"});
  const HomogeneousRatio ratio = lower_frame_ratio(fam, K);
  for (int i = 0; i < s.samples; ++i) {
    const cvec d = seeded_vector(split_seed(s.seed, 0x5352 + static_cast<std::uint64_t>(i)),
                                 fam.dim());
    series["rows"].push_back(json::array({i, number(ratio.value(d))}));
  }
  return out;
}

inline json run_reconstruct(const ProblemSpec &s, json &series) {
  const FrameFamily fam = s.frame_family();
  const LinearOperator K = s.op();
  const CertifyOptions opts = s.options();
  const EquivalenceReport eq = equivalence_harness(fam, K, opts);
  json out;
  out["atomic"] = eq.atomic;
  out["k_frame"] = eq.k_frame;
  out["dual_family"] = eq.dual_family;
  out["agree"] = eq.agree;
  out["range_inclusion"] = eq.range_inclusion;
  out["C"] = number(eq.C.value);
  out["C_witness"] = vector_json(eq.C.witness.coords);
  out["certificate"] = certification_json(eq.certificate, s.tol);
  out["reconstruction_residual"] = number(eq.reconstruction_residual);
  out["reconstruction_witness"] = vector_json(eq.reconstruction_witness.action);
  out["infeasible_witness"] =
      eq.infeasible_witness ? vector_json(eq.infeasible_witness->coords) : json(nullptr);
  out["failures"] = strings_json(eq.failures);

  // minimum-norm expansion of K f for the given (or a seeded) f
  series = make_series({"iteration", "objective"});
  if (eq.atomic) {
    const Vector f{s.target ? *s.target : seeded_vector(split_seed(s.seed, 0x5447), fam.dim())};
    const MinNormResult mn =
        min_norm_solve(fam.synthesis(), K.entries * f.coords, fam.coeff_exponent(), s.tol);
    const double a_norm = coeff_norm(fam, mn.coeffs);
    const double f_norm = norm(fam.space(), f);
    json e;
    e["f"] = vector_json(f.coords);
    e["coefficients"] = vector_json(mn.coeffs.values);
    e["coefficient_norm"] = number(a_norm);
    e["bound"] = number(eq.C.value * f_norm);
    e["bound_ok"] = a_norm <= eq.C.value * f_norm * (1.0 + 1e-6) + 1e-300;
    e["synthesis_residual"] =
        number((fam.synthesis() * mn.coeffs.values - K.entries * f.coords).norm() /
               std::max((K.entries * f.coords).norm(), 1e-300));
    e["iterations"] = mn.iterations;
    e["first_order_residual"] = number(mn.first_order_residual);
    out["expansion"] = e;
    for (std::size_t i = 0; i < mn.objective_trace.size(); ++i) {
      series["rows"].push_back(json::array({i, number(mn.objective_trace[i])}));
    }
  } else {
    out["expansion"] = nullptr;
  }
  return out;
}

inline json run_perturb(const ProblemSpec &s, json &series) {
  const FrameFamily f = s.frame_family();
  const FrameFamily g(s.space(), s.perturb->family.synthesis, s.perturb->family.p_d);
  const PerturbationInstance inst{f, g, s.op(), s.perturb->alpha, s.perturb->beta,
                                  s.perturb->gamma};
  inst.validate();
  const CertifyOptions opts = s.options();
  json out;
  const PremiseReport premise = verify_premise(inst, opts);
  out["premise"] = {{"M", number(premise.M)},
                    {"M_oracle", optional_number(premise.M_oracle)},
                    {"witness", vector_json(premise.witness.values)},
                    {"holds", premise.holds},
                    {"certified_by", premise.certified_by}};
  const CertificationReport cert = certify_k_frame(f, inst.K, opts);
  out["certificate"] = certification_json(cert, s.tol);
  const PseudoInverse dag = pseudo_inverse(inst.K, f.space(), opts);
  out["dagger_norm"] = number(dag.norm_est);
  out["range_hermitian"] = dag.range_hermitian;

  const bool certified = cert.verdict == Verdict::KFrame && cert.A_est > 0.0;
  const bool small = certified && smallness_condition(inst, cert.A_est, dag);
  out["theta"] = certified ? number(perturbation_theta(inst, cert.A_est, dag)) : json(nullptr);
  out["smallness"] = small;

  series = make_series({"quantity", "value"});
  auto row = [&series](const std::string &name, double v) {
    series["rows"].push_back(json::array({name, number(v)}));
  };
  row("M", premise.M);
  row("A", cert.A_est);
  row("B", cert.B_est);
  row("dagger_norm", dag.norm_est);

  if (!certified || !premise.holds || !small || !(inst.beta < 1.0)) {
    std::string why = !certified          ? "{f_j} is not certified as a K-frame"
                      : !premise.holds    ? "the premise does not hold"
                      : !(inst.beta < 1.0) ? "beta must be < 1"
                                          : "the smallness condition does not hold";
    out["conclusion"] = nullptr;
    out["skipped"] = why;
    return out;
  }
  const ConclusionReport c = verify_conclusion(inst, opts, s.samples);
  json cj;
  cj["A"] = number(c.A);
  cj["B"] = number(c.B);
  cj["K_norm"] = number(c.K_norm);
  cj["theta"] = number(c.theta);
  cj["B_g"] = number(c.B_g);
  cj["B_g_bound"] = number(c.B_g_bound);
  cj["bessel_ok"] = c.bessel_ok;
  cj["projection_checked"] = c.projection_checked;
  if (c.projection_checked) {
    cj["P"] = matrix_json(c.P.entries);
    cj["P_norm"] = number(c.P_norm);
    cj["pk_certificate"] = certification_json(c.pk_certificate, s.tol);
    cj["lower_formula"] = number(c.lower_formula);
    cj["lower_formula_literal"] = number(c.lower_formula_literal);
    cj["lower_ok"] = c.lower_ok;
  }
  cj["sandwich_lower"] = number(c.sandwich_lower);
  cj["sandwich_upper"] = number(c.sandwich_upper);
  cj["worst_lower_ratio"] = number(c.worst_lower_ratio);
  cj["worst_upper_ratio"] = number(c.worst_upper_ratio);
  cj["sandwich_witness"] = vector_json(c.sandwich_witness.action);
  cj["sandwich_ok"] = c.sandwich_ok;
  cj["notes"] = strings_json(c.notes);
  cj["passed"] = c.passed;
  out["conclusion"] = cj;
  row("B_g", c.B_g);
  row("B_g_bound", c.B_g_bound);
  row("worst_lower_ratio", c.worst_lower_ratio);
  row("worst_upper_ratio", c.worst_upper_ratio);
  return out;
}

inline std::string plain_text(double v) {
  const json j = number(v);
  return j.is_string() ? j.get<std::string>() : j.dump();
}

inline std::string complex_text(cplx z) {
  return plain_text(z.real()) + (std::signbit(z.imag()) ? "-" : "+") +
         plain_text(std::abs(z.imag())) + "j";
}

inline json run_sample(const ProblemSpec &s, json &series) {
  const RkbsSpec &rs = *s.rkbs;
  const SipSpace coeff = s.space();
  const DiscreteRkbs space(rs.points, rs.features, coeff, rs.p_d.value_or(coeff.p()));
  SamplingPattern Z;
  for (const std::string &label : rs.pattern) {
    Z.indices.push_back(space.index_of(label));
  }
  const LinearOperator K = s.op();
  const CertifyOptions opts = s.options();
  json out;
  const CertificationReport cert = sampled_frame_certify(space, Z, K, opts);
  out["certificate"] = certification_json(cert, s.tol);

  const DualVector fstar{s.target ? *s.target
                                  : seeded_vector(split_seed(s.seed, 0x4653), coeff.dim())};
  const CoeffDualVector samples = sampling_operator(space, Z, fstar);
  out["fstar"] = vector_json(fstar.action);
  out["samples"] = vector_json(samples.values);

  series = make_series({"point", "true_value", "reconstructed", "abs_error"});
  if (cert.verdict != Verdict::KFrame) {
    out["reconstruction"] = nullptr;
    out["skipped"] = "the sampling family is not certified as a K-frame";
    return out;
  }
  const DualVector g = reconstruct_from_samples(space, Z, K, samples, opts);
  const DualVector want = K.adjoint(fstar);
  const double residual =
      (g.action - want.action).norm() / std::max(want.action.norm(), 1e-300);
  out["reconstruction"] = vector_json(g.action);
  out["target"] = vector_json(want.action);
  out["relative_residual"] = number(residual);
  out["residual_ok"] = residual <= s.tol.reconstruction;
  for (Index t = 0; t < space.size(); ++t) {
    const cplx a = space.evaluate(want, t);
    const cplx b = space.evaluate(g, t);
    series["rows"].push_back(json::array({space.points()[static_cast<std::size_t>(t)],
                                          complex_json(a), complex_json(b),
                                          number(std::abs(a - b))}));
  }
  return out;
}

} // namespace detail

inline const char *sip_convention() {
  return "[g, h] = ||h||^{2-p} sum_j w_j g_j conj(h_j) |h_j|^{p-2}; functionals act "
         "without conjugation, d(g) = sum_j d_j g_j";
}

// Deterministic given (spec, seed); independent of spec.threads.
inline Report run(const ProblemSpec &s) {
  Report r;
  json &b = r.body;
  b["tool"] = "sipframe";
  b["version"] = kVersion;
  b["schema"] = kSchema;
  b["task"] = to_string(s.task);
  b["seed"] = s.seed;
  b["restarts"] = s.restarts;
  b["oracle_resolution"] = s.oracle_resolution;
  b["convention"] = sip_convention();
  b["spec"] = s.source;
  json series;
  switch (s.task) {
  case Task::Axioms:
    b["result"] = detail::run_axioms(s, series);
    break;
  case Task::Certify:
    b["result"] = detail::run_certify(s, series);
    break;
  case Task::Reconstruct:
    b["result"] = detail::run_reconstruct(s, series);
    break;
  case Task::Perturb:
    b["result"] = detail::run_perturb(s, series);
    break;
  case Task::Sample:
    b["result"] = detail::run_sample(s, series);
    break;
  }
  b["series"] = series;
  return r;
}

inline std::string emit_json(const Report &r) { return r.body.dump(2) + "\n"; }

inline Report parse_report(const std::string &text) { return {json::parse(text)}; }

namespace detail {

inline std::string csv_cell(const json &v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) {
      return s;
    }
    std::string q = "\"";
    for (char c : s) {
      q += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return q + "\"";
  }
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return complex_text({v[0].get<double>(), v[1].get<double>()});
  }
  return v.dump();
}

} // namespace detail

// Complex cells are written as re+imj.
inline std::string emit_csv(const Report &r) {
  const json &s = r.series();
  std::string out;
  const json &cols = s.at("columns");
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out += (i ? "," : "") + cols[i].get<std::string>();
  }
  out += "\n";
  for (const json &row : s.at("rows")) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += (i ? "," : "") + detail::csv_cell(row[i]);
    }
    out += "\n";
  }
  return out;
}

enum class ExitCode { Ok = 0, Validation = 1, Numerical = 2 };

} // namespace sipframe::io

#endif // SIPFRAME_CLI_IO_HPP_
