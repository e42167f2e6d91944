#include "stiefel/cli.hpp"

#include "stiefel/classical_compare.hpp"
#include "stiefel/vec.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace stiefel::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<double, 5> kAlphaTable = {-3.0, -0.5, 0.5, 1.0, 2.0};
constexpr double kZeroDefect = 1e-12;

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw InputError(what + ": expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InputError(what + ": expected " + std::to_string(cols) + " columns in row " + std::to_string(i));
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw InputError(what + ": non-numeric entry");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(row);
  }
  return rows;
}

// NaN and inf are not representable in JSON.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("field '") + key + "' has the wrong type");
  }
}

struct Check {
  std::string name;
  double value;
  double limit;
  bool pass() const { return value <= limit; }  // NaN fails
};

struct Report {
  json body = json::object();
  std::vector<Check> checks;
  std::vector<std::string> messages;

  void add(std::string name, double value, double limit) { checks.push_back({std::move(name), value, limit}); }
  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass()) return false;
    return true;
  }

  json to_json(double runtime) const {
    json j = body;
    json cs = json::array();
    for (const auto& c : checks)
      cs.push_back({{"name", c.name}, {"value", number(c.value)}, {"limit", c.limit}, {"pass", c.pass()}});
    j["checks"] = cs;
    j["messages"] = messages;
    j["pass"] = pass();
    j["runtime_seconds"] = runtime;
    return j;
  }

  void print(std::ostream& out) const {
    char buf[256];
    for (const auto& c : checks) {
      std::snprintf(buf, sizeof buf, "%s %-26s %.3e <= %.1e\n", c.pass() ? "PASS" : "FAIL", c.name.c_str(), c.value,
                    c.limit);
      out << buf;
    }
    for (const auto& m : messages) out << "note: " << m << "\n";
  }
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

LieAlgPair control_xi(const InstanceSpec& spec) {
  if (spec.control == ControlType::ConstantXi) return *spec.xi;
  if (spec.control == ControlType::RandomSeeded) return random_xi(spec.n, spec.k, spec.seed);
  throw InputError("a sampled-file control does not define a one-parameter subgroup");
}

AlphaParam effective_alpha(const InstanceSpec& spec) {
  try {
    return AlphaParam(spec.mode == Mode::Extrinsic ? -0.5 : spec.alpha);
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
}

// Five-point derivative of the development pulled back to X and lifted; constant for geodesics.
double parallel_velocity_drift(const SpecialCurveRolling& sc, const StiefelPoint& x, const AlphaParam& a,
                               double t_end) {
  const double h = 1e-3;
  auto velocity = [&](double t) {
    const Matrix d = (sc.development(t - 2 * h) - 8.0 * sc.development(t - h) + 8.0 * sc.development(t + h) -
                      sc.development(t + 2 * h)) /
                     (12.0 * h);
    const GroupPair q = sc.q(t);
    return lift_matrix(x, a, q.r().transpose() * d * q.theta());
  };
  const LieAlgPair z0 = velocity(0.0);
  double drift = 0.0;
  for (int i = 1; i <= 10; ++i) drift = std::max(drift, (velocity(t_end * i / 10.0) - z0).norm());
  return drift;
}

std::vector<Matrix> tangent_probes(const ReductiveFrame& f) {
  std::vector<Matrix> out;
  for (int i = 0; i < f.dim(); ++i) out.push_back(f.tangent_of_coords(Vector::Unit(f.dim(), i)));
  return out;
}

void add_rolling_checks(Report& r, const RollingTrajectory& traj, double tol, double drift_limit,
                        double s_drift_limit) {
  const auto tp = tangent_probes(*traj.frame);
  std::vector<Matrix> np;
  if (traj.extrinsic()) np = traj.normal_frame->basis();
  const double slip = verify_no_slip(traj);
  const NoTwistResidual nt = verify_no_twist(traj, tp, np);
  const auto& d = traj.diagnostics;

  r.add("no_slip", slip, tol);
  r.add("no_twist_tangential", nt.tangential, tol);
  if (nt.normal_checked) r.add("no_twist_normal", nt.normal, tol);
  r.add("s_orthogonality", d.s_drift, s_drift_limit);
  r.add("q_orthogonality", d.q_drift, drift_limit);
  if (traj.extrinsic()) {
    r.add("t_orthogonality", d.t_drift, drift_limit);
    r.add("normal_fix", d.normal_fix, 1e-9);
  }
  r.add("truncated", d.truncated ? 1.0 : 0.0, 0.0);

  r.body["no_slip_residual"] = number(slip);
  r.body["no_twist"] = {{"tangential", number(nt.tangential)},
                        {"normal", nt.normal_checked ? number(nt.normal) : json(nullptr)}};
  r.body["drift"] = {{"s", number(d.s_drift)}, {"q", number(d.q_drift)}};
  if (traj.extrinsic()) {
    r.body["drift"]["t"] = number(d.t_drift);
    r.body["drift"]["normal_fix"] = number(d.normal_fix);
  }
  r.body["reprojections"] = d.reprojections;
  r.body["truncated"] = d.truncated;
  r.body["truncated_at"] = number(d.truncated_at);
  r.body["samples"] = traj.size();
  for (const auto& m : d.messages) r.messages.push_back(m);
}

void format_row(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, ",%.17g", v);
  line += buf;
}

json meta_for(const RollingTrajectory& traj, Mode mode) {
  return {{"format", "stiefel-trajectory/1"},
          {"n", traj.base().n()},
          {"k", traj.base().k()},
          {"alpha", traj.alpha().value()},
          {"base_point", matrix_to_json(traj.base().matrix())},
          {"mode", to_string(mode)},
          {"extrinsic", traj.extrinsic()}};
}

fs::path out_dir_or_throw(const std::string& dir) {
  const fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw InputError("cannot create output directory " + p.string());
  return p;
}

struct Overrides {
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  bool reproject = false;
};

InstanceSpec load_with_overrides(const std::string& path, const Overrides& o) {
  if (path.empty()) throw InputError("--instance is required");
  InstanceSpec spec = load_instance(path);
  if (o.steps) {
    if (*o.steps < 1) throw InputError("--steps must be positive");
    spec.steps = *o.steps;
  }
  if (o.seed) spec.seed = *o.seed;
  if (o.alpha) spec.alpha = *o.alpha;
  if (o.reproject) spec.reproject = true;
  if (spec.mode == Mode::Extrinsic && spec.alpha != -0.5) {
    spec.notes.push_back("extrinsic mode: alpha set to -0.5");
    spec.alpha = -0.5;
  }
  return spec;
}

json instance_summary(const InstanceSpec& spec) {
  return {{"n", spec.n}, {"k", spec.k}, {"alpha", spec.alpha}, {"mode", to_string(spec.mode)},
          {"t_end", spec.t_end}, {"steps", spec.steps}, {"reproject", spec.reproject}, {"seed", spec.seed}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- roll ----

int cmd_roll(const std::string& instance, const std::string& out_dir, const Overrides& o, double tol,
             std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const InstanceSpec spec = load_with_overrides(instance, o);
  const StiefelPoint x = spec.base();
  const AlphaParam a = effective_alpha(spec);
  const auto grid = uniform_grid(0.0, spec.t_end, spec.steps);
  IntegratorConfig cfg;
  cfg.steps = spec.steps;
  cfg.reproject = spec.reproject;

  Report rep;
  rep.body["command"] = "roll";
  rep.body["instance"] = instance_summary(spec);
  rep.messages = spec.notes;

  const bool ode = spec.mode == Mode::Intrinsic || spec.mode == Mode::Extrinsic;
  const bool with_normal = a.value() == -0.5;
  RollingTrajectory traj;
  std::optional<SpecialCurveRolling> sc;
  if (spec.control != ControlType::SampledFile) {
    LieAlgPair xi = control_xi(spec);
    if (spec.mode == Mode::Geodesic) xi = pr_p(x, a, xi);
    sc.emplace(xi, x, a);
  } else if (!ode) {
    throw InputError("closed-form and geodesic modes need a constant-xi or random-seeded control");
  }

  if (ode) {
    const ControlCurve u =
        sc ? ControlCurve::closure([&](double t) { return sc->frame()->element(sc->control_coords(t)); })
           : read_sampled_control(spec.control_path, spec.n, spec.k);
    try {
      traj = spec.mode == Mode::Extrinsic ? extrinsic_roll(x, u, grid, cfg) : intrinsic_roll(x, a, u, grid, cfg);
    } catch (const DomainError& e) {
      throw InputError(e.what());
    }
  } else {
    traj = sc->sample(grid, with_normal);
  }

  const double strict = ode && spec.reproject ? 1e-12 : 1e-7;
  const double s_strict = ode && spec.reproject && traj.frame->orthonormal() ? 1e-12 : 1e-7;
  add_rolling_checks(rep, traj, tol, strict, s_strict);

  if (ode && sc && !traj.diagnostics.truncated) {
    const RollingTrajectory ref = sc->sample(grid, spec.mode == Mode::Extrinsic);
    double dev = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      double d = (traj.q[i].r() - ref.q[i].r()).norm() + (traj.q[i].theta() - ref.q[i].theta()).norm() +
                 (traj.s[i] - ref.s[i]).norm();
      if (traj.extrinsic()) d += (traj.t[i] - ref.t[i]).norm();
      dev = std::max(dev, d);
    }
    rep.body["closed_form_deviation"] = number(dev);
    rep.add("closed_form_deviation", dev, 1e-5);
  }
  if (spec.mode == Mode::Geodesic) {
    const double drift = parallel_velocity_drift(*sc, x, a, spec.t_end);
    rep.body["parallel_velocity_drift"] = number(drift);
    rep.add("parallel_velocity_drift", drift, 1e-7);
  }

  const fs::path dir = out_dir_or_throw(out_dir);
  const std::string stem = fs::path(instance).stem().string();
  const fs::path csv = dir / (stem + ".csv");
  write_trajectory_csv(csv, traj);
  write_json(fs::path(csv.string() + ".meta.json"), meta_for(traj, spec.mode));
  const fs::path report = dir / (stem + ".report.json");
  write_json(report, rep.to_json(seconds_since(t0)));

  rep.print(out);
  out << "trajectory: " << csv.string() << "\nreport: " << report.string() << "\n";
  return rep.pass() ? kExitPass : kExitFail;
}

// ---- verify ----

int cmd_verify(const std::string& path, const std::string& out_dir, double tol, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  if (path.empty()) throw InputError("verify: trajectory path required");
  const RollingTrajectory traj = read_trajectory_csv(path);
  if (traj.size() < 3) throw InputError("verify: need at least 3 samples");

  Report rep;
  rep.body["command"] = "verify";
  rep.body["trajectory"] = path;
  add_rolling_checks(rep, traj, tol, 1e-7, 1e-7);
  double consistency = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i)
    consistency = std::max(consistency, max_abs(traj.development[i] - act(traj.q[i], traj.base().matrix())));
  rep.add("development_consistency", consistency, 1e-9);

  if (!out_dir.empty()) {
    const fs::path dir = out_dir_or_throw(out_dir);
    write_json(dir / (fs::path(path).stem().string() + ".verify.json"), rep.to_json(seconds_since(t0)));
  }
  rep.print(out);
  return rep.pass() ? kExitPass : kExitFail;
}

// ---- compare-classical ----

int cmd_compare(const std::string& instance, const std::string& out_dir, const Overrides& o, double tol,
                std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  InstanceSpec spec = load_with_overrides(instance, o);
  if (spec.base_point.size() != 0 &&
      max_abs(spec.base_point - StiefelPoint::canonical(spec.n, spec.k).matrix()) > 1e-12)
    throw InputError("compare-classical: base point must be E");
  if (spec.alpha != -0.5) spec.notes.push_back("compare-classical: alpha set to -0.5");
  spec.alpha = -0.5;
  const StiefelPoint e = StiefelPoint::canonical(spec.n, spec.k);
  const auto grid = uniform_grid(0.0, spec.t_end, spec.steps);
  IntegratorConfig cfg;
  cfg.steps = spec.steps;
  cfg.reproject = spec.reproject;

  RollingTrajectory traj;
  std::optional<SpecialCurveRolling> sc;
  if (spec.control != ControlType::SampledFile) {
    LieAlgPair xi = control_xi(spec);
    if (spec.mode == Mode::Geodesic) xi = pr_p(e, AlphaParam::euclidean(), xi);
    sc.emplace(xi, e, AlphaParam::euclidean());
  }
  if (sc && (spec.mode == Mode::ClosedForm || spec.mode == Mode::Geodesic)) {
    traj = sc->sample(grid, true);
  } else {
    const ControlCurve u =
        sc ? ControlCurve::closure([&](double t) { return sc->frame()->element(sc->control_coords(t)); })
           : read_sampled_control(spec.control_path, spec.n, spec.k);
    try {
      traj = extrinsic_roll(e, u, grid, cfg);
    } catch (const DomainError& err) {
      throw InputError(err.what());
    }
  }
  if (traj.diagnostics.truncated) throw IntegrationError("extrinsic run truncated", traj.diagnostics.truncated_at);

  const ClassicalComparison c = compare_classical(traj, cfg);
  Report rep;
  rep.body["command"] = "compare-classical";
  rep.body["instance"] = instance_summary(spec);
  rep.body["s_tilde_deviation"] = number(c.s_tilde_deviation);
  rep.body["e_invariance"] = number(c.e_invariance);
  rep.body["translation_ode_residual"] = number(c.translation_ode_residual);
  rep.body["rotational_consistency"] = number(c.rotational_consistency);
  rep.body["assembled_orthogonality"] = number(c.assembled_orthogonality);
  rep.body["identity_deviation"] = number(c.identity_deviation);
  rep.body["tangential_block_deviation"] = number(c.tangential_block_deviation);
  rep.messages = spec.notes;
  for (const auto& w : c.warnings) rep.messages.push_back(w);
  rep.add("s_tilde_deviation", c.s_tilde_deviation, tol);
  rep.add("e_invariance", c.e_invariance, 1e-9);
  rep.add("translation_ode_residual", c.translation_ode_residual, tol);
  rep.add("rotational_consistency", c.rotational_consistency, 1e-6);
  if (spec.k == 1) rep.add("tangential_block_identity", c.tangential_block_deviation, 1e-9);

  if (!out_dir.empty()) {
    const fs::path dir = out_dir_or_throw(out_dir);
    write_json(dir / (fs::path(instance).stem().string() + ".classical.json"), rep.to_json(seconds_since(t0)));
  }
  rep.print(out);
  return rep.pass() ? kExitPass : kExitFail;
}

// ---- bracket-defect ----

int cmd_bracket_defect(const std::string& instance, const std::string& out_dir, const Overrides& o,
                       std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const InstanceSpec spec = load_with_overrides(instance, o);
  const StiefelPoint x = spec.base();
  const bool at_e = max_abs(x.matrix() - StiefelPoint::canonical(spec.n, spec.k).matrix()) <= 1e-12;

  std::vector<double> alphas(kAlphaTable.begin(), kAlphaTable.end());
  if (o.alpha && std::find(alphas.begin(), alphas.end(), *o.alpha) == alphas.end()) alphas.push_back(*o.alpha);

  // B1 = ones, B2 = E_{1,2} (E_{1,1} when k = 1), embedded as block generators at E.
  std::optional<std::pair<LieAlgPair, LieAlgPair>> explicit_pair;
  if (at_e && spec.k < spec.n) {
    const Eigen::Index m = spec.n - spec.k;
    Matrix b2 = Matrix::Zero(m, spec.k);
    b2(0, std::min<Eigen::Index>(1, spec.k - 1)) = 1.0;
    explicit_pair.emplace(block_generator(spec.n, Matrix::Ones(m, spec.k)), block_generator(spec.n, b2));
  }

  json rows = json::array();
  char buf[160];
  std::snprintf(buf, sizeof buf, "%8s  %12s  %12s  %s\n", "alpha", "explicit", "frame_max", "verdict");
  out << buf;
  for (double av : alphas) {
    AlphaParam a(0.5);
    try {
      a = AlphaParam(av);
    } catch (const DomainError& e) {
      throw InputError(e.what());
    }
    const auto frame = reductive_frame(x, a);
    double frame_max = 0.0;
    const auto& basis = frame->basis();
    for (std::size_t i = 0; i < basis.size(); ++i)
      for (std::size_t j = i + 1; j < basis.size(); ++j) {
        const double d = bracket_defect(x, a, basis[i], basis[j]).norm() / (basis[i].norm() * basis[j].norm());
        frame_max = std::max(frame_max, d);
      }
    double expl = std::numeric_limits<double>::quiet_NaN();
    if (explicit_pair) expl = bracket_defect(x, a, explicit_pair->first, explicit_pair->second).norm();
    const bool vanishes = frame_max <= kZeroDefect;
    rows.push_back({{"alpha", av},
                    {"explicit", number(expl)},
                    {"frame_max", frame_max},
                    {"vanishes", vanishes}});
    char ex[32] = "n/a";
    if (explicit_pair) std::snprintf(ex, sizeof ex, "%.4e", expl);
    std::snprintf(buf, sizeof buf, "%8.3g  %12s  %12.4e  %s\n", av, ex, frame_max, vanishes ? "zero" : "nonzero");
    out << buf;
  }

  if (!out_dir.empty()) {
    const fs::path dir = out_dir_or_throw(out_dir);
    json j = {{"command", "bracket-defect"},
              {"n", spec.n},
              {"k", spec.k},
              {"zero_threshold", kZeroDefect},
              {"rows", rows},
              {"runtime_seconds", seconds_since(t0)}};
    write_json(dir / (fs::path(instance).stem().string() + ".defect.json"), j);
  }
  return kExitPass;
}

// ---- transport ----

int cmd_transport(const std::string& instance, const std::string& out_dir, const Overrides& o, double,
                  std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const InstanceSpec spec = load_with_overrides(instance, o);
  const StiefelPoint x = spec.base();
  const AlphaParam a = effective_alpha(spec);
  const auto frame = reductive_frame(x, a);
  const auto grid = uniform_grid(0.0, spec.t_end, spec.steps);

  std::optional<SpecialCurveRolling> sc;
  ControlCurve u = ControlCurve::zero(spec.n, spec.k);
  if (spec.control == ControlType::SampledFile) {
    u = read_sampled_control(spec.control_path, spec.n, spec.k);
  } else {
    sc.emplace(control_xi(spec), x, a);
    u = ControlCurve::closure([&](double t) { return sc->frame()->element(sc->control_coords(t)); });
  }
  try {
    u.require_in_p(x, a, grid);
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  const LieAlgPair z0 = pr_p(x, a, random_xi(spec.n, spec.k, spec.seed + 1));
  const LieAlgPair w0 = pr_p(x, a, random_xi(spec.n, spec.k, spec.seed + 2));
  const TransportResult rz = parallel_transport(*frame, u, z0, grid);
  const TransportResult rw = parallel_transport(*frame, u, w0, grid);

  const double zz = alpha_inner(z0, z0, a), zw = alpha_inner(z0, w0, a);
  double norm_drift = 0.0, inner_drift = 0.0, constancy = 0.0;
  for (std::size_t i = 0; i < rz.samples.size(); ++i) {
    norm_drift = std::max(norm_drift, std::abs(alpha_inner(rz.samples[i], rz.samples[i], a) - zz));
    inner_drift = std::max(inner_drift, std::abs(alpha_inner(rz.samples[i], rw.samples[i], a) - zw));
    constancy = std::max(constancy, (rz.samples[i] - z0).norm());
  }

  Report rep;
  rep.body["command"] = "transport";
  rep.body["instance"] = instance_summary(spec);
  rep.body["norm_drift"] = number(norm_drift);
  rep.body["inner_product_drift"] = number(inner_drift);
  rep.body["max_change"] = number(constancy);
  rep.messages = spec.notes;
  for (const auto& w : rz.warnings) rep.messages.push_back(w);
  rep.add("norm_drift", norm_drift, 1e-8);
  rep.add("inner_product_drift", inner_drift, 1e-8);
  if (spec.k == 1) rep.add("k1_constant", constancy, 1e-9);

  if (!out_dir.empty()) {
    const fs::path dir = out_dir_or_throw(out_dir);
    const std::string stem = fs::path(instance).stem().string();
    std::ofstream f(dir / (stem + ".transport.csv"));
    if (!f) throw InputError("cannot write transport output");
    f << "t";
    for (int i = 0; i < frame->dim(); ++i) f << ",z_" << i + 1;
    f << "\n";
    for (std::size_t i = 0; i < rz.times.size(); ++i) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", rz.times[i]);
      std::string line = buf;
      for (int c = 0; c < frame->dim(); ++c) format_row(line, rz.coords[i](c));
      f << line << "\n";
    }
    write_json(dir / (stem + ".transport.json"), rep.to_json(seconds_since(t0)));
  }
  rep.print(out);
  return rep.pass() ? kExitPass : kExitFail;
}

}  // namespace

// ---- instance parsing ----

StiefelPoint InstanceSpec::base() const {
  if (base_point.size() == 0) return StiefelPoint::canonical(n, k);
  try {
    return StiefelPoint(base_point);
  } catch (const std::exception& e) {
    throw InputError(std::string("base_point: ") + e.what());
  }
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Intrinsic: return "intrinsic";
    case Mode::Extrinsic: return "extrinsic";
    case Mode::ClosedForm: return "closed-form";
    case Mode::Geodesic: return "geodesic";
  }
  return "intrinsic";
}

Mode parse_mode(const std::string& s) {
  if (s == "intrinsic") return Mode::Intrinsic;
  if (s == "extrinsic") return Mode::Extrinsic;
  if (s == "closed-form") return Mode::ClosedForm;
  if (s == "geodesic") return Mode::Geodesic;
  throw InputError("unknown mode '" + s + "'");
}

InstanceSpec parse_instance(const std::string& text, const fs::path& dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("instance must be a JSON object");

  InstanceSpec s;
  if (!j.contains("n") || !j.contains("k")) throw InputError("instance needs n and k");
  s.n = get_or<Eigen::Index>(j, "n", 0);
  s.k = get_or<Eigen::Index>(j, "k", 0);
  if (s.k < 1 || s.k > s.n) throw InputError("need 1 <= k <= n");
  s.alpha = get_or<double>(j, "alpha", -0.5);
  s.t_end = get_or<double>(j, "t_end", 1.0);
  s.steps = get_or<int>(j, "steps", 1000);
  s.reproject = get_or<bool>(j, "reproject", false);
  s.seed = get_or<std::uint64_t>(j, "seed", 0);
  s.mode = parse_mode(get_or<std::string>(j, "mode", "intrinsic"));
  if (!(s.t_end > 0.0) || !std::isfinite(s.t_end)) throw InputError("t_end must be positive");
  if (s.steps < 1) throw InputError("steps must be positive");

  if (j.contains("base_point")) {
    const json& b = j["base_point"];
    if (b.is_string()) {
      if (b.get<std::string>() != "E") throw InputError("base_point must be \"E\" or an n x k matrix");
    } else {
      s.base_point = matrix_from_json(b, s.n, s.k, "base_point");
      (void)s.base();
    }
  }

  const json c = j.value("control", json{{"type", "random-seeded"}});
  const std::string type = get_or<std::string>(c, "type", "");
  if (type == "constant-xi") {
    s.control = ControlType::ConstantXi;
    if (!c.contains("omega")) throw InputError("constant-xi control needs omega");
    const Matrix om = matrix_from_json(c["omega"], s.n, s.n, "omega");
    const Matrix ps = c.contains("psi") ? matrix_from_json(c["psi"], s.k, s.k, "psi") : Matrix::Zero(s.k, s.k);
    try {
      s.xi = LieAlgPair(om, ps);
    } catch (const std::exception& e) {
      throw InputError(std::string("control: ") + e.what());
    }
  } else if (type == "sampled-file") {
    s.control = ControlType::SampledFile;
    const fs::path p = get_or<std::string>(c, "path", "");
    if (p.empty()) throw InputError("sampled-file control needs a path");
    s.control_path = p.is_absolute() ? p : dir / p;
  } else if (type == "random-seeded") {
    s.control = ControlType::RandomSeeded;
    if (c.contains("seed")) s.seed = get_or<std::uint64_t>(c, "seed", 0);
  } else {
    throw InputError("unknown control type '" + type + "'");
  }
  return s;
}

InstanceSpec load_instance(const fs::path& path) {
  return parse_instance(slurp(path), path.parent_path());
}

LieAlgPair random_xi(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto block = [&](Eigen::Index m) {
    Matrix a(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index c = 0; c < m; ++c) a(i, c) = nd(gen);
    return Matrix(0.5 * (a - a.transpose()));
  };
  Matrix om = block(n);
  Matrix ps = block(k);
  return LieAlgPair(om, ps);
}

ControlCurve read_sampled_control(const fs::path& path, Eigen::Index n, Eigen::Index k) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read control file " + path.string());
  std::vector<double> times;
  std::vector<LieAlgPair> values;
  std::string line;
  const std::size_t width = static_cast<std::size_t>(1 + n * n + k * k);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) numeric = false;
      row.push_back(v);
    }
    if (!numeric) {
      if (times.empty() && values.empty()) continue;  // header
      throw InputError("control file: non-numeric row");
    }
    if (row.size() != width) throw InputError("control file: expected " + std::to_string(width) + " columns");
    Matrix om(n, n), ps(k, k);
    for (Eigen::Index i = 0; i < n * n; ++i) om(i / n, i % n) = row[1 + i];
    for (Eigen::Index i = 0; i < k * k; ++i) ps(i / k, i % k) = row[1 + n * n + i];
    times.push_back(row[0]);
    try {
      values.emplace_back(om, ps);
    } catch (const std::exception& e) {
      throw InputError(std::string("control file: ") + e.what());
    }
  }
  try {
    return ControlCurve::sampled(std::move(times), std::move(values));
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("control file: ") + e.what());
  }
}

// ---- trajectory files ----

namespace {

void block_names(std::vector<std::string>& out, const std::string& prefix, Eigen::Index rows, Eigen::Index cols) {
  // column-stacking order
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r)
      out.push_back(prefix + "_" + std::to_string(r + 1) + "_" + std::to_string(c + 1));
}

std::vector<std::string> header_for(Eigen::Index n, Eigen::Index k, Eigen::Index d, Eigen::Index l) {
  std::vector<std::string> h{"t"};
  block_names(h, "beta", n, k);
  block_names(h, "beta_hat", n, k);
  block_names(h, "R", n, n);
  block_names(h, "theta", k, k);
  block_names(h, "S", d, d);
  if (l > 0) block_names(h, "T", l, l);
  return h;
}

}  // namespace

std::vector<std::string> trajectory_header(const RollingTrajectory& traj) {
  return header_for(traj.base().n(), traj.base().k(), traj.frame->dim(),
                    traj.extrinsic() ? traj.normal_frame->dim() : 0);
}

void write_trajectory_csv(const fs::path& path, const RollingTrajectory& traj) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  const auto header = trajectory_header(traj);
  for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
  f << "\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", traj.times[i]);
    std::string line = buf;
    auto put = [&](const Matrix& m) {
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) format_row(line, m(r, c));
    };
    put(traj.rolling_curve[i]);
    put(traj.development[i]);
    put(traj.q[i].r());
    put(traj.q[i].theta());
    put(traj.s[i]);
    if (traj.extrinsic()) put(traj.t[i]);
    f << line << "\n";
  }
}

RollingTrajectory read_trajectory_csv(const fs::path& path) {
  const std::string text = slurp(path);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw InputError("empty trajectory file");
  const fs::path meta_path = path.string() + ".meta.json";
  if (!fs::exists(meta_path)) throw InputError("missing sidecar " + meta_path.string());
  json meta;
  try {
    meta = json::parse(slurp(meta_path));
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed sidecar: ") + e.what());
  }
  const auto n = get_or<Eigen::Index>(meta, "n", 0), k = get_or<Eigen::Index>(meta, "k", 0);
  if (k < 1 || k > n) throw InputError("sidecar: bad dimensions");
  if (!meta.contains("base_point")) throw InputError("sidecar: missing base_point");
  StiefelPoint x = StiefelPoint::canonical(n, k);
  AlphaParam a(0.5);
  try {
    x = StiefelPoint(matrix_from_json(meta["base_point"], n, k, "base_point"));
    a = AlphaParam(get_or<double>(meta, "alpha", std::nan("")));
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(std::string("sidecar: ") + e.what());
  }
  const bool extrinsic = get_or<bool>(meta, "extrinsic", false);

  RollingTrajectory traj;
  traj.frame = reductive_frame(x, a);
  if (extrinsic) traj.normal_frame = std::make_shared<const NormalFrame>(x);
  const Eigen::Index d = traj.frame->dim(), l = extrinsic ? traj.normal_frame->dim() : 0;
  const auto expected = header_for(n, k, d, l);

  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::vector<std::string> got;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) got.push_back(cell);
    if (got != expected) throw InputError("trajectory header does not match its sidecar");
  }

  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    row.reserve(expected.size());
    const char* p = line.c_str();
    while (*p) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw InputError("trajectory: non-numeric cell");
      row.push_back(v);
      p = end;
      if (*p == ',') ++p;
      else if (*p == '\r') break;
      else if (*p) throw InputError("trajectory: malformed row");
    }
    if (row.size() != expected.size()) throw InputError("trajectory: wrong number of columns");
    std::size_t off = 1;
    auto take = [&](Eigen::Index rows, Eigen::Index cols) {
      Matrix m(rows, cols);
      for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = row[off++];
      return m;
    };
    traj.times.push_back(row[0]);
    traj.rolling_curve.push_back(take(n, k));
    traj.development.push_back(take(n, k));
    const Matrix r = take(n, n);
    const Matrix th = take(k, k);
    traj.q.push_back(GroupPair::from_unchecked(r, th));
    traj.s.push_back(take(d, d));
    if (extrinsic) traj.t.push_back(take(l, l));
    traj.rolling_coords.push_back(traj.frame->coords_of_tangent(traj.rolling_curve.back()));
  }
  for (std::size_t i = 1; i < traj.times.size(); ++i)
    if (!(traj.times[i] > traj.times[i - 1])) throw InputError("trajectory: times must increase");
  audit(traj);
  return traj;
}

// ---- entry point ----

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rolling of Stiefel manifolds: kinematics, transport and verification", "stiefel_roll"};
  app.require_subcommand(1);

  std::string instance, out_dir, trajectory;
  double tolerance = 1e-5;
  Overrides o;
  int steps = 0;
  std::uint64_t seed = 0;
  double alpha = 0.0;

  auto common = [&](CLI::App* sub, bool needs_instance) {
    if (needs_instance) sub->add_option("--instance", instance, "Instance JSON file")->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--steps", steps, "Override the number of steps");
    sub->add_option("--seed", seed, "Override the random seed");
    sub->add_option("--alpha", alpha, "Override alpha (bracket-defect: extra grid value)");
    sub->add_flag("--reproject", o.reproject, "Polar reprojection after each step");
    sub->add_option("--tolerance", tolerance, "Residual tolerance")->check(CLI::PositiveNumber);
  };
  CLI::App* roll = app.add_subcommand("roll", "Integrate a rolling and write trajectory and report");
  common(roll, true);
  CLI::App* verify = app.add_subcommand("verify", "Re-run residual and drift checks on a stored trajectory");
  common(verify, false);
  verify->add_option("trajectory", trajectory, "Trajectory CSV")->required();
  CLI::App* compare = app.add_subcommand("compare-classical", "Compare with the classical Euclidean formulation");
  common(compare, true);
  CLI::App* defect = app.add_subcommand("bracket-defect", "Tabulate pr_p([p, p]) over an alpha grid");
  common(defect, true);
  CLI::App* transport = app.add_subcommand("transport", "Parallel transport along a control curve");
  common(transport, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }

  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--steps")) o.steps = steps;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--alpha")) o.alpha = alpha;
  }

  try {
    if (roll->parsed()) return cmd_roll(instance, out_dir, o, tolerance, out);
    if (verify->parsed()) return cmd_verify(trajectory, out_dir, tolerance, out);
    if (compare->parsed()) return cmd_compare(instance, out_dir, o, tolerance, out);
    if (defect->parsed()) return cmd_bracket_defect(instance, out_dir, o, out);
    if (transport->parsed()) return cmd_transport(instance, out_dir, o, tolerance, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DimensionError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const IntegrationError& e) {
    err << "integration failed: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace stiefel::cli
