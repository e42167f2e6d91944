#include <doctest.h>

#include "stiefel/cli.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

using namespace stiefel;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("stiefel_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "stiefel_roll");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json report(const fs::path& p) { return json::parse(slurp(p)); }

double check_value(const json& rep, const std::string& name) {
  for (const auto& c : rep["checks"])
    if (c["name"] == name) return c["value"].is_null() ? 1e300 : c["value"].get<double>();
  FAIL("missing check " << name);
  return 0.0;
}

const char* kZeroXi32 =
    R"({"n":3,"k":2,"mode":"extrinsic","steps":50,
        "control":{"type":"constant-xi","omega":[[0,0,0],[0,0,0],[0,0,0]],"psi":[[0,0],[0,0]]}})";

}  // namespace

TEST_CASE("random_xi is skew, seeded and row-major") {
  const LieAlgPair a = cli::random_xi(4, 2, 9), b = cli::random_xi(4, 2, 9), c = cli::random_xi(4, 2, 10);
  CHECK((a - b).norm() == 0.0);
  CHECK((a - c).norm() > 0.0);
  CHECK(max_abs(a.omega() + a.omega().transpose()) == 0.0);

  std::mt19937_64 gen(9);
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix g(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = nd(gen);
  CHECK(max_abs(a.omega() - 0.5 * (g - g.transpose())) == 0.0);
}

TEST_CASE("instance parsing and validation") {
  const auto s = cli::parse_instance(R"({"n":4,"k":2,"alpha":1,"mode":"closed-form","seed":3})");
  CHECK(s.n == 4);
  CHECK(s.alpha == 1.0);
  CHECK(s.mode == cli::Mode::ClosedForm);
  CHECK(s.control == cli::ControlType::RandomSeeded);
  CHECK(s.steps == 1000);
  CHECK_THROWS_AS(cli::parse_instance("{\"n\":3,"), cli::InputError);
  CHECK_THROWS_AS(cli::parse_instance(R"({"n":2,"k":3})"), cli::InputError);
  CHECK_THROWS_AS(cli::parse_instance(R"({"n":3,"k":2,"mode":"sideways"})"), cli::InputError);
  CHECK_THROWS_AS(cli::parse_instance(R"({"n":2,"k":1,"base_point":[[1],[1]]})"), cli::InputError);
  CHECK_THROWS_AS(
      cli::parse_instance(R"({"n":2,"k":1,"control":{"type":"constant-xi","omega":[[0,1],[0,0]],"psi":[[0]]}})"),
      cli::InputError);
}

TEST_CASE("roll with zero control stays at the base point") {
  TempDir dir("zero");
  const auto inst = dir.write("zero.json", kZeroXi32);
  const Outcome r = invoke({"roll", "--instance", inst.string(), "--out", dir.path.string()});
  CHECK(r.code == cli::kExitPass);
  const json rep = report(dir.path / "zero.report.json");
  CHECK(rep["pass"] == true);
  CHECK(check_value(rep, "no_slip") <= 1e-12);
  CHECK(check_value(rep, "no_twist_tangential") <= 1e-12);
  CHECK(check_value(rep, "no_twist_normal") <= 1e-12);
}

TEST_CASE("geodesic mode keeps the lifted velocity parallel") {
  TempDir dir("geo");
  const auto inst = dir.write("geo.json", R"({"n":3,"k":2,"alpha":0.5,"mode":"geodesic","seed":5,"steps":400})");
  const Outcome r = invoke({"roll", "--instance", inst.string(), "--out", dir.path.string()});
  CHECK(r.code == cli::kExitPass);
  const json rep = report(dir.path / "geo.report.json");
  CHECK(rep["parallel_velocity_drift"].get<double>() <= 1e-7);
}

TEST_CASE("input errors exit with 2") {
  TempDir dir("bad");
  const auto bad = dir.write("bad.json", "{\"n\": 3, \"k\":");
  CHECK(invoke({"roll", "--instance", bad.string()}).code == cli::kExitInput);
  CHECK(invoke({"roll", "--instance", (dir.path / "missing.json").string()}).code == cli::kExitInput);
  CHECK(invoke({"roll"}).code == cli::kExitInput);
  CHECK(invoke({"no-such-command"}).code == cli::kExitInput);
  CHECK(invoke({"--help"}).code == cli::kExitPass);
}

TEST_CASE("verify accepts its own output and rejects a corrupted S") {
  TempDir dir("verify");
  const auto inst = dir.write("v.json", R"({"n":4,"k":2,"mode":"extrinsic","seed":11,"steps":400})");
  REQUIRE(invoke({"roll", "--instance", inst.string(), "--out", dir.path.string()}).code == cli::kExitPass);
  const fs::path csv = dir.path / "v.csv";
  CHECK(invoke({"verify", csv.string()}).code == cli::kExitPass);

  // Perturb every S_i_j column by 1e-2 and keep the sidecar.
  std::istringstream in(slurp(csv));
  std::string header, line, text;
  std::getline(in, header);
  std::vector<bool> is_s;
  {
    std::stringstream hs(header);
    std::string cell;
    while (std::getline(hs, cell, ',')) is_s.push_back(cell.rfind("S_", 0) == 0);
  }
  text = header + "\n";
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::string cell, out;
    for (std::size_t c = 0; std::getline(ls, cell, ','); ++c) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", std::stod(cell) + (is_s[c] ? 1e-2 : 0.0));
      out += (c ? "," : "") + std::string(buf);
    }
    text += out + "\n";
  }
  const fs::path bad = dir.path / "bad.csv";
  std::ofstream(bad) << text;
  fs::copy_file(fs::path(csv.string() + ".meta.json"), fs::path(bad.string() + ".meta.json"));
  const Outcome r = invoke({"verify", bad.string()});
  CHECK(r.code == cli::kExitFail);
  CHECK(r.out.find("FAIL s_orthogonality") != std::string::npos);

  const fs::path empty = dir.write("empty.csv", "");
  CHECK(invoke({"verify", empty.string()}).code == cli::kExitInput);
  const fs::path orphan = dir.write("orphan.csv", header + "\n");
  CHECK(invoke({"verify", orphan.string()}).code == cli::kExitInput);
}

TEST_CASE("trajectory CSV round trip") {
  TempDir dir("csv");
  const auto inst = dir.write("c.json", R"({"n":3,"k":2,"alpha":2,"mode":"closed-form","seed":4,"steps":20})");
  // 20 steps is too coarse for the residual checks; the files are written regardless.
  REQUIRE(invoke({"roll", "--instance", inst.string(), "--out", dir.path.string()}).code != cli::kExitInput);
  const RollingTrajectory t = cli::read_trajectory_csv(dir.path / "c.csv");
  CHECK(t.size() == 21);
  CHECK(t.alpha().value() == 2.0);
  CHECK_FALSE(t.extrinsic());
  const auto h = cli::trajectory_header(t);
  CHECK(h.front() == "t");
  CHECK(h[1] == "beta_1_1");
  CHECK(h[2] == "beta_2_1");
  CHECK(h.back() == "S_" + std::to_string(t.frame->dim()) + "_" + std::to_string(t.frame->dim()));
  // Re-writing the parsed trajectory reproduces the file byte for byte.
  cli::write_trajectory_csv(dir.path / "again.csv", t);
  CHECK(slurp(dir.path / "again.csv") == slurp(dir.path / "c.csv"));
}

TEST_CASE("identical instances give byte-identical trajectories") {
  TempDir a("det_a"), b("det_b");
  const std::string text = R"({"n":4,"k":3,"alpha":-0.5,"mode":"intrinsic","seed":77,"steps":100})";
  const auto ia = a.write("d.json", text), ib = b.write("d.json", text);
  REQUIRE(invoke({"roll", "--instance", ia.string(), "--out", a.path.string()}).code != cli::kExitInput);
  REQUIRE(invoke({"roll", "--instance", ib.string(), "--out", b.path.string()}).code != cli::kExitInput);
  CHECK(slurp(a.path / "d.csv") == slurp(b.path / "d.csv"));
}

TEST_CASE("compare-classical on a seeded instance") {
  TempDir dir("cmp");
  const auto inst = dir.write("s42.json", R"({"n":3,"k":2,"mode":"extrinsic","seed":42})");
  const Outcome r = invoke({"compare-classical", "--instance", inst.string(), "--out", dir.path.string()});
  CHECK(r.code == cli::kExitPass);
  const json rep = report(dir.path / "s42.classical.json");
  CHECK(rep["s_tilde_deviation"].get<double>() <= 1e-5);
  CHECK(rep["e_invariance"].get<double>() <= 1e-9);

  const auto zero = dir.write("zero.json", kZeroXi32);
  CHECK(invoke({"compare-classical", "--instance", zero.string(), "--out", dir.path.string()}).code ==
        cli::kExitPass);
  CHECK(report(dir.path / "zero.classical.json")["identity_deviation"].get<double>() <= 1e-12);

  const auto k1 = dir.write("k1.json", R"({"n":3,"k":1,"mode":"extrinsic","seed":8})");
  CHECK(invoke({"compare-classical", "--instance", k1.string(), "--out", dir.path.string()}).code == cli::kExitPass);
  CHECK(report(dir.path / "k1.classical.json")["tangential_block_deviation"].get<double>() <= 1e-9);

  const auto moved = dir.write("moved.json", R"({"n":2,"k":1,"base_point":[[0],[1]]})");
  CHECK(invoke({"compare-classical", "--instance", moved.string()}).code == cli::kExitInput);
}

TEST_CASE("bracket-defect reproduces the vanishing pattern") {
  TempDir dir("defect");
  auto rows_for = [&](const std::string& name, const std::string& text) {
    const auto inst = dir.write(name + ".json", text);
    REQUIRE(invoke({"bracket-defect", "--instance", inst.string(), "--out", dir.path.string()}).code ==
            cli::kExitPass);
    return report(dir.path / (name + ".defect.json"))["rows"];
  };
  for (const auto& row : rows_for("k1", R"({"n":4,"k":1})")) {
    CHECK(row["vanishes"] == true);
    CHECK(row["explicit"].get<double>() <= 1e-12);
  }
  for (const auto& row : rows_for("kn", R"({"n":3,"k":3})")) {
    const double a = row["alpha"];
    CHECK(row["vanishes"] == (a == 1.0));
    if (a == 2.0) CHECK(row["frame_max"].get<double>() >= 1e-3);
  }
  for (const auto& row : rows_for("n4k2", R"({"n":4,"k":2})")) {
    CHECK(row["vanishes"] == false);
    CHECK(row["explicit"].get<double>() >= 1e-3);
  }
}

TEST_CASE("transport subcommand conserves the norm") {
  TempDir dir("tr");
  const auto inst = dir.write("t.json", R"({"n":4,"k":2,"alpha":1,"seed":3,"steps":500})");
  CHECK(invoke({"transport", "--instance", inst.string(), "--out", dir.path.string()}).code == cli::kExitPass);
  CHECK(report(dir.path / "t.transport.json")["norm_drift"].get<double>() <= 1e-8);
  const auto k1 = dir.write("t1.json", R"({"n":4,"k":1,"alpha":2,"seed":3,"steps":500})");
  CHECK(invoke({"transport", "--instance", k1.string(), "--out", dir.path.string()}).code == cli::kExitPass);
  CHECK(report(dir.path / "t1.transport.json")["max_change"].get<double>() <= 1e-9);
}

TEST_CASE("sampled control file drives an intrinsic roll") {
  TempDir dir("sampled");
  // Piecewise-linear control in p at E for alpha = -1/2: pure B-block generators.
  std::string csv = "t,omega,psi\n";
  for (int i = 0; i <= 10; ++i) {
    const double t = 0.1 * i, b = std::sin(t);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,0,0,%.17g,0,0,0,%.17g,0,0,0\n", t, -b, b);
    csv += buf;
  }
  dir.write("u.csv", csv);
  const auto inst = dir.write(
      "s.json", R"({"n":3,"k":1,"alpha":-0.5,"steps":200,"control":{"type":"sampled-file","path":"u.csv"}})");
  const Outcome r = invoke({"roll", "--instance", inst.string(), "--out", dir.path.string()});
  CHECK(r.code == cli::kExitPass);
}
