#pragma once

#include "stiefel/rolling.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stiefel::cli {

/// Malformed or inconsistent input; maps to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitInput = 2;

enum class Mode { Intrinsic, Extrinsic, ClosedForm, Geodesic };
enum class ControlType { ConstantXi, SampledFile, RandomSeeded };

struct InstanceSpec {
  Eigen::Index n = 0;
  Eigen::Index k = 0;
  double alpha = -0.5;
  /// Empty means E.
  Matrix base_point;
  Mode mode = Mode::Intrinsic;
  ControlType control = ControlType::RandomSeeded;
  /// constant-xi payload
  std::optional<LieAlgPair> xi;
  /// sampled-file payload, resolved against the instance directory
  std::filesystem::path control_path;
  double t_end = 1.0;
  int steps = 1000;
  bool reproject = false;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;

  StiefelPoint base() const;
};

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

/// Parses JSON text; relative control paths are resolved against `dir`.
InstanceSpec parse_instance(const std::string& text, const std::filesystem::path& dir = {});
InstanceSpec load_instance(const std::filesystem::path& path);

/// Entries i.i.d. N(0,1) from mt19937_64(seed): n*n for omega, then k*k for psi, row-major;
/// each block is replaced by (A - A^T)/2.
LieAlgPair random_xi(Eigen::Index n, Eigen::Index k, std::uint64_t seed);

/// Reads "t, omega (n*n row-major), psi (k*k row-major)" rows; a header line is skipped.
ControlCurve read_sampled_control(const std::filesystem::path& path, Eigen::Index n, Eigen::Index k);

/// Column names of the trajectory CSV, in order.
std::vector<std::string> trajectory_header(const RollingTrajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const RollingTrajectory& traj);
/// Rebuilds a trajectory from a CSV and its `<csv>.meta.json` sidecar.
RollingTrajectory read_trajectory_csv(const std::filesystem::path& path);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stiefel::cli
