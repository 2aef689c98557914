#pragma once

// Binary snapshot files. Layout, all little-endian:
//   "RDTL"  u32 version  u32 n  u32 N  f64 L  u32 packed components  u64 snapshot count
//   per snapshot: f64 t, then N^n * packed f64 values (node-major, row-major packed upper triangle)

#include <cstdint>
#include <string>
#include <vector>

#include "rdtf/errors.hpp"
#include "rdtf/flow_engine.hpp"
#include "rdtf/grid.hpp"

namespace rdtf {

inline constexpr std::uint32_t kTrajectoryVersion = 1;

/// Unreadable or malformed snapshot file.
class IoError : public Error {
 public:
  using Error::Error;
};

struct Snapshot {
  double t = 0.0;
  MetricField g;
};

std::string encode_trajectory(const std::vector<Snapshot>& snaps);
std::vector<Snapshot> decode_trajectory(const std::string& bytes);

void write_trajectory(const std::string& path, const std::vector<Snapshot>& snaps);
void write_trajectory(const std::string& path, const FlowTrajectory& traj);
/// Throws IoError on a missing file, bad magic, unknown version or truncated data.
std::vector<Snapshot> read_trajectory(const std::string& path);

/// Rebuilds a trajectory over the given background; the grids must agree.
FlowTrajectory to_trajectory(const std::vector<Snapshot>& snaps, const BackgroundMetric& bg);

}  // namespace rdtf
