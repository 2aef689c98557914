#include "rdtf/trajectory_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rdtf/errors.hpp"

namespace rdtf {

namespace {

template <class U>
void put(std::string& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_f64(std::string& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : s_(bytes) {}

  template <class U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b)
      v |= static_cast<U>(static_cast<unsigned char>(s_[pos_ + b])) << (8 * b);
    pos_ += sizeof(U);
    return v;
  }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  void need(std::size_t k) const {
    if (s_.size() - pos_ < k) throw IoError("trajectory file is truncated");
  }
  bool done() const { return pos_ == s_.size(); }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t k) { pos_ += k; }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_trajectory(const std::vector<Snapshot>& snaps) {
  if (snaps.empty()) throw PreconditionError("cannot write an empty trajectory");
  const TorusGrid& grid = snaps.front().g.grid();
  const int packed = snaps.front().g.packed();
  std::string out = "RDTL";
  put<std::uint32_t>(out, kTrajectoryVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.dim()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.res()));
  put_f64(out, grid.period());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(packed));
  put<std::uint64_t>(out, snaps.size());
  out.reserve(out.size() + snaps.size() * (8 + grid.size() * packed * 8));
  for (const auto& s : snaps) {
    require_same_grid(grid, s.g.grid(), "encode_trajectory");
    put_f64(out, s.t);
    if constexpr (std::endian::native == std::endian::little) {
      const auto& v = s.g.values();
      out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    } else {
      for (double v : s.g.values()) put_f64(out, v);
    }
  }
  return out;
}

std::vector<Snapshot> decode_trajectory(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "RDTL") != 0) throw IoError("not an RDTL trajectory file");
  Reader r(bytes);
  r.skip(4);
  const auto version = r.get<std::uint32_t>();
  if (version != kTrajectoryVersion) throw IoError("unsupported RDTL version " + std::to_string(version));
  const auto n = r.get<std::uint32_t>();
  const auto N = r.get<std::uint32_t>();
  const double L = r.f64();
  const auto packed = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  if (n < 1 || n > static_cast<std::uint32_t>(kMaxDim)) throw IoError("RDTL header: bad dimension");
  if (packed != static_cast<std::uint32_t>(packed_size(static_cast<int>(n))))
    throw IoError("RDTL header: component count does not match the dimension");
  TorusGrid grid;
  try {
    grid = TorusGrid(static_cast<int>(n), static_cast<int>(N), L);
  } catch (const Error& e) {
    throw IoError(std::string("RDTL header: ") + e.what());
  }
  const std::size_t values = grid.size() * packed;
  // a lying count must not trigger a huge allocation
  if (count == 0 || (bytes.size() - r.pos()) / (8 + 8 * values) < count) throw IoError("trajectory file is truncated");
  std::vector<Snapshot> out;
  out.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    Snapshot s;
    s.t = r.f64();
    s.g = MetricField(grid);
    auto& v = s.g.values();
    r.need(values * 8);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(v.data(), bytes.data() + r.pos(), values * 8);
      r.skip(values * 8);
    } else {
      for (double& x : v) x = r.f64();
    }
    out.push_back(std::move(s));
  }
  if (!r.done()) throw IoError("trailing bytes after the last snapshot");
  return out;
}

void write_trajectory(const std::string& path, const std::vector<Snapshot>& snaps) {
  const std::string bytes = encode_trajectory(snaps);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

void write_trajectory(const std::string& path, const FlowTrajectory& traj) {
  std::vector<Snapshot> snaps;
  for (const auto& s : traj.states) snaps.push_back({s.t, s.g});
  write_trajectory(path, snaps);
}

std::vector<Snapshot> read_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return decode_trajectory(ss.str());
}

FlowTrajectory to_trajectory(const std::vector<Snapshot>& snaps, const BackgroundMetric& bg) {
  FlowTrajectory tr;
  tr.bg = bg;
  long k = 0;
  for (const auto& s : snaps) {
    require_same_grid(bg.grid(), s.g.grid(), "to_trajectory");
    if (!tr.states.empty() && !(s.t > tr.states.back().t)) throw IoError("snapshot times are not increasing");
    tr.states.push_back({s.t, s.g, k++});
  }
  return tr;
}

}  // namespace rdtf
