#include "nlslab/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <cstring>

#include "nlslab/errors.hpp"
#include "nlslab/fsutil.hpp"
#include "nlslab/version.hpp"

namespace nlslab {

namespace {

constexpr char kMagic[8] = {'N', 'L', 'S', 'F', 'L', 'D', '0', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double x) {
  put_u64(out, std::bit_cast<std::uint64_t>(x));
}

class Reader {
 public:
  Reader(const std::string& data, const std::filesystem::path& path)
      : data_(data), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
      v = (v << 8) | static_cast<unsigned char>(data_[pos_ + i]);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i)
      v = (v << 8) | static_cast<unsigned char>(data_[pos_ + i]);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size())
      throw io_error("snapshot truncated: " + path_.string());
  }
  const std::string& data_;
  std::filesystem::path path_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string snapshot_bytes(const FieldState& u) {
  validate(u.grid);
  std::string out;
  out.reserve(48 + 16 * u.values.size());
  out.append(kMagic, sizeof kMagic);
  put_u32(out, kFormatVersion);
  if (const auto* rg = std::get_if<RadialGrid>(&u.grid)) {
    put_u32(out, 0);
    put_u32(out, static_cast<std::uint32_t>(rg->N));
    put_u32(out, static_cast<std::uint32_t>(rg->n));
    put_f64(out, rg->rmax);
  } else {
    const auto& bg = std::get<BoxGrid>(u.grid);
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(bg.N));
    put_u32(out, static_cast<std::uint32_t>(bg.n));
    put_f64(out, bg.L);
  }
  put_u64(out, u.values.size());
  for (const complexd& z : u.values) {
    put_f64(out, z.real());
    put_f64(out, z.imag());
  }
  return out;
}

void write_snapshot(const std::filesystem::path& path, const FieldState& u) {
  atomic_write_file(path, snapshot_bytes(u));
}

FieldState read_snapshot(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  if (data.size() < sizeof kMagic ||
      std::memcmp(data.data(), kMagic, sizeof kMagic) != 0)
    throw io_error("not a field snapshot: " + path.string());
  Reader rd(data, path);
  char magic[8];
  rd.raw(magic, 8);
  const std::uint32_t version = rd.u32();
  if (version != kFormatVersion)
    throw io_error("unsupported snapshot version " + std::to_string(version) +
                   ": " + path.string());
  const std::uint32_t kind = rd.u32();
  const std::uint32_t N = rd.u32();
  const std::uint32_t n = rd.u32();
  const double geom = rd.f64();
  Grid grid;
  if (kind == 0) {
    grid = RadialGrid{static_cast<int>(N), geom, static_cast<int>(n)};
  } else if (kind == 1) {
    grid = BoxGrid{static_cast<int>(N), geom, static_cast<int>(n)};
  } else {
    throw io_error("unknown grid kind in snapshot: " + path.string());
  }
  validate(grid);
  const std::uint64_t count = rd.u64();
  FieldState u{grid, std::vector<complexd>(count)};
  for (std::uint64_t i = 0; i < count; ++i) {
    const double re = rd.f64();
    const double im = rd.f64();
    u.values[i] = complexd(re, im);
  }
  return u;
}

nlohmann::json snapshot_sidecar(const FieldState& u, const ModelParams& params,
                                const std::string& stamp,
                                const nlohmann::json& provenance) {
  nlohmann::json grid;
  if (const auto* rg = std::get_if<RadialGrid>(&u.grid)) {
    grid = {{"kind", "radial"}, {"N", rg->N}, {"n", rg->n}, {"rmax", rg->rmax}};
  } else {
    const auto& bg = std::get<BoxGrid>(u.grid);
    grid = {{"kind", "box"}, {"N", bg.N}, {"n", bg.n}, {"L", bg.L}};
  }
  return nlohmann::json{
      {"grid", grid},
      {"params", {{"N", params.N}, {"q", params.q}, {"mu", params.mu}}},
      {"timestamp", stamp},
      {"provenance", provenance}};
}

std::string trace_csv(const EvolutionTrace& trace) {
  std::string out = "t,mass,energy,grad,dist\n";
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    out += format_g17(trace.times[i]);
    out += ',';
    out += format_g17(trace.mass[i]);
    out += ',';
    out += format_g17(trace.energy[i]);
    out += ',';
    out += format_g17(trace.grad[i]);
    out += ',';
    out += i < trace.orbit_dist.size() ? format_g17(trace.orbit_dist[i]) : "nan";
    out += '\n';
  }
  return out;
}

std::string table_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw validation_error("table_csv: row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_g17(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr))
    throw io_error("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_hex(const std::string& data) {
  return sha256_hex(data.data(), data.size());
}

nlohmann::json manifest_json(const RunManifest& manifest) {
  nlohmann::json outputs = nlohmann::json::array();
  for (const ManifestEntry& e : manifest.outputs)
    outputs.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  nlohmann::json j{{"tool", kToolName},
                   {"version", manifest.version},
                   {"config", manifest.config},
                   {"constants", manifest.constants},
                   {"wall_seconds", manifest.wall_seconds},
                   {"outputs", outputs},
                   {"partial", manifest.partial}};
  if (manifest.partial) j["error"] = manifest.error;
  return j;
}

OutputTracker::OutputTracker(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec)
    throw io_error("cannot create output directory " + dir_.string() + ": " +
                   ec.message());
}

void OutputTracker::emit(const std::string& relpath, const std::string& bytes) {
  const std::filesystem::path full = dir_ / relpath;
  if (full.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(full.parent_path(), ec);
  }
  atomic_write_file(full, bytes);
  entries_.push_back({relpath, sha256_hex(bytes), bytes.size()});
}

void OutputTracker::finalize(RunManifest manifest) const {
  manifest.outputs = entries_;
  atomic_write_file(dir_ / "manifest.json", manifest_json(manifest).dump(2) + "\n");
}

}  // namespace nlslab
