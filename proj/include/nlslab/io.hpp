#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlslab/dynamics.hpp"
#include "nlslab/field.hpp"
#include "nlslab/model.hpp"

namespace nlslab {

// 17-significant-digit decimal text, the round-trip-exact format used in all
// text outputs.
std::string format_g17(double x);

// ---------------------------------------------------------------- snapshot

// Binary field snapshot: magic "NLSFLD01", header (version, grid kind, N,
// per-axis size, geometry extent, value count), then raw little-endian
// complex doubles. Write-then-read round-trips bit-identically.
std::string snapshot_bytes(const FieldState& u);
void write_snapshot(const std::filesystem::path& path, const FieldState& u);
FieldState read_snapshot(const std::filesystem::path& path);

// Companion metadata record: grid, params, stamp, and provenance. The stamp
// is a caller-supplied logical timestamp (part of the run configuration), so
// identical configurations yield byte-identical sidecars.
nlohmann::json snapshot_sidecar(const FieldState& u, const ModelParams& params,
                                const std::string& stamp,
                                const nlohmann::json& provenance);

// --------------------------------------------------------------------- CSV

// EvolutionTrace rows: t,mass,energy,grad,dist ("nan" distance when the trace
// carried no reference orbit). Header always present.
std::string trace_csv(const EvolutionTrace& trace);

// Generic tabular emitter: one header row plus 17-digit cells.
std::string table_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);

// ---------------------------------------------------------------- manifest

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::string& data);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::string sha256;
  std::uint64_t bytes = 0;
};

struct RunManifest {
  nlohmann::json config;
  std::string version;
  nlohmann::json constants;
  double wall_seconds = 0.0;
  std::vector<ManifestEntry> outputs;
  bool partial = false;
  std::string error;
};

nlohmann::json manifest_json(const RunManifest& manifest);

// Collects the files a run emits, writing each atomically and recording its
// digest for the manifest.
class OutputTracker {
 public:
  explicit OutputTracker(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  // Writes dir()/relpath atomically and records (relpath, digest, size).
  void emit(const std::string& relpath, const std::string& bytes);
  const std::vector<ManifestEntry>& entries() const { return entries_; }
  // Writes dir()/manifest.json last, atomically.
  void finalize(RunManifest manifest) const;

 private:
  std::filesystem::path dir_;
  std::vector<ManifestEntry> entries_;
};

}  // namespace nlslab
