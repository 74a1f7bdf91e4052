#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dmatwin::harness {

inline constexpr std::string_view kArtifactVersion = "0.1.0";

std::uint64_t splitmix64(std::uint64_t x);

// Seed for item `index` of stream `stream`; independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  bool seeded = false;
  std::map<std::string, std::map<std::string, std::string>> config;
  std::vector<std::filesystem::path> outputs;  // relative to the output directory
};

// Writes manifest.json next to the outputs. No timestamps, so identical runs
// produce identical manifests.
void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m);

// Writes `content` to out_dir/name and returns the relative name.
std::filesystem::path write_output(const std::filesystem::path& out_dir, const std::string& name,
                                   std::string_view content);

}  // namespace dmatwin::harness
