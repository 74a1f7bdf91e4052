#include "dmatwin/harness/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>
#include <sstream>

#include "dmatwin/harness/config.hpp"
#include "json.hpp"

namespace dmatwin::harness {

namespace {

std::string to_hex(const unsigned char* p, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(2 * n);
  for (unsigned i = 0; i < n; ++i) {
    s.push_back(digits[p[i] >> 4]);
    s.push_back(digits[p[i] & 0xF]);
  }
  return s;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw std::runtime_error("sha256 failed");
  return to_hex(md, len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::filesystem::path write_output(const std::filesystem::path& out_dir, const std::string& name,
                                   std::string_view content) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::ofstream out(out_dir / name, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (out_dir / name).string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + (out_dir / name).string());
  return name;
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["artifact"] = "dmatwin";
  j["version"] = std::string(kArtifactVersion);
  j["command"] = m.command;
  if (m.seeded) j["seed"] = m.seed;
  else j["seed"] = nullptr;
  j["config"] = m.config;
  auto outputs = nlohmann::ordered_json::array();
  for (const auto& rel : m.outputs)
    outputs.push_back({{"file", rel.generic_string()}, {"sha256", sha256_file(out_dir / rel)}});
  j["outputs"] = outputs;
  write_output(out_dir, "manifest.json", j.dump(2) + "\n");
}

}  // namespace dmatwin::harness
