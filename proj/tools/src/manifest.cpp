#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "fblab/cli/run.hpp"
#include "fblab/error.hpp"

#ifndef FBLAB_VERSION_STRING
#define FBLAB_VERSION_STRING "unknown"
#endif

namespace fblab::cli {

std::string_view version_string() noexcept { return FBLAB_VERSION_STRING; }

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    fail(ErrorCode::IoError, "SHA-256 digest failed");
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
  return os.str();
}

nlohmann::json build_manifest(const nlohmann::json& echo, const std::vector<Artifact>& artifacts,
                              double wall_seconds) {
  nlohmann::json files = nlohmann::json::array();
  for (const Artifact& a : artifacts)
    files.push_back({{"path", a.path}, {"bytes", a.content.size()}, {"sha256", sha256_hex(a.content)}});
  return {{"version", std::string(version_string())},
          {"config", echo.is_null() ? nlohmann::json::object() : echo},
          {"files", files},
          {"wall_seconds", wall_seconds}};
}

std::string write_outputs(const std::string& dir, const RunResult& result, const nlohmann::json& echo,
                          double wall_seconds) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create output directory " + dir + ": " + ec.message());

  auto put = [&](const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) fail(ErrorCode::IoError, "cannot write " + path.string());
  };
  for (const Artifact& a : result.artifacts) put(fs::path(dir) / a.path, a.content);
  const fs::path manifest = fs::path(dir) / "manifest.json";
  put(manifest, build_manifest(echo, result.artifacts, wall_seconds).dump(2) + "\n");
  return manifest.string();
}

}  // namespace fblab::cli
