#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "agora/error.hpp"

namespace agora::runner {

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(errc::io_error, "sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes via a temporary file and rename so readers never see a torn file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(errc::io_error, "cannot create '" + path.parent_path().string() + "': " + ec.message());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io_error, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(errc::io_error, "short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(errc::io_error, "cannot rename onto '" + path.string() + "': " + ec.message());
}

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct RunRecord {
  std::string engine_id;
  int run_index = 0;
  std::uint64_t seed = 0;
  std::string run_id;
  std::string status;  // ok | partial | invalid | skipped
  std::string error;
  std::size_t decisions = 0;
  std::size_t failed_decisions = 0;
};

struct Manifest {
  std::string config_hash;
  std::uint64_t base_seed = 0;
  bool complete = false;
  std::vector<RunRecord> runs;
  std::vector<ManifestEntry> files;
};

inline nlohmann::json to_json(const Manifest& m) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : m.runs) {
    runs.push_back({{"engine_id", r.engine_id}, {"run_index", r.run_index}, {"seed", r.seed},
                    {"run_id", r.run_id},       {"status", r.status},       {"error", r.error},
                    {"decisions", r.decisions}, {"failed_decisions", r.failed_decisions}});
  }
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return {{"schema", "agora-manifest/1"}, {"config_hash", m.config_hash}, {"base_seed", m.base_seed},
          {"complete", m.complete},       {"runs", runs},                 {"files", files}};
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  try {
    m.config_hash = j.at("config_hash").get<std::string>();
    m.base_seed = j.at("base_seed").get<std::uint64_t>();
    m.complete = j.at("complete").get<bool>();
    for (const auto& r : j.at("runs")) {
      m.runs.push_back({r.at("engine_id").get<std::string>(), r.at("run_index").get<int>(),
                        r.at("seed").get<std::uint64_t>(), r.at("run_id").get<std::string>(),
                        r.at("status").get<std::string>(), r.value("error", std::string{}),
                        r.value("decisions", std::size_t{0}), r.value("failed_decisions", std::size_t{0})});
    }
    for (const auto& f : j.at("files")) {
      m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                         f.at("bytes").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::parse_error, std::string("manifest: ") + e.what());
  }
  return m;
}

// Writes artifacts under one root and tracks them for the manifest.
class ArtifactWriter {
public:
  explicit ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const noexcept { return root_; }

  void write(const std::string& relative, std::string_view content) {
    write_file_atomic(root_ / relative, content);
    for (auto& f : files_) {
      if (f.path == relative) {
        f = {relative, sha256_hex(content), content.size()};
        return;
      }
    }
    files_.push_back({relative, sha256_hex(content), content.size()});
  }

  const std::vector<ManifestEntry>& files() const noexcept { return files_; }

private:
  std::filesystem::path root_;
  std::vector<ManifestEntry> files_;
};

}  // namespace agora::runner
