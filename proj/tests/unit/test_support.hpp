#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "agora/runner/plan.hpp"

namespace agora::testing {

// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag)
      : path_(std::filesystem::temp_directory_path() / ("agora-" + tag + "-" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
  std::filesystem::path path_;
};

inline std::filesystem::path source_dir() { return AGORA_SOURCE_DIR; }

inline nlohmann::json default_plan_json() {
  return runner::detail::load_json_file(source_dir() / "config" / "default_plan.json");
}

inline runner::RunPlan plan_into(nlohmann::json j, const std::filesystem::path& out) {
  j["output_dir"] = out.string();
  return runner::plan_from_json(j, source_dir() / "config");
}

}  // namespace agora::testing
