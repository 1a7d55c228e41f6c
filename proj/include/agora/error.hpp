#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace agora {

// Error codes carried by agora::Error. They are part of the wire/tool surface
// (tool results relay them verbatim), so keep them stable.
namespace errc {
inline constexpr const char* config_error = "config_error";
inline constexpr const char* domain_error = "domain_error";
inline constexpr const char* unknown_mec = "unknown_mec";
inline constexpr const char* non_monotonic_timestamp = "non_monotonic_timestamp";
inline constexpr const char* no_data = "no_data";
inline constexpr const char* stale_data = "stale_data";
inline constexpr const char* endpoint_unreachable = "endpoint_unreachable";
inline constexpr const char* query_failed = "query_failed";
inline constexpr const char* parse_error = "parse_error";
inline constexpr const char* engine_http_error = "engine_http_error";
inline constexpr const char* tool_loop_exceeded = "tool_loop_exceeded";
inline constexpr const char* restart_hook_failed = "restart_hook_failed";
inline constexpr const char* io_error = "io_error";
}  // namespace errc

class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

}  // namespace agora
