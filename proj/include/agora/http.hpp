#pragma once

#include <string>
#include <string_view>

#include <httplib.h>

#include "agora/error.hpp"

namespace agora::http {

// "http://host:port/prefix" split into the part httplib connects to and a
// path prefix prepended to every request.
struct BaseUrl {
  std::string origin;
  std::string path_prefix;
};

inline BaseUrl split_base_url(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(errc::config_error, "base URL must include a scheme: '" + std::string(url) + "'");
  }
  auto path_start = url.find('/', scheme_end + 3);
  BaseUrl out;
  if (path_start == std::string_view::npos) {
    out.origin = std::string(url);
  } else {
    out.origin = std::string(url.substr(0, path_start));
    out.path_prefix = std::string(url.substr(path_start));
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

inline httplib::Client make_client(const BaseUrl& base, double timeout_s) {
  httplib::Client client(base.origin);
  if (!client.is_valid()) throw Error(errc::config_error, "unsupported base URL '" + base.origin + "'");
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  return client;
}

}  // namespace agora::http
