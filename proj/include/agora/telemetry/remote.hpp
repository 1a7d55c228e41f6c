#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/csv.hpp"
#include "agora/http.hpp"
#include "agora/telemetry/store.hpp"

namespace agora::telemetry {

struct RangeEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:9090
  double timeout_s = 5.0;
};

struct RemoteSeries {
  std::map<std::string, std::string> labels;
  PowerSeries samples;
};

// Decodes a Prometheus-style matrix response body.
inline std::vector<RemoteSeries> decode_range_response(const std::string& body, Subject subject) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::query_failed, std::string("malformed response: ") + e.what());
  }
  if (!doc.is_object() || doc.value("status", "") != "success") {
    std::string msg = doc.is_object() ? doc.value("error", std::string("status is not success"))
                                      : std::string("response is not an object");
    throw Error(errc::query_failed, msg);
  }
  std::vector<RemoteSeries> out;
  try {
    for (const auto& r : doc.at("data").at("result")) {
      RemoteSeries series;
      if (r.contains("metric")) {
        for (const auto& [k, v] : r.at("metric").items()) series.labels[k] = v.get<std::string>();
      }
      for (const auto& point : r.at("values")) {
        const double ts = point.at(0).get<double>();
        const std::string text = point.at(1).get<std::string>();
        double value = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
          throw Error(errc::query_failed, "non-numeric sample value '" + text + "'");
        }
        series.samples.push_back({ts, subject, std::max(0.0, value)});
      }
      out.push_back(std::move(series));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::query_failed, std::string("malformed result matrix: ") + e.what());
  }
  return out;
}

// GET /api/v1/query_range. Blocking, bounded by endpoint.timeout_s.
inline std::vector<RemoteSeries> query_range_remote(const RangeEndpoint& endpoint, const std::string& selector,
                                                    double start, double end, double step,
                                                    Subject subject = Subject::MEC2) {
  if (start > end) throw Error(errc::domain_error, "query_range: start > end");
  if (!(step > 0)) throw Error(errc::domain_error, "query_range: step must be > 0");
  auto base = http::split_base_url(endpoint.base_url);
  auto client = http::make_client(base, endpoint.timeout_s);
  httplib::Params params{{"query", selector},
                         {"start", csv::format_double(start)},
                         {"end", csv::format_double(end)},
                         {"step", csv::format_double(step)}};
  auto res = client.Get(base.path_prefix + "/api/v1/query_range", params, httplib::Headers{});
  if (!res) {
    throw Error(errc::endpoint_unreachable,
                endpoint.base_url + ": " + httplib::to_string(res.error()));
  }
  return decode_range_response(res->body, subject);
}

// Measurement source backed by a remote range-query endpoint. Each subject
// maps to a metric selector; all returned series are pooled.
class RemotePowerSource final : public PowerSource {
public:
  RemotePowerSource(RangeEndpoint endpoint, std::map<Subject, std::string> selectors, double step_s = 1.0)
      : endpoint_(std::move(endpoint)), selectors_(std::move(selectors)), step_s_(step_s) {}

  PowerEstimate mean_power(Subject subject, double now, double delta) const override {
    if (!(delta > 0)) throw Error(errc::domain_error, "delta must be > 0");
    auto it = selectors_.find(subject);
    if (it == selectors_.end()) {
      throw Error(errc::config_error, "no selector configured for " + std::string(to_string(subject)));
    }
    PowerSeries pooled;
    for (auto& s : query_range_remote(endpoint_, it->second, now - delta, now, step_s_, subject)) {
      pooled.insert(pooled.end(), s.samples.begin(), s.samples.end());
    }
    if (pooled.empty()) throw Error(errc::no_data, "remote query returned no samples");
    return {subject, {now - delta, now}, telemetry::mean_power(pooled), pooled.size()};
  }

private:
  RangeEndpoint endpoint_;
  std::map<Subject, std::string> selectors_;
  double step_s_;
};

}  // namespace agora::telemetry
