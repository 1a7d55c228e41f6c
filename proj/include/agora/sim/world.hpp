#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "agora/clock.hpp"
#include "agora/error.hpp"
#include "agora/sim/probe.hpp"
#include "agora/sim/upf.hpp"
#include "agora/stress/schedule.hpp"
#include "agora/telemetry/store.hpp"
#include "agora/types.hpp"

namespace agora::sim {

// Affine load-to-power model with additive Gaussian noise clipped at zero.
struct PowerModel {
  double idle_watts = 0;
  double slope_watts_per_load = 0;
  double noise_sigma_watts = 0;
  std::uint64_t rng_seed = 0;
};

inline PowerModel default_mec1_model() { return {5.0, 15.0, 0.3, 1}; }
inline PowerModel default_mec2_model() { return {12.0, 38.0, 0.3, 2}; }

inline void validate(const PowerModel& m) {
  if (m.idle_watts < 0 || m.slope_watts_per_load < 0 || m.noise_sigma_watts < 0) {
    throw Error(errc::config_error, "power model parameters must be >= 0");
  }
}

// Noise-free part of the model.
inline double expected_power(double load, const PowerModel& model) {
  if (!(load >= 0 && load <= 1)) throw Error(errc::domain_error, "load must be in [0, 1]");
  return model.idle_watts + model.slope_watts_per_load * load;
}

inline double power_of(double load, const PowerModel& model, std::mt19937_64& rng) {
  double p = expected_power(load, model);
  if (model.noise_sigma_watts > 0) p += std::normal_distribution<double>(0.0, model.noise_sigma_watts)(rng);
  return std::max(0.0, p);
}

// Two-state accelerator host: quiescent between decisions, busy during them.
struct GpuHostModel {
  double quiescent_watts = 35.0;
  double active_watts = 165.0;
};

struct WorldConfig {
  double tick_s = 0.1;
  double sampling_period_s = 1.0;
  double gpu_sampling_period_s = 0.1;
  PowerModel mec1 = default_mec1_model();
  PowerModel mec2 = default_mec2_model();
  GpuHostModel gpu;
  UeProbeConfig probe;
  MecId initial_target = MecId::MEC2;
  std::uint64_t probe_seed = 3;

  // Reseeds every RNG stream from one run seed.
  WorldConfig& seeded(std::uint64_t seed) {
    std::seed_seq seq{seed, std::uint64_t{0x61676f7261}};
    std::uint64_t out[3];
    std::uint32_t words[6];
    seq.generate(words, words + 6);
    for (int i = 0; i < 3; ++i) out[i] = (std::uint64_t{words[2 * i]} << 32) | words[2 * i + 1];
    mec1.rng_seed = out[0];
    mec2.rng_seed = out[1];
    probe_seed = out[2];
    return *this;
  }
};

// Deterministic virtual-time environment: two MEC sites, the inference host,
// the UPF and a UE prober. Time is kept in integer microseconds.
class World final : public Clock, public UpfControl {
public:
  explicit World(WorldConfig config = {}, std::vector<stress::StressEvent> schedule = {})
      : config_(std::move(config)),
        schedule_(std::move(schedule)),
        mec1_rng_(config_.mec1.rng_seed),
        mec2_rng_(config_.mec2.rng_seed),
        probe_rng_(config_.probe_seed) {
    validate(config_.mec1);
    validate(config_.mec2);
    tick_us_ = to_us(config_.tick_s, "tick_s");
    if (tick_us_ <= 0) throw Error(errc::config_error, "tick must be > 0");
    sampling_us_ = to_ticks_us(config_.sampling_period_s, "sampling_period_s");
    gpu_sampling_us_ = to_ticks_us(config_.gpu_sampling_period_s, "gpu_sampling_period_s");
    if (config_.probe.period_s > 0) {
      probe_period_us_ = to_ticks_us(config_.probe.period_s, "probe.period_s");
      probe_window_us_ = to_ticks_us(config_.probe.window_s, "probe.window_s");
    }
    for (const auto& e : schedule_) stress::validate(e);
    std::sort(schedule_.begin(), schedule_.end(),
              [](const auto& a, const auto& b) { return a.begin < b.begin; });
    upf_.current_target = config_.initial_target;
    emit_mec_samples(nullptr);
  }

  const WorldConfig& config() const noexcept { return config_; }

  double now() const override { return seconds(now_us_); }

  // Moves the clock forward by `dt` (a positive multiple of the tick) and
  // returns the samples emitted on the way.
  std::vector<telemetry::PowerSample> advance(double dt) {
    if (!(dt > 0)) throw Error(errc::config_error, "advance: dt must be > 0");
    const std::int64_t dt_us = to_us(dt, "dt");
    if (dt_us % tick_us_ != 0) throw Error(errc::config_error, "advance: dt is not a multiple of the tick");
    std::vector<telemetry::PowerSample> emitted;
    for (std::int64_t i = 0; i < dt_us / tick_us_; ++i) step(&emitted);
    return emitted;
  }

  void elapse(double seconds) override {
    if (seconds <= 0) return;
    const auto ticks = static_cast<std::int64_t>(std::ceil(seconds * 1e6 / static_cast<double>(tick_us_) - 1e-9));
    for (std::int64_t i = 0; i < std::max<std::int64_t>(ticks, 1); ++i) step(nullptr);
  }

  void set_inference_active(bool active) override { inference_active_ = active; }
  bool inference_active() const noexcept { return inference_active_; }

  MecId upf_get_target() const override { return upf_.current_target; }
  const UpfState& upf_state() const noexcept { return upf_; }

  UpfAck upf_set_target(MecId mec) override {
    UpfAck ack{upf_.current_target, mec, now()};
    upf_.current_target = mec;
    upf_.last_change_ts = ack.ts;
    actuations_.push_back(ack);
    return ack;
  }

  // Wire-facing variant: unknown names are rejected with unknown_mec and
  // leave the state untouched.
  UpfAck upf_set_target(std::string_view name) { return upf_set_target(parse_mec(name)); }

  const ActuationLog& actuation_log() const noexcept { return actuations_; }

  double load(MecId mec, double ts) const noexcept { return stress::load_at(schedule_, mec, ts); }
  double load(MecId mec) const noexcept { return load(mec, now()); }

  std::optional<stress::StressEvent> active_stress() const {
    if (active_ && active_->active_at(now())) return active_;
    return std::nullopt;
  }

  const std::vector<stress::StressEvent>& schedule() const noexcept { return schedule_; }

  // Synthesizes one UE record over [now, now + window] and advances the world
  // through the window.
  UeProbeRecord sample_ue_probe(double window) {
    if (!(window > 0)) throw Error(errc::domain_error, "probe window must be > 0");
    OpenProbe p = open_probe(now_us_, to_us(window, "window"));
    advance(window);
    UeProbeRecord r = close_probe(p);
    probes_.push_back(r);
    return r;
  }

  const std::vector<UeProbeRecord>& probe_log() const noexcept { return probes_; }

  void start_background_probing() {
    if (probe_period_us_ <= 0) throw Error(errc::config_error, "probe period is 0");
    background_probing_ = true;
    next_probe_us_ = ((now_us_ + probe_period_us_ - 1) / probe_period_us_) * probe_period_us_;
  }
  void stop_background_probing() { background_probing_ = false; }

  const telemetry::TelemetryStore& telemetry() const noexcept { return store_; }

private:
  struct OpenProbe {
    std::int64_t start_us;
    std::int64_t end_us;
    MecId target;
    double load;
  };

  static double seconds(std::int64_t us) { return static_cast<double>(us) / 1e6; }

  static std::int64_t to_us(double s, const char* what) {
    const double scaled = s * 1e6;
    const auto us = static_cast<std::int64_t>(std::llround(scaled));
    if (std::abs(scaled - static_cast<double>(us)) > 1e-3) {
      throw Error(errc::config_error, std::string(what) + " is finer than 1 us");
    }
    return us;
  }

  std::int64_t to_ticks_us(double s, const char* what) const {
    const auto us = to_us(s, what);
    if (us <= 0 || us % tick_us_ != 0) {
      throw Error(errc::config_error, std::string(what) + " must be a positive multiple of the tick");
    }
    return us;
  }

  void step(std::vector<telemetry::PowerSample>* emitted) {
    // State at the start of the tick: accelerator samples and newly opened
    // probe windows both see every actuation made at this instant.
    while (gpu_next_us_ <= now_us_) {
      record({seconds(gpu_next_us_), Subject::GPU_HOST,
              inference_active_ ? config_.gpu.active_watts : config_.gpu.quiescent_watts},
             emitted);
      gpu_next_us_ += gpu_sampling_us_;
    }
    if (background_probing_ && now_us_ >= next_probe_us_) {
      open_.push_back(open_probe(now_us_, probe_window_us_));
      next_probe_us_ += probe_period_us_;
    }

    now_us_ += tick_us_;

    for (auto it = open_.begin(); it != open_.end();) {
      if (it->end_us <= now_us_) {
        probes_.push_back(close_probe(*it));
        it = open_.erase(it);
      } else {
        ++it;
      }
    }
    if (now_us_ % sampling_us_ == 0) emit_mec_samples(emitted);
  }

  void update_active_stress() {
    const double t = now();
    if (active_ && !active_->active_at(t)) active_.reset();
    if (!active_) {
      for (const auto& e : schedule_) {
        if (e.active_at(t)) {
          active_ = e;
          break;
        }
        if (e.begin > t) break;
      }
    }
  }

  void emit_mec_samples(std::vector<telemetry::PowerSample>* emitted) {
    update_active_stress();
    const double t = now();
    record({t, Subject::MEC1, power_of(load(MecId::MEC1, t), config_.mec1, mec1_rng_)}, emitted);
    record({t, Subject::MEC2, power_of(load(MecId::MEC2, t), config_.mec2, mec2_rng_)}, emitted);
  }

  void record(const telemetry::PowerSample& s, std::vector<telemetry::PowerSample>* emitted) {
    store_.record(s);
    if (emitted) emitted->push_back(s);
  }

  OpenProbe open_probe(std::int64_t start_us, std::int64_t window_us) const {
    const MecId target = upf_.current_target;
    return {start_us, start_us + window_us, target, load(target, seconds(start_us))};
  }

  UeProbeRecord close_probe(const OpenProbe& p) {
    const auto& cfg = config_.probe;
    UeProbeRecord r;
    r.ts_start = seconds(p.start_us);
    r.ts_end = seconds(p.end_us);
    r.target_mec = p.target;
    double ping = (p.target == MecId::MEC1 ? cfg.base_rtt_mec1_ms : cfg.base_rtt_mec2_ms) +
                  cfg.latency_slope_ms * p.load;
    const double sigma = cfg.jitter_sigma_full_load_ms * p.load;
    if (cfg.jitter_enabled && sigma > 0) ping += std::normal_distribution<double>(0.0, sigma)(probe_rng_);
    r.ping_avg_ms = std::max(ping, 0.001);
    if (cfg.udp_enabled) {
      r.udp_jitter_ms = sigma;
      r.udp_loss_pct = std::clamp(cfg.udp_loss_pct_per_load * p.load, 0.0, 100.0);
    }
    return r;
  }

  WorldConfig config_;
  std::vector<stress::StressEvent> schedule_;
  std::optional<stress::StressEvent> active_;
  std::mt19937_64 mec1_rng_;
  std::mt19937_64 mec2_rng_;
  std::mt19937_64 probe_rng_;

  std::int64_t tick_us_ = 0;
  std::int64_t sampling_us_ = 0;
  std::int64_t gpu_sampling_us_ = 0;
  std::int64_t probe_period_us_ = 0;
  std::int64_t probe_window_us_ = 0;
  std::int64_t now_us_ = 0;
  std::int64_t gpu_next_us_ = 0;
  std::int64_t next_probe_us_ = 0;

  bool inference_active_ = false;
  bool background_probing_ = false;
  UpfState upf_;
  ActuationLog actuations_;
  std::vector<OpenProbe> open_;
  std::vector<UeProbeRecord> probes_;
  telemetry::TelemetryStore store_;
};

}  // namespace agora::sim
