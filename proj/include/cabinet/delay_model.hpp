#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "cabinet/error.hpp"
#include "cabinet/rng.hpp"
#include "cabinet/trace.hpp"

namespace cabinet {

enum class DelayKind { none, uniform, skew, dynamic, burst };

constexpr std::string_view to_string(DelayKind k) {
  switch (k) {
    case DelayKind::none: return "none";
    case DelayKind::uniform: return "uniform";
    case DelayKind::skew: return "skew";
    case DelayKind::dynamic: return "dynamic";
    case DelayKind::burst: return "burst";
  }
  return "?";
}

/// mean +- half_width, in simulated milliseconds.
struct DelayRegime {
  double mean_ms = 0.0;
  double half_width_ms = 0.0;
};

/// Network delay applied to every message. Each node owns a link regime;
/// the simulator charges a message to the responding endpoint's link.
///
///   none     no delay
///   uniform  every link uses `uniform`                          (D1)
///   skew     link means decline from `skew_high` at node 1 to
///            `skew_low` at node n                               (D2)
///   dynamic  skew, rotated by `rotate_step` positions at every
///            regime change                                      (D3)
///   burst    `spike` for `on_ms`, then no delay for `off_ms`,
///            repeating from time zero                           (D4)
struct DelayModel {
  DelayKind kind = DelayKind::none;
  DelayRegime uniform{100.0, 20.0};
  DelayRegime skew_high{1000.0, 200.0};
  DelayRegime skew_low{100.0, 20.0};
  int rotate_every_rounds = 10;
  int rotate_step = 0;  // 0: max(1, n / 5)
  DelayRegime spike{1000.0, 200.0};
  double on_ms = 5000.0;
  double off_ms = 10000.0;

  void validate() const {
    auto check = [](const DelayRegime& r, const char* what) {
      if (r.mean_ms < 0.0 || r.half_width_ms < 0.0 || r.half_width_ms > r.mean_ms)
        throw Error(ErrorCode::config_error, std::string("delay regime '") + what + "' needs 0 <= half_width <= mean");
    };
    check(uniform, "uniform");
    check(skew_high, "skew_high");
    check(skew_low, "skew_low");
    check(spike, "spike");
    if (kind == DelayKind::dynamic && rotate_every_rounds < 1)
      throw Error(ErrorCode::config_error, "rotate_every_rounds must be >= 1");
    if (kind == DelayKind::burst && (on_ms <= 0.0 || off_ms < 0.0))
      throw Error(ErrorCode::config_error, "burst needs on_ms > 0 and off_ms >= 0");
  }

  /// Largest delay any single message can see.
  double max_one_way_ms() const {
    switch (kind) {
      case DelayKind::none: return 0.0;
      case DelayKind::uniform: return uniform.mean_ms + uniform.half_width_ms;
      case DelayKind::skew:
      case DelayKind::dynamic:
        return std::max(skew_high.mean_ms + skew_high.half_width_ms, skew_low.mean_ms + skew_low.half_width_ms);
      case DelayKind::burst: return spike.mean_ms + spike.half_width_ms;
    }
    return 0.0;
  }
};

/// Regime of `owner`'s link at `time`; `rotation` counts regime changes so far.
inline DelayRegime regime_for(const DelayModel& model, NodeId owner, int n, SimTime time, int rotation) {
  switch (model.kind) {
    case DelayKind::none: return {};
    case DelayKind::uniform: return model.uniform;
    case DelayKind::skew:
    case DelayKind::dynamic: {
      const int step = model.rotate_step > 0 ? model.rotate_step : std::max(1, n / 5);
      const int shift = model.kind == DelayKind::dynamic ? rotation * step : 0;
      const int pos = ((owner - 1 + shift) % n + n) % n;
      const double f = n > 1 ? static_cast<double>(pos) / (n - 1) : 0.0;
      return {model.skew_high.mean_ms + f * (model.skew_low.mean_ms - model.skew_high.mean_ms),
              model.skew_high.half_width_ms + f * (model.skew_low.half_width_ms - model.skew_high.half_width_ms)};
    }
    case DelayKind::burst: {
      const SimTime cycle = from_ms(model.on_ms + model.off_ms);
      const SimTime phase = cycle > 0 ? time % cycle : 0;
      return phase < from_ms(model.on_ms) ? model.spike : DelayRegime{};
    }
  }
  return {};
}

/// Uniform sample from the owner's regime, rounded to whole microseconds.
inline SimTime sample_delay(const DelayModel& model, NodeId owner, int n, SimTime time, int rotation, Rng& rng) {
  if (model.kind == DelayKind::none) return 0;
  const DelayRegime r = regime_for(model, owner, n, time, rotation);
  if (r.mean_ms == 0.0 && r.half_width_ms == 0.0) return 0;
  const double ms = rng.uniform(r.mean_ms - r.half_width_ms, r.mean_ms + r.half_width_ms);
  return std::max<SimTime>(0, from_ms(ms));
}

/// Parses the CLI form: none | d1:<mean> | d2 | d3 | d4.
inline DelayModel delay_from_flag(const std::string& flag) {
  DelayModel m;
  if (flag == "none" || flag == "d0") return m;
  if (flag.rfind("d1:", 0) == 0) {
    double mean = 0.0;
    try {
      mean = std::stod(flag.substr(3));
    } catch (const std::exception&) {
      throw Error(ErrorCode::config_error, "bad d1 mean in '" + flag + "'");
    }
    m.kind = DelayKind::uniform;
    m.uniform = {mean, mean / 5.0};
    return m;
  }
  if (flag == "d2") {
    m.kind = DelayKind::skew;
    return m;
  }
  if (flag == "d3") {
    m.kind = DelayKind::dynamic;
    return m;
  }
  if (flag == "d4") {
    m.kind = DelayKind::burst;
    return m;
  }
  throw Error(ErrorCode::config_error, "unknown delay '" + flag + "'");
}

inline DelayRegime regime_from_json(const nlohmann::json& j, DelayRegime fallback) {
  return {j.value("mean", fallback.mean_ms), j.value("half_width", fallback.half_width_ms)};
}

/// Accepts the CLI string form or an object {kind, ...}.
inline DelayModel delay_from_json(const nlohmann::json& j) {
  if (j.is_string()) return delay_from_flag(j.get<std::string>());
  DelayModel m;
  const std::string kind = j.value("kind", std::string("none"));
  if (kind == "none") m.kind = DelayKind::none;
  else if (kind == "uniform") m.kind = DelayKind::uniform;
  else if (kind == "skew") m.kind = DelayKind::skew;
  else if (kind == "dynamic") m.kind = DelayKind::dynamic;
  else if (kind == "burst") m.kind = DelayKind::burst;
  else throw Error(ErrorCode::config_error, "unknown delay kind '" + kind + "'");
  if (j.contains("uniform")) m.uniform = regime_from_json(j["uniform"], m.uniform);
  if (j.contains("mean")) m.uniform = regime_from_json(j, m.uniform);
  if (j.contains("skew_high")) m.skew_high = regime_from_json(j["skew_high"], m.skew_high);
  if (j.contains("skew_low")) m.skew_low = regime_from_json(j["skew_low"], m.skew_low);
  if (j.contains("spike")) m.spike = regime_from_json(j["spike"], m.spike);
  m.rotate_every_rounds = j.value("rotate_every_rounds", m.rotate_every_rounds);
  m.rotate_step = j.value("rotate_step", m.rotate_step);
  m.on_ms = j.value("on_ms", m.on_ms);
  m.off_ms = j.value("off_ms", m.off_ms);
  m.validate();
  return m;
}

}  // namespace cabinet
