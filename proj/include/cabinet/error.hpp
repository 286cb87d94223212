#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cabinet {

enum class ErrorCode {
  bad_threshold_range,
  infeasible_ratio,
  not_leader,
  round_in_flight,
  round_not_open,
  stale_wclock,
  duplicate_reply,
  conflicting_confirmations,
  too_large,
  infeasible,
  config_error,
  livelock_detected,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_threshold_range: return "bad_threshold_range";
    case ErrorCode::infeasible_ratio: return "infeasible_ratio";
    case ErrorCode::not_leader: return "not_leader";
    case ErrorCode::round_in_flight: return "round_in_flight";
    case ErrorCode::round_not_open: return "round_not_open";
    case ErrorCode::stale_wclock: return "stale_wclock";
    case ErrorCode::duplicate_reply: return "duplicate_reply";
    case ErrorCode::conflicting_confirmations: return "conflicting_confirmations";
    case ErrorCode::too_large: return "too_large";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::livelock_detected: return "livelock_detected";
  }
  return "unknown";
}

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cabinet
