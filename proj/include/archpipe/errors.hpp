#pragma once

#include <stdexcept>
#include <string>

namespace archpipe {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WorkspaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by backend adapters. `kind` distinguishes transport failures that
// are retryable (unreachable, timeout, rate_limited) from contract
// violations that are not.
struct BackendError : std::runtime_error {
  enum class Kind {
    unreachable,
    timeout,
    rate_limited,
    dimension_mismatch,
    point_out_of_bounds,
    bad_request,
    not_found,
  };

  BackendError(Kind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}

  bool retryable() const {
    return kind == Kind::unreachable || kind == Kind::timeout ||
           kind == Kind::rate_limited;
  }

  Kind kind;
};

}  // namespace archpipe
