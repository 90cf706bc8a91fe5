#pragma once

#include <stdexcept>
#include <string>

namespace vidshield {

enum class Errc {
  invalid_argument,
  dimension_mismatch,
  empty_input,
  io_failure,
  decode_failure,
  too_short,
  out_of_range,
  calibration_undefined,
  all_adversarial,
  denoiser_contract,
  denoiser_process,
  denoiser_timeout,
  malformed_input,
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::empty_input: return "empty_input";
    case Errc::io_failure: return "io_failure";
    case Errc::decode_failure: return "decode_failure";
    case Errc::too_short: return "too_short";
    case Errc::out_of_range: return "out_of_range";
    case Errc::calibration_undefined: return "calibration_undefined";
    case Errc::all_adversarial: return "all_adversarial";
    case Errc::denoiser_contract: return "denoiser_contract";
    case Errc::denoiser_process: return "denoiser_process";
    case Errc::denoiser_timeout: return "denoiser_timeout";
    case Errc::malformed_input: return "malformed_input";
  }
  return "unknown";
}

// Every failure in the library is raised as an Error carrying a code that
// callers (and tests) can branch on.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace vidshield
