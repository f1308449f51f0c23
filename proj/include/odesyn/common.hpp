#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace odesyn {

struct shape_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Log verbosity is read once from the ODESYN_LOG environment variable:
// "quiet", "info" (default) or "debug".
enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

// SplitMix64 step. Derives independent sub-seeds (per epoch, per batch, per
// purpose) from one master seed so whole runs replay bit-exactly.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace odesyn
