#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace mattekit {

// Invalid shapes, inconsistent module wiring, bad config values.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf encountered where finite values are required.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse (e.g. backward on a non-scalar).
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// File system failures; message carries the offending path.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-fatal diagnostics (empty loss masks, clamped dilation rates, ...).
// Writes "warning: ..." to stderr.
void warn(const std::string& msg);

// Worker cap for embarrassingly parallel sections (dataset synthesis,
// per-image evaluation, ablation runs). Honors MATTEKIT_THREADS, defaults
// to the hardware count capped at 8, and never returns less than 1.
int worker_count();

// Runs fn(i) for i in [0, n) across at most worker_count() threads.
// fn must not touch shared mutable state; exceptions are rethrown on the
// calling thread after all workers join.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace mattekit
