#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>

namespace c2f {

using i64 = std::int64_t;
using u64 = std::uint64_t;

// Domain failures (bad arguments, inconsistent shapes) and I/O failures are
// reported as exceptions; callers at the CLI boundary map them to exit codes.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ArgumentError(msg);
}

}  // namespace c2f
