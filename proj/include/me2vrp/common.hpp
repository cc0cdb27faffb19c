#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace me2vrp {

using NodeId = int;
using EdId = int;
using EpId = int;

/// Absolute tolerance for energy (kWh) and time (minutes) comparisons.
inline constexpr double kTolerance = 1e-6;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedRouteError : public Error {
 public:
  using Error::Error;
};
class IncompleteGraphError : public Error {
 public:
  using Error::Error;
};
class NoOutgoingArcError : public Error {
 public:
  using Error::Error;
};
class OffRouteError : public Error {
 public:
  using Error::Error;
};
class ToleranceViolationError : public Error {
 public:
  using Error::Error;
};
class MalformedSolutionError : public Error {
 public:
  using Error::Error;
};
class InconsistentDeliveryError : public Error {
 public:
  using Error::Error;
};
class InvalidInstanceError : public Error {
 public:
  using Error::Error;
};
class GenerationError : public Error {
 public:
  using Error::Error;
};
class PipelineError : public Error {
 public:
  using Error::Error;
};
/// A file does not follow the expected document layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Worker count from ME2VRP_THREADS (0 or unset = hardware concurrency).
inline unsigned worker_count() {
  unsigned n = 0;
  if (const char* env = std::getenv("ME2VRP_THREADS")) {
    n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// visited exactly once; callers store results by index so output order
/// never depends on scheduling.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace me2vrp
