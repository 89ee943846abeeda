#pragma once

#include <exception>
#include <mutex>

namespace monoid {

/// Selects between the OpenMP kernels and their serial reference loops.
/// Both paths produce bit-identical results; reductions run in a fixed order.
enum class Execution { serial, parallel };

/// Caps the OpenMP worker count (n <= 0 restores the runtime default).
void set_thread_cap(int n);
int max_threads();

/// Runs body(i) for i in [0, n). Iterations must write disjoint data.
/// An exception escaping any iteration is rethrown after the loop (the one
/// with the lowest index wins).
template <typename Body>
void for_each_index(int n, Execution exec, Body&& body) {
  if (exec == Execution::serial || n < 2) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  int error_index = n;
  std::mutex guard;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (i < error_index) {
        error_index = i;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace monoid
