#pragma once

#include "sfa/errors.hpp"

#include <string>
#include <utility>

namespace sfa {

/// Execution mode of the data-parallel kernels. Every kernel writes each
/// task's output into a preassigned slot and draws randomness from a stream
/// derived from the task id, so Serial and Parallel produce bitwise-identical
/// results; Serial is the reference the tests compare against.
enum class Exec { Serial, Parallel };

namespace detail {
struct TaskFailure {
    bool failed = false;
    std::string message;
};
} // namespace detail

template <class F>
void for_each_task(int n, Exec mode, F&& body) {
    detail::TaskFailure fail;
#ifdef _OPENMP
    if (mode == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (const std::exception& e) {
#pragma omp critical
                {
                    if (!fail.failed) {
                        fail.failed = true;
                        fail.message = e.what();
                    }
                }
            }
        }
        if (fail.failed) throw NumericalError(fail.message);
        return;
    }
#endif
    for (int i = 0; i < n; ++i) body(i);
}

} // namespace sfa
