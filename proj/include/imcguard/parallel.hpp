#pragma once

#include <cstddef>
#include <exception>
#include <omp.h>

namespace imcguard {

/// Plain loop; the reference path every parallel result is checked against.
template <typename F> void serial_for(std::size_t count, F &&body) {
    for (std::size_t i = 0; i < count; ++i)
        body(i);
}

/// OpenMP loop over independent indices. `body` must only write state owned
/// by its index. The first exception thrown by any iteration is rethrown.
template <typename F> void omp_for(std::size_t count, int workers, F &&body) {
    std::exception_ptr error;
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(imcguard_omp_for_error)
            if (!error)
                error = std::current_exception();
        }
    }
    if (error)
        std::rethrow_exception(error);
}

template <typename F> void for_each_index(std::size_t count, int workers, F &&body) {
    if (workers <= 1)
        serial_for(count, body);
    else
        omp_for(count, workers, body);
}

} // namespace imcguard
