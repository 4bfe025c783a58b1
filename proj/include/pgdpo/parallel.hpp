#pragma once

#include <cstddef>
#include <functional>

#include "pgdpo/linalg.hpp"

namespace pgdpo {

/// Size of the process-wide worker pool used by `parallel_for` (default 1).
void set_worker_count(int workers);
int worker_count();

/// Runs body(i) for i in [0, n).  Each index must write only its own outputs;
/// results are then independent of the worker count.  Calls made from inside
/// a running body execute inline.  If several bodies throw, the exception of
/// the lowest index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Pairwise sum in index order.
double pairwise_sum(const double* x, std::size_t n);

/// Pairwise sum of the columns of `m`, in column order.
Vec pairwise_column_sum(CMatRef m);

}  // namespace pgdpo
