#pragma once

#include <functional>

namespace monoscale {

/// Process-wide worker count for parallel_for. Starts from the
/// MONOSCALE_THREADS environment variable, default 1.
int thread_count();
void set_thread_count(int n);

/// Runs fn(0..n-1) on thread_count() workers in contiguous index blocks.
/// Callers write results into per-index slots, so outputs are identical for
/// every worker count; with one worker this is a plain loop.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace monoscale
