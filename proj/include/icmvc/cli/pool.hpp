#pragma once

#include <cstddef>
#include <functional>

namespace icmvc::cli {

/// Runs task(0) .. task(count - 1) on up to `jobs` threads. Tasks must not
/// throw; each writes only its own result slot.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task);

/// hardware_concurrency, or 1 when unknown.
unsigned default_jobs();

}  // namespace icmvc::cli
