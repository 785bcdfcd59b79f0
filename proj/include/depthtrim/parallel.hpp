#pragma once

#include <cstddef>
#include <functional>

namespace depthtrim {

/// Worker cap for parallel loops. 0 means hardware concurrency.
/// Changing it never changes numeric results: work items are indexed and all
/// reductions happen in index order.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs fn(i) for i in [0, count). Items must be independent.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace depthtrim
