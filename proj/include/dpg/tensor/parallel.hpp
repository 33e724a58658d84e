#pragma once

#include <cstddef>
#include <functional>

namespace dpg {

// Worker count used by parallel_for. 1 (the default) runs inline.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [0, count). Each index must write disjoint outputs, so
// results are identical for every thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace dpg
