#pragma once

#include <cstddef>
#include <cstdint>

namespace smds {

// One evaluation point of a run.
struct TraceRecord {
    std::int64_t t = 0;
    double stress = 0.0;
    double stress_norm = 0.0;
    double mu = 0.0;
    double wall_ms = 0.0;
    std::size_t pairs = 0;
};

}  // namespace smds
