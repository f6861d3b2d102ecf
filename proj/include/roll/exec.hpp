#pragma once

namespace roll {

// Selects between the OpenMP kernel and its serial reference. Both produce
// bit-identical results; the serial path exists for testing and benchmarks.
enum class Exec { Serial, Parallel };

}  // namespace roll
