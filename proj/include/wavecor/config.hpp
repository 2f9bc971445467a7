#pragma once

// Numeric precision of the engine. The default build computes in 32-bit
// floats; defining WAVECOR_DOUBLE produces a 64-bit twin that lives in a
// distinct inline namespace so both can be linked into one binary.

#ifdef WAVECOR_DOUBLE
#define WAVECOR_PRECISION_NS f64
#else
#define WAVECOR_PRECISION_NS f32
#endif

#define WAVECOR_BEGIN_NAMESPACE \
  namespace wavecor {           \
  inline namespace WAVECOR_PRECISION_NS {
#define WAVECOR_END_NAMESPACE \
  }                           \
  }

#include <cstdint>

WAVECOR_BEGIN_NAMESPACE

#ifdef WAVECOR_DOUBLE
using Real = double;
#else
using Real = float;
#endif

using Index = std::int64_t;

inline constexpr const char* kVersion = "0.3.0";

WAVECOR_END_NAMESPACE
