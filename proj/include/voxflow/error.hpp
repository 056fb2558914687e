#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace voxflow {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error { using Error::Error; };
struct MalformedScan : Error { using Error::Error; };
struct MalformedLabel : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct InvalidTensor : Error { using Error::Error; };
struct InconsistentMap : Error { using Error::Error; };
struct MissingLabels : Error { using Error::Error; };
struct InvalidSector : Error { using Error::Error; };
struct UndefinedMetric : Error { using Error::Error; };
struct IncompatibleCheckpoint : Error { using Error::Error; };

struct UnknownClass : Error {
  std::uint32_t raw_id;
  explicit UnknownClass(std::uint32_t id)
      : Error("unknown raw class id " + std::to_string(id)), raw_id(id) {}
};

struct DivergenceError : Error {
  std::int64_t step;
  DivergenceError(std::int64_t at, const std::string& detail)
      : Error("training diverged at step " + std::to_string(at) + ": " + detail), step(at) {}
};

struct EquivalenceFailure : Error {
  double max_deviation;
  explicit EquivalenceFailure(double deviation)
      : Error("dataflow outputs disagree, max relative deviation " + std::to_string(deviation)),
        max_deviation(deviation) {}
};

}  // namespace voxflow
