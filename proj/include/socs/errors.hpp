#pragma once

#include <stdexcept>
#include <string>

namespace socs {

// Error families map onto CLI exit codes: ConfigError -> 2, DataError -> 3,
// NumericalError -> 4. Anything else that escapes is a plain failure (1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inputs whose shapes or sizes disagree (point/keypoint counts, label
// dimensions, tensor shapes).
struct DimensionMismatch : DataError {
  using DataError::DataError;
};
struct ShapeMismatch : DataError {
  using DataError::DataError;
};

// Warp system whose interpolation matrix is rank deficient (coplanar or
// coincident keypoints at zero regularization).
struct SingularSystem : NumericalError {
  using NumericalError::NumericalError;
};

// Bin index outside [0, bins) handed to a decoder.
struct InvalidBin : DataError {
  using DataError::DataError;
};

// Shape parameters outside their documented ranges.
struct InvalidParams : ConfigError {
  using ConfigError::ConfigError;
};

// A rendered view with no surviving points.
struct EmptyView : DataError {
  using DataError::DataError;
};

// Training loss went NaN/Inf; message carries step and sample identifiers.
struct NonFiniteLoss : NumericalError {
  using NumericalError::NumericalError;
};

// Fewer correspondences than a minimal pose sample needs.
struct DegenerateConfiguration : NumericalError {
  using NumericalError::NumericalError;
};

// Robust fitting failed to find a model supported beyond its own sample.
struct NoModel : NumericalError {
  using NumericalError::NumericalError;
};

// Metric aggregation over zero records.
struct EmptyEval : DataError {
  using DataError::DataError;
};

}  // namespace socs
