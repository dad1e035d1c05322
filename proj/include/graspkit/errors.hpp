#pragma once

#include <stdexcept>
#include <string>

namespace graspkit {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// mesh / io
struct ParseError : Error { using Error::Error; };
struct EmptyMesh : Error { using Error::Error; };
struct OrientationUnknown : Error { using Error::Error; };
struct NotOriented : Error { using Error::Error; };
struct InvalidDims : Error { using Error::Error; };

// grasp parameterization
struct DegenerateGrasp : Error { using Error::Error; };
struct NonConvexUnsupported : Error { using Error::Error; };
struct NotApplicable : Error { using Error::Error; };
struct InfeasibleVector : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };

// sampling
struct TooFewCandidates : Error { using Error::Error; };
struct PersistentDegeneracy : Error { using Error::Error; };
struct InvalidZ : Error { using Error::Error; };
struct InvalidK : Error { using Error::Error; };

// classifiers
struct EmptyClass : Error { using Error::Error; };
struct DivergenceDetected : Error { using Error::Error; };

// recognition
struct SamplerExhausted : Error { using Error::Error; };
struct MissingModelForZ : Error { using Error::Error; };

// evaluation / cli
struct NotNormalizedModel : Error { using Error::Error; };
struct MetadataMismatch : Error { using Error::Error; };
struct DegenerateVariance : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace graspkit
