#pragma once

#include <stdexcept>
#include <string>

namespace manga {

// Root of the toolkit error hierarchy. Every throwing operation in this
// library throws a subclass of Error so callers can catch one type at the
// CLI boundary and map it to an exit status.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
struct IoError : Error { using Error::Error; };
// Input bytes are not a valid instance of the expected format.
struct ParseError : Error { using Error::Error; };
// A configuration value is missing, malformed, or inconsistent.
struct ConfigError : Error { using Error::Error; };

// Homography application hit the plane at infinity (w ~ 0).
struct PointAtInfinity : Error { using Error::Error; };
// Correspondences do not determine a homography (collinear, repeated, ...).
struct DegenerateConfiguration : Error { using Error::Error; };

// Page-level structural problems.
struct NoFrames : Error { using Error::Error; };
struct UnassignedScene : Error { using Error::Error; };
struct PageMismatch : Error { using Error::Error; };

// A mask required by an operation has no pixels set.
struct EmptyMaskError : Error { using Error::Error; };

// Pluggable engine problems.
struct TaggerUnavailable : Error { using Error::Error; };
struct EngineFailure : Error { using Error::Error; };
struct EmptyOutput : Error { using Error::Error; };
struct RasterizerFailure : Error { using Error::Error; };

}  // namespace manga
