#pragma once

#include <stdexcept>
#include <string>

namespace supplybp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct NonPositiveVariance : Error { using Error::Error; };
struct SingularMatrix : Error { using Error::Error; };
struct NoAnchor : Error { using Error::Error; };
struct KeyMismatch : Error { using Error::Error; };
struct MissingTruth : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };

}  // namespace supplybp
