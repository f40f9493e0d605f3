#pragma once

#include <stdexcept>
#include <string>

namespace segloc {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// -- geometry ---------------------------------------------------------------

class TooFewCorrespondences : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

// -- mask pipeline ----------------------------------------------------------

class NonPositiveDepth : public Error {
 public:
  using Error::Error;
};

class NonPositiveDisparity : public Error {
 public:
  using Error::Error;
};

class DegenerateMask : public Error {
 public:
  using Error::Error;
};

class CentroidOutOfBounds : public Error {
 public:
  using Error::Error;
};

// -- mapping ----------------------------------------------------------------

class EmptyMap : public Error {
 public:
  using Error::Error;
};

// -- association ------------------------------------------------------------

class NoConsistentSet : public Error {
 public:
  using Error::Error;
};

class InstanceTooLarge : public Error {
 public:
  using Error::Error;
};

class TooFewInliers : public Error {
 public:
  using Error::Error;
};

/// Raised when two maps with identical frame names are compared without
/// explicit opt-in; guards against accidental same-session self-alignment.
class SameFrameComparison : public Error {
 public:
  using Error::Error;
};

// -- localization -----------------------------------------------------------

/// Raised when no trustworthy transform can be produced. Wraps the cause
/// (too few inliers, no consistent set) so callers can fail cleanly instead
/// of consuming a garbage transform.
class LocalizationRejected : public Error {
 public:
  using Error::Error;
};

// -- dataset / file I/O -----------------------------------------------------

class IoError : public Error {
 public:
  using Error::Error;
};

class MalformedHeader : public IoError {
 public:
  using IoError::IoError;
};

class MalformedRow : public IoError {
 public:
  MalformedRow(const std::string& message, std::size_t line)
      : IoError(message + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NonMonotonicFrames : public IoError {
 public:
  using IoError::IoError;
};

class RangeOutOfBounds : public Error {
 public:
  using Error::Error;
};

}  // namespace segloc
