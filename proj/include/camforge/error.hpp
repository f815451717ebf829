#pragma once

#include <stdexcept>
#include <string>

namespace camforge {

/// A detector backend could not be reached or returned something unusable.
class BackendIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed tensor-exchange (CCT1) bytes.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside an explanation run; the message names the channel involved.
class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace camforge
