#pragma once

#include <stdexcept>
#include <string>

namespace resbm {

enum class ErrorCategory { io, validation, estimation, inference };

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::io: return "io";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::estimation: return "estimation";
    case ErrorCategory::inference: return "inference";
  }
  return "unknown";
}

/// Base of every error thrown by the library. The category drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorCategory::validation, what) {}
};

class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& what, int iteration = -1)
      : Error(ErrorCategory::estimation,
              iteration >= 0 ? what + " (iteration " + std::to_string(iteration) + ")" : what),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

class InferenceError : public Error {
 public:
  explicit InferenceError(const std::string& what) : Error(ErrorCategory::inference, what) {}
};

}  // namespace resbm
