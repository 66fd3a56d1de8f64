// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_ERROR_HPP
#define PATCHPROP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace patchprop {

enum class ErrorCode {
  kBounds = 1,
  kConfig,
  kNoPatch,
  kCorruption,
  kShapeMismatch,
  kIo,
  kUnsupported,
  kNotReady,
  kUnknownClass,
  kNotFound,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace patchprop

#endif  // PATCHPROP_ERROR_HPP
