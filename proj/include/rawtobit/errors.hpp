// Copyright 2026 The RAWtoBit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RAWTOBIT_ERRORS_HPP_
#define RAWTOBIT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace rtb {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidShape,
  kUnsupportedPattern,
  kInvalidMetadata,
  kPatchTooLarge,
  kInvalidSpec,
  kFormatError,
  kDecodeError,
  kModelMismatch,
  kMissingK,
  kPadRequired,
  kNanAbort,
  kIoError,
  kInternal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

const char* error_code_name(ErrorCode code);

}  // namespace rtb

#endif  // RAWTOBIT_ERRORS_HPP_
