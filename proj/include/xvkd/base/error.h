// Copyright (c) 2026 xvkd authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XVKD_BASE_ERROR_H_
#define XVKD_BASE_ERROR_H_

#include <stdexcept>
#include <string>

namespace xvkd {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class EmptySequenceError : public Error {
 public:
  using Error::Error;
};

class DegenerateBatchError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MissingGradientError : public Error {
 public:
  explicit MissingGradientError(const std::string& parameter)
      : Error("parameter '" + parameter + "' has no gradient"),
        parameter_(parameter) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Serialization failures. Each corruption class has its own type so that
// callers can tell a bad header from a short file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class CorruptHeaderError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class MismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Raised by pipeline drivers; the message is prefixed with the stage name.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& cause)
      : Error("[" + stage + "] " + cause), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace xvkd

#endif  // XVKD_BASE_ERROR_H_
