// Copyright 2026 The trajloop Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace trajloop {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates one of its type invariants.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration (unknown env id, malformed config file, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An API was called in a state where it is not allowed.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Raised by language backends. `retryable` marks transient failures.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what, bool retryable = false, int attempts = 1)
      : Error(what), retryable_(retryable), attempts_(attempts) {}

  bool retryable() const noexcept { return retryable_; }
  int attempts() const noexcept { return attempts_; }

 private:
  bool retryable_;
  int attempts_;
};

/// The scripted backend was asked for a prompt it has no entry for.
class UnscriptedPrompt : public BackendError {
 public:
  UnscriptedPrompt(const std::string& digest)
      : BackendError("unscripted prompt (digest " + digest + ")"), digest_(digest) {}

  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

}  // namespace trajloop
