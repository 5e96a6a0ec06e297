// Copyright 2026 The Kitten Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace kitten {

/// Failure classes. The CLI maps each one to its own exit code.
enum class ErrorKind {
    Config,       ///< malformed or out-of-range configuration
    Domain,       ///< parameters outside the physical model's domain
    Convergence,  ///< iterative procedure did not meet its stopping rule
    Io,           ///< file system or parse failure
};

class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

   private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string &what) : Error(ErrorKind::Config, what) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string &what) : Error(ErrorKind::Domain, what) {}
};

struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string &what) : Error(ErrorKind::Convergence, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string &what) : Error(ErrorKind::Io, what) {}
};

}  // namespace kitten
