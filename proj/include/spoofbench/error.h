// Copyright (c) 2026 SpoofBench Authors
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

#ifndef SPOOFBENCH_ERROR_H_
#define SPOOFBENCH_ERROR_H_

#include <stdexcept>
#include <string>

namespace spoofbench {

// Base class of every error raised by the library. The CLI maps these to
// exit code 1 and prints what().
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define SPOOFBENCH_DEFINE_ERROR(Name)                            \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
  };

SPOOFBENCH_DEFINE_ERROR(InvalidInputError)
SPOOFBENCH_DEFINE_ERROR(UnsupportedFormatError)
SPOOFBENCH_DEFINE_ERROR(IoError)
SPOOFBENCH_DEFINE_ERROR(ConfigError)
SPOOFBENCH_DEFINE_ERROR(AdapterError)
SPOOFBENCH_DEFINE_ERROR(NumericDomainError)
SPOOFBENCH_DEFINE_ERROR(ContractError)
SPOOFBENCH_DEFINE_ERROR(ParseError)
SPOOFBENCH_DEFINE_ERROR(InternalError)

#undef SPOOFBENCH_DEFINE_ERROR

// Shape and invariant checks that must hold in every build type.
#define SPOOFBENCH_CHECK(cond, msg)                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      throw ::spoofbench::InternalError(std::string(__FILE__) + ":" + \
                                        std::to_string(__LINE__) +    \
                                        ": " + (msg));                \
    }                                                                 \
  } while (0)

}  // namespace spoofbench

#endif  // SPOOFBENCH_ERROR_H_
