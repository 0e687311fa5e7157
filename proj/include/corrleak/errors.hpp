//
// Copyright 2026 The corrleak Authors
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
//

#ifndef CORRLEAK_ERRORS_HPP
#define CORRLEAK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace corrleak {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveSemiDefinite : Error {
  using Error::Error;
};

struct IndexOrder : Error {
  using Error::Error;
};

struct InfeasibleConstraints : Error {
  using Error::Error;
};

struct InvalidMatrix : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct ZeroVariance : Error {
  using Error::Error;
};

struct DegenerateSupport : Error {
  using Error::Error;
};

struct SingleClass : Error {
  using Error::Error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct OutOfRange : Error {
  using Error::Error;
};

struct UnsupportedB : Error {
  using Error::Error;
};

struct DegenerateLabels : Error {
  using Error::Error;
};

struct NoSurvivingDatasets : Error {
  using Error::Error;
};

struct NoMatchingLabel : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct SchemaError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace corrleak

#endif  // CORRLEAK_ERRORS_HPP
