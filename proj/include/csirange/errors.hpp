// SPDX-License-Identifier: Apache-2.0
//
// csirange - CSI calibration and super-resolution ranging toolkit
// Copyright (C) 2026 The csirange authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace csirange {

// Invalid configuration or malformed input. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Failures that depend on the data rather than on the configuration.
// The CLI maps every EstimationError to exit code 3.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDataError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class DetectionError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class FusionError : public EstimationError {
public:
    using EstimationError::EstimationError;
};

} // namespace csirange
