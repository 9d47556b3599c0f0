/*
 * Copyright 2026 The treematch authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License"). You may not use this file except in compliance
 * with the License. A copy of the License is located at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * or in the "license" file accompanying this file. This file is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES
 * OR CONDITIONS OF ANY KIND, either express or implied. See the License for the specific language governing permissions
 * and limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace treematch {

inline constexpr const char* kVersion = "0.1.0";

// Error classes map 1:1 onto C API status codes and CLI exit codes.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidArgError : std::runtime_error {
    explicit InvalidArgError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace treematch
