// Copyright 2026 The avqmetts Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace avqmetts {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A numerical invariant was violated (norm drift, phase residual, ...).
class NumericalError : public Error {
  public:
    using Error::Error;
};

namespace log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline Level &threshold() {
    static Level level = Level::warn;
    return level;
}

inline void write(Level level, std::string_view msg) {
    if (level < threshold()) {
        return;
    }
    static constexpr const char *names[] = {"debug", "info", "warn", "error"};
    std::fprintf(stderr, "[avqmetts:%s] %.*s\n",
                 names[static_cast<int>(level)], static_cast<int>(msg.size()),
                 msg.data());
}

inline void debug(std::string_view msg) { write(Level::debug, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }
inline void warn(std::string_view msg) { write(Level::warn, msg); }

} // namespace log
} // namespace avqmetts
