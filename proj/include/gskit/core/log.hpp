// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace gskit {

enum class LogLevel { Debug = 0, Info = 1, Warning = 2, Error = 3, Off = 4 };

void setLogLevel(LogLevel level);
LogLevel logLevel();

void log(LogLevel level, const std::string &message);

inline void logWarning(const std::string &message) { log(LogLevel::Warning, message); }
inline void logInfo(const std::string &message) { log(LogLevel::Info, message); }

} // namespace gskit
