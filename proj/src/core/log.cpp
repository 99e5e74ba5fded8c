// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/core/log.hpp>

#include <atomic>
#include <iostream>
#include <mutex>

namespace gskit {

namespace {
std::atomic<LogLevel> gLevel{LogLevel::Warning};
std::mutex gMutex;

const char *
tag(LogLevel level) {
    switch (level) {
    case LogLevel::Debug: return "debug";
    case LogLevel::Info: return "info";
    case LogLevel::Warning: return "warning";
    case LogLevel::Error: return "error";
    case LogLevel::Off: break;
    }
    return "";
}
} // namespace

void
setLogLevel(LogLevel level) {
    gLevel = level;
}

LogLevel
logLevel() {
    return gLevel;
}

void
log(LogLevel level, const std::string &message) {
    if (level < gLevel.load()) return;
    std::lock_guard lock(gMutex);
    std::clog << "[gskit " << tag(level) << "] " << message << '\n';
}

} // namespace gskit
