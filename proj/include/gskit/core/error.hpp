// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gskit {

/// Base of every error thrown by gskit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Binary splat file rejection. Carries the byte offset and the offending PLY property, if any.
class SplatFileError : public Error {
  public:
    SplatFileError(const std::string &what, std::size_t byteOffset, std::string property = {})
        : Error(what + " (byte " + std::to_string(byteOffset) +
                (property.empty() ? std::string() : ", property '" + property + "'") + ")"),
          mMessage(what), mByteOffset(byteOffset), mProperty(std::move(property)) {}

    const std::string &message() const { return mMessage; }

    std::size_t byteOffset() const { return mByteOffset; }
    const std::string &property() const { return mProperty; }

  private:
    std::string mMessage;
    std::size_t mByteOffset;
    std::string mProperty;
};

class KinematicTreeError : public Error {
  public:
    using Error::Error;
};

class SceneError : public Error {
  public:
    using Error::Error;
};

class AlignmentError : public Error {
  public:
    using Error::Error;
};

class EnvError : public Error {
  public:
    using Error::Error;
};

class DaggerError : public Error {
  public:
    using Error::Error;
};

class DatasetError : public Error {
  public:
    using Error::Error;
};

/// Teleoperation failure with a stable machine-readable code and the HTTP status it maps to.
class TeleopError : public Error {
  public:
    TeleopError(std::string code, const std::string &what, int httpStatus = 400)
        : Error(what), mCode(std::move(code)), mHttpStatus(httpStatus) {}

    const std::string &code() const { return mCode; }
    int httpStatus() const { return mHttpStatus; }

  private:
    std::string mCode;
    int mHttpStatus;
};

} // namespace gskit
