#pragma once

#include <stdexcept>
#include <string>

namespace imcguard {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Shapes or lengths that do not line up.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Invalid configuration values, including campaign config diagnostics.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// File-system or container-format failures. Carries the offending path.
class IoError : public Error {
  public:
    IoError(const std::string &path, const std::string &what)
        : Error(path + ": " + what), path_(path) {}

    const std::string &path() const noexcept { return path_; }

  private:
    std::string path_;
};

} // namespace imcguard
