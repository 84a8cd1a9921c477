#pragma once

#include <stdexcept>
#include <string>

namespace msfan {

/// Process exit codes used by the command-line tool. The numeric values are
/// part of the external interface.
enum class ErrorCode : int {
  kOk = 0,
  kConfig = 2,
  kIo = 3,
  kContract = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string kind, const std::string& what)
      : std::runtime_error(what), code_(code), kind_(std::move(kind)) {}

  ErrorCode code() const noexcept { return code_; }
  /// Short machine-readable tag, e.g. "dimension" or "truncated".
  const std::string& kind() const noexcept { return kind_; }

 private:
  ErrorCode code_;
  std::string kind_;
};

/// Shapes of operands do not line up.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorCode::kContract, "dimension", what) {}
};

/// A documented precondition of an operation was violated.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what)
      : Error(ErrorCode::kContract, "contract", what) {}
};

/// Misuse of the differentiation tape (e.g. backward from a foreign tensor).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what)
      : Error(ErrorCode::kContract, "usage", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCode::kConfig, "config", what) {}
};

class IoError : public Error {
 public:
  enum class Kind { kOpen, kBadMagic, kBadVersion, kTruncated, kChecksum, kFormat };

  IoError(Kind kind, const std::string& what)
      : Error(ErrorCode::kIo, kind_name(kind), what), io_kind_(kind) {}

  Kind io_kind() const noexcept { return io_kind_; }

  static const char* kind_name(Kind k) {
    switch (k) {
      case Kind::kOpen: return "open";
      case Kind::kBadMagic: return "bad_magic";
      case Kind::kBadVersion: return "bad_version";
      case Kind::kTruncated: return "truncated";
      case Kind::kChecksum: return "checksum";
      case Kind::kFormat: return "format";
    }
    return "io";
  }

 private:
  Kind io_kind_;
};

}  // namespace msfan
