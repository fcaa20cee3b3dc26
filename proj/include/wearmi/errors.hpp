#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wearmi {

/// Base of every error raised by the library. `code()` is a stable,
/// machine-readable tag used in CLI error reports.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define WEARMI_DEFINE_ERROR(Name, Tag)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& message) : Error(Tag, message) {}   \
  };

WEARMI_DEFINE_ERROR(InvalidArgument, "InvalidArgument")
WEARMI_DEFINE_ERROR(NoObservedSleep, "NoObservedSleep")
WEARMI_DEFINE_ERROR(SingularCovariance, "SingularCovariance")
WEARMI_DEFINE_ERROR(EmptyDonorPool, "EmptyDonorPool")
WEARMI_DEFINE_ERROR(NonConvergence, "NonConvergence")
WEARMI_DEFINE_ERROR(RankDeficientDesign, "RankDeficientDesign")
WEARMI_DEFINE_ERROR(FactorizationError, "FactorizationError")
WEARMI_DEFINE_ERROR(ConstantInput, "ConstantInput")
WEARMI_DEFINE_ERROR(NoMissingness, "NoMissingness")
WEARMI_DEFINE_ERROR(InsufficientPool, "InsufficientPool")
WEARMI_DEFINE_ERROR(ProfileError, "ProfileError")
WEARMI_DEFINE_ERROR(ConfigError, "ConfigError")
WEARMI_DEFINE_ERROR(ImputationError, "ImputationError")

#undef WEARMI_DEFINE_ERROR

/// Ingestion failure carrying every violation found, each prefixed with the
/// offending line number where one exists.
class DataError : public Error {
 public:
  DataError(std::string code, std::vector<std::string> violations)
      : Error(std::move(code), summarize(violations)),
        violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string summarize(const std::vector<std::string>& v) {
    std::string out = std::to_string(v.size()) + " violation(s)";
    for (std::size_t i = 0; i < v.size() && i < 20; ++i) out += "\n  " + v[i];
    if (v.size() > 20) out += "\n  ...";
    return out;
  }

  std::vector<std::string> violations_;
};

class SchemaError : public DataError {
 public:
  explicit SchemaError(std::vector<std::string> v) : DataError("SchemaError", std::move(v)) {}
};

class CompletenessError : public DataError {
 public:
  explicit CompletenessError(std::vector<std::string> v)
      : DataError("CompletenessError", std::move(v)) {}
};

class CrossRefError : public DataError {
 public:
  explicit CrossRefError(std::vector<std::string> v) : DataError("CrossRefError", std::move(v)) {}
};

}  // namespace wearmi
