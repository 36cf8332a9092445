#pragma once

#include <stdexcept>
#include <string>

namespace finsleroid {

enum class Errc {
  ZeroVector,
  ConstraintViolation,
  NormOutOfRange,
  NotPositiveDefinite,
  WrongSignature,
  SingularMetric,
  AxisPlane,
  StepUnderflow,
  InadmissibleStencil,
  RangeClamp,
  InadmissibleVector,
  OddDegreeMonomial,
  LeftAdmissibleDomain,
  StepRejected,
  SchemaError,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::ConstraintViolation: return "ConstraintViolation";
    case Errc::NormOutOfRange: return "NormOutOfRange";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::WrongSignature: return "WrongSignature";
    case Errc::SingularMetric: return "SingularMetric";
    case Errc::AxisPlane: return "AxisPlane";
    case Errc::StepUnderflow: return "StepUnderflow";
    case Errc::InadmissibleStencil: return "InadmissibleStencil";
    case Errc::RangeClamp: return "RangeClamp";
    case Errc::InadmissibleVector: return "InadmissibleVector";
    case Errc::OddDegreeMonomial: return "OddDegreeMonomial";
    case Errc::LeftAdmissibleDomain: return "LeftAdmissibleDomain";
    case Errc::StepRejected: return "StepRejected";
    case Errc::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  Errc code() const noexcept { return code_; }
  /// The diagnostic without the leading error name.
  const std::string& message() const noexcept { return message_; }

  /// Violations of the admissible domain (as opposed to numerical failures).
  bool is_domain_error() const noexcept {
    switch (code_) {
      case Errc::ZeroVector:
      case Errc::ConstraintViolation:
      case Errc::NormOutOfRange:
      case Errc::NotPositiveDefinite:
      case Errc::WrongSignature:
      case Errc::SingularMetric:
      case Errc::InadmissibleVector:
        return true;
      default:
        return false;
    }
  }

 private:
  Errc code_;
  std::string message_;
};

}  // namespace finsleroid
