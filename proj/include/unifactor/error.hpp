#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace unifactor {

/// Failure categories raised by the library. The CLI maps these onto exit
/// statuses, so keep the set small and stable.
enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kParse,
  kAsymmetric,
  kDegenerateData,
  kNegativeSpectrum,
  kRankDeficient,
  kSingularModel,
  kInfeasibleStart,
  kNonOrthonormal,
  kDegenerateBasis,
  kIterationFailure,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kAsymmetric: return "asymmetric matrix";
    case ErrorKind::kDegenerateData: return "degenerate data";
    case ErrorKind::kNegativeSpectrum: return "negative spectrum";
    case ErrorKind::kRankDeficient: return "rank deficient";
    case ErrorKind::kSingularModel: return "singular model";
    case ErrorKind::kInfeasibleStart: return "infeasible start";
    case ErrorKind::kNonOrthonormal: return "non-orthonormal basis";
    case ErrorKind::kDegenerateBasis: return "degenerate basis";
    case ErrorKind::kIterationFailure: return "iteration failure";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

inline void require(bool condition, ErrorKind kind, const char* message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace detail
}  // namespace unifactor
