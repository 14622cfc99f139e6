#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kfp {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorCategory { Config, Precondition, Solver, Check };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define KFP_DEFINE_ERROR(Name, Category)                                   \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(Category, #Name ": " + what) {} \
  };

KFP_DEFINE_ERROR(ConfigError, ErrorCategory::Config)
KFP_DEFINE_ERROR(InvalidArgument, ErrorCategory::Precondition)
KFP_DEFINE_ERROR(PointNotOnBoundary, ErrorCategory::Precondition)
KFP_DEFINE_ERROR(NonSymmetricA, ErrorCategory::Precondition)
KFP_DEFINE_ERROR(AssumptionViolated, ErrorCategory::Precondition)
KFP_DEFINE_ERROR(TooCoarse, ErrorCategory::Precondition)
KFP_DEFINE_ERROR(PreconditionViolated, ErrorCategory::Precondition)
KFP_DEFINE_ERROR(SourceOutside, ErrorCategory::Precondition)
KFP_DEFINE_ERROR(MaskMismatch, ErrorCategory::Precondition)
KFP_DEFINE_ERROR(SingularPivot, ErrorCategory::Solver)
KFP_DEFINE_ERROR(NoProgress, ErrorCategory::Solver)
KFP_DEFINE_ERROR(NoAdmissibleDelta, ErrorCategory::Solver)
KFP_DEFINE_ERROR(NoAdmissibleParameters, ErrorCategory::Solver)
KFP_DEFINE_ERROR(TooManyCensored, ErrorCategory::Solver)

#undef KFP_DEFINE_ERROR

/// Iterative solve failed to reach its tolerance; keeps the residual history.
class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, std::vector<double> history)
      : Error(ErrorCategory::Solver, "NotConverged: " + what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace kfp
