#pragma once

#include <stdexcept>
#include <string>

namespace imago {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define IMAGO_ERROR(Name)                                           \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(what) {}         \
  }

// Input and pool validation.
IMAGO_ERROR(MalformedInput);
IMAGO_ERROR(UnknownAttribute);
IMAGO_ERROR(UnknownDependency);
IMAGO_ERROR(UnknownValue);
IMAGO_ERROR(BadDistribution);
IMAGO_ERROR(DuplicateId);
IMAGO_ERROR(AttributeClash);
IMAGO_ERROR(IdClash);

// Learning from datasets.
IMAGO_ERROR(ColumnMissing);
IMAGO_ERROR(OrderMismatch);
IMAGO_ERROR(OrderViolation);
IMAGO_ERROR(AlphaZeroWithEmptyRow);

// Inference.
IMAGO_ERROR(InconsistentContext);
IMAGO_ERROR(IncompleteAssignment);
IMAGO_ERROR(ZeroEvidence);

// Search and enumeration.
IMAGO_ERROR(NoTargetDependency);
IMAGO_ERROR(UnexplainableEvidence);
IMAGO_ERROR(PoolTooLarge);
IMAGO_ERROR(PreconditionViolated);

#undef IMAGO_ERROR

}  // namespace imago
