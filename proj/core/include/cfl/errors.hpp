#pragma once

#include <stdexcept>
#include <string>

namespace cfl {

// Base of every error the simulator raises. Subclasses identify the failing
// operation so callers (and tests) can tell a bad scenario from a bad plan.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CFL_DECLARE_ERROR(Name)            \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

CFL_DECLARE_ERROR(ConfigError);
CFL_DECLARE_ERROR(NoSuchLinkError);
CFL_DECLARE_ERROR(UnreachableError);
CFL_DECLARE_ERROR(PartitionError);
CFL_DECLARE_ERROR(SelectionError);
CFL_DECLARE_ERROR(TransferError);
CFL_DECLARE_ERROR(DatasetFormatError);
CFL_DECLARE_ERROR(ShapeError);
CFL_DECLARE_ERROR(SegmentationError);
CFL_DECLARE_ERROR(ReassemblyError);
CFL_DECLARE_ERROR(AggregationError);
CFL_DECLARE_ERROR(CombineError);
CFL_DECLARE_ERROR(FinalizeError);
CFL_DECLARE_ERROR(ConsistencyError);
CFL_DECLARE_ERROR(StrandedDeviceError);
CFL_DECLARE_ERROR(NonComputeNodeError);

#undef CFL_DECLARE_ERROR

}  // namespace cfl
