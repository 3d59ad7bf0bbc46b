#pragma once

#include <stdexcept>
#include <string>

namespace hypersam {

#define HYPERSAM_DEFINE_ERROR(Name)                                    \
  class Name : public std::runtime_error {                             \
   public:                                                             \
    explicit Name(const std::string& what) : std::runtime_error(what) {} \
  }

HYPERSAM_DEFINE_ERROR(ConfigError);
HYPERSAM_DEFINE_ERROR(UnknownAgent);
HYPERSAM_DEFINE_ERROR(DimensionMismatch);
HYPERSAM_DEFINE_ERROR(InvalidMacroAction);
HYPERSAM_DEFINE_ERROR(ZeroFeatures);
HYPERSAM_DEFINE_ERROR(NumericalError);
HYPERSAM_DEFINE_ERROR(ShapeError);
HYPERSAM_DEFINE_ERROR(GraphCycle);
HYPERSAM_DEFINE_ERROR(NoPath);
HYPERSAM_DEFINE_ERROR(MissingCheckpoint);
HYPERSAM_DEFINE_ERROR(CorruptTrace);
HYPERSAM_DEFINE_ERROR(CheckpointError);

#undef HYPERSAM_DEFINE_ERROR

}  // namespace hypersam
