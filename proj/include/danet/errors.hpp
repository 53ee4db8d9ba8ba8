#pragma once

#include <stdexcept>
#include <string>

namespace danet {

// Coarse buckets the CLI maps to exit codes (data=3, sequencing=4, numeric=5).
// Usage errors never reach this hierarchy; the argument parser handles them.
enum class ErrorKind { data, sequencing, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define DANET_DEFINE_ERROR(Name, Kind)                    \
  struct Name : Error {                                   \
    explicit Name(const std::string& w)                   \
        : Error(ErrorKind::Kind, w) {}                    \
  }

DANET_DEFINE_ERROR(FormatError, data);      // malformed headers, bad magic/version
DANET_DEFINE_ERROR(ParseError, data);       // non-numeric cells, bad JSON
DANET_DEFINE_ERROR(DataError, data);        // label/id problems, missing fields
DANET_DEFINE_ERROR(IoError, data);          // unreadable/unwritable paths
DANET_DEFINE_ERROR(ShapeError, data);       // tensor/record dimension mismatch
DANET_DEFINE_ERROR(LengthError, data);      // too-short signals, window overruns
DANET_DEFINE_ERROR(NameError, data);        // unknown lead or rule names
DANET_DEFINE_ERROR(BoundsError, data);      // fiducial index out of range
DANET_DEFINE_ERROR(ParameterError, data);   // invalid synth/filter parameters
DANET_DEFINE_ERROR(ConfigError, data);      // inconsistent configs, arch mismatch
DANET_DEFINE_ERROR(StateError, data);       // backward without a recorded forward
DANET_DEFINE_ERROR(CorruptError, data);     // truncated checkpoint
DANET_DEFINE_ERROR(SequencingError, sequencing);
DANET_DEFINE_ERROR(NumericError, numeric);

#undef DANET_DEFINE_ERROR

}  // namespace danet
