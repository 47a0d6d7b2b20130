#ifndef EM_ERRORS_HPP
#define EM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace em {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Two objects that must live on the same grid do not. `member` names the
/// offending field (e.g. "excitation.channels[3].occupancy").
struct GeometryError : Error {
  std::string member;
  GeometryError(std::string member_, const std::string& what_)
      : Error(member_ + ": " + what_), member(std::move(member_)) {}
};

/// Invalid values: NaN/Inf inputs, out-of-range fields, degenerate masks.
struct ValidationError : Error {
  using Error::Error;
};

/// Malformed container or checkpoint files. One kind per failure mode.
struct FormatError : Error {
  enum class Kind { bad_magic, bad_header, unsupported_version, truncated, length_mismatch };
  Kind kind;
  FormatError(Kind kind_, const std::string& what_) : Error(what_), kind(kind_) {}
};

/// Non-finite value reached a place that must abort (e.g. the training loss).
struct NumericError : Error {
  using Error::Error;
};

}  // namespace em

#endif
