#pragma once

#include <stdexcept>
#include <string>

namespace bperc {

/// Parameter outside an operation's domain.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// An analyzed structure reaches the window rim, so its finite-volume
/// reading is unreliable. Samples raising this are excluded and counted.
struct MarginViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Too few usable samples for the requested statistic.
struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A property that must hold on every configuration failed. Always a bug
/// (or an injected fault).
struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

/// An operation was called outside its precondition.
struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace bperc
