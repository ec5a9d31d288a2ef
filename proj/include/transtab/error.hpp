#pragma once

#include <stdexcept>
#include <string>

namespace transtab {

// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter set violates a documented invariant.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// The PLL equilibrium equation has no root at the requested rotor angle.
class LossOfSynchronism : public Error {
 public:
  LossOfSynchronism(const std::string& what, double delta_g)
      : Error(what), delta_g_(delta_g) {}

  double delta_g() const noexcept { return delta_g_; }

 private:
  double delta_g_;
};

// Both PLL roots satisfy the negative-feedback condition within tolerance.
class AmbiguousBranch : public Error {
 public:
  using Error::Error;
};

// Mechanical power exceeds the peak of the power-angle curve.
class NoSep : public Error {
 public:
  using Error::Error;
};

// Critical clearing time could not be bracketed.
class NoCct : public Error {
 public:
  enum class Reason { UnstableAtZero, FaultOnLossOfSynchronism, NoInstabilityFound };

  NoCct(const std::string& what, Reason reason) : Error(what), reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

// Malformed configuration file or unknown scenario.
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline const char* to_string(NoCct::Reason r) {
  switch (r) {
    case NoCct::Reason::UnstableAtZero: return "unstable_at_zero";
    case NoCct::Reason::FaultOnLossOfSynchronism: return "fault_on_loss_of_synchronism";
    case NoCct::Reason::NoInstabilityFound: return "no_instability_found";
  }
  return "unknown";
}

}  // namespace transtab
