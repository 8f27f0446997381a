#pragma once

#include <stdexcept>
#include <string>

namespace semicp {

/// Arguments outside an operation's domain (invalid counts, bad rates, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Problem size exceeds what a per-vertex simulator supports.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// The ODE integrator left the invariant region beyond tolerance.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No admissible supercritical design for the requested parameters.
class InfeasibleDesign : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The true chain left the box on which the domination coupling is defined.
class RegionExit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace semicp
