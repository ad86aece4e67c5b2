#pragma once

#include <stdexcept>
#include <string>

namespace barlift {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// vee() was handed a matrix that is not skew-symmetric.
struct NonSkewInput : Error {
  explicit NonSkewInput(const std::string& what) : Error(what) {}
};

// An angular velocity is not orthogonal to its unit vector.
struct TangencyViolation : Error {
  explicit TangencyViolation(const std::string& what) : Error(what) {}
};

// A vector that should be renormalizable has collapsed toward zero,
// or a rotation matrix is too far from orthogonal to repair.
struct DegenerateState : Error {
  explicit DegenerateState(const std::string& what) : Error(what) {}
};

// The mass matrix of the coupled dynamics lost rank.
struct SingularMassMatrix : Error {
  explicit SingularMassMatrix(const std::string& what) : Error(what) {}
};

// A cable length reached (numerically) zero.
struct CableCollapse : Error {
  explicit CableCollapse(const std::string& what) : Error(what) {}
};

// A virtual control passed to the reduced dynamics is not parallel
// to its cable direction.
struct NonParallelMu : Error {
  explicit NonParallelMu(const std::string& what) : Error(what) {}
};

// The virtual control vanished, so no cable direction can be extracted.
struct DegenerateThrust : Error {
  explicit DegenerateThrust(const std::string& what) : Error(what) {}
};

// The commanded thrust direction is (anti)parallel to the heading
// reference, so the desired attitude frame is undefined.
struct GimbalDegeneracy : Error {
  explicit GimbalDegeneracy(const std::string& what) : Error(what) {}
};

// Gain synthesis exhausted its search without a certificate.
struct SynthesisFailed : Error {
  explicit SynthesisFailed(const std::string& what) : Error(what) {}
};

// The disturbed-system analysis found no usable contraction margin.
struct NotContracting : Error {
  explicit NotContracting(const std::string& what) : Error(what) {}
};

// A disturbed run never reached the promised ultimate-bound set.
struct NeverEnters : Error {
  explicit NeverEnters(const std::string& what) : Error(what) {}
};

// A state blew up (non-finite or absurdly large) during integration,
// typically from under-resolving the stiff cable mode.
struct StiffnessInstability : Error {
  explicit StiffnessInstability(const std::string& what) : Error(what) {}
};

// A config file line could not be parsed. Carries the 1-based line number.
struct ParseError : Error {
  int line;
  ParseError(int line_, const std::string& what)
      : Error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

// A parsed config value is out of range or inconsistent. Carries the key.
struct ValidationError : Error {
  std::string key;
  ValidationError(const std::string& key_, const std::string& reason)
      : Error(key_ + ": " + reason), key(key_) {}
};

}  // namespace barlift
