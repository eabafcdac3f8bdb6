#pragma once

#include <stdexcept>
#include <string>

namespace audionav {

/// Invalid room geometry (degenerate or self-intersecting polygon).
class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of an operation.
class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Rendering was requested for a scene without any active source.
class EmptySceneError : public DomainError {
public:
  using DomainError::DomainError;
};

/// An operation was invoked in the wrong lifecycle state.
class StateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A configuration cannot be satisfied or parsed.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace audionav
