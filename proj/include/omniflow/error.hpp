#pragma once

#include <stdexcept>
#include <string>

namespace omniflow {

// Base for all library failures. Subclasses map onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Point lies on or behind the tangent plane's horizon.
class HemisphereError : public Error {
 public:
  using Error::Error;
};

class CoverageError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

// External backend process failed; carries captured diagnostics.
class ExternalError : public Error {
 public:
  ExternalError(const std::string& what, std::string diagnostics = {})
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

}  // namespace omniflow

namespace omniflow {

/// Runs fn(), re-throwing library errors with `context` prefixed to the
/// message while keeping their type.
template <typename Fn>
decltype(auto) with_context(const std::string& context, Fn&& fn) {
  const auto msg = [&](const std::exception& e) { return context + ": " + e.what(); };
  try {
    return fn();
  } catch (const ExternalError& e) {
    throw ExternalError(msg(e), e.diagnostics());
  } catch (const ConfigError& e) {
    throw ConfigError(msg(e));
  } catch (const DimensionError& e) {
    throw DimensionError(msg(e));
  } catch (const HemisphereError& e) {
    throw HemisphereError(msg(e));
  } catch (const CoverageError& e) {
    throw CoverageError(msg(e));
  } catch (const DegenerateError& e) {
    throw DegenerateError(msg(e));
  } catch (const GeometryError& e) {
    throw GeometryError(msg(e));
  }
}

}  // namespace omniflow
