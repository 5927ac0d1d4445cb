#pragma once

#include <stdexcept>
#include <string>

namespace leukonet {

// Failure vocabulary shared by every module. The CLI maps Diverged to
// exit code 2 and everything else to exit code 1.

struct UnsupportedFormat : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CorruptImage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyClass : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularTransform : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Diverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VersionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ManifestCorrupt : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GradientMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LengthMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace leukonet
