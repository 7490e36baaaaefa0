#pragma once

#include <stdexcept>
#include <string>

namespace dflat {

// Raised when an arithmetic primitive is applied outside its domain
// (sqrt of a negative number, log of zero, ...). The tag names the
// primitive so callers can tell which sub-expression failed.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(std::string tag, const std::string& what)
      : std::runtime_error(tag + ": " + what), tag_(std::move(tag)) {}

  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the admissible interval of a closed form, transform or
// profile. `lower`/`upper` carry the achievable range when one is known.
class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& what, double lower, double upper)
      : std::runtime_error(what), lower_(lower), upper_(upper) {}
  explicit DomainError(const std::string& what)
      : DomainError(what, 0.0, 0.0) {}

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  double lower_;
  double upper_;
};

// Misconfigured run: unknown case id, a sampling domain that rejects too
// many points, a rank-deficient fit, and the like.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dflat
