#ifndef TNAS_ERROR_HPP_
#define TNAS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tnas {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. `locus` names the line and/or field that failed.
class ParseError : public Error {
 public:
  ParseError(std::string locus, const std::string& what)
      : Error(locus.empty() ? what : locus + ": " + what), locus_(std::move(locus)), detail_(what) {}
  const std::string& locus() const noexcept { return locus_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string locus_;
  std::string detail_;
};

struct Violation {
  enum class Kind {
    Shape,
    Loc1OutOfPool,
    Loc2OutOfPool,
    TemplateOutOfRange,
    RepeatsOutOfRange,
    StrideInvalid,
    StrideInSecondHalf,
    Config,
  };
  Kind kind;
  int block = -1;  // -1 when not tied to a block
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(summarize(violations)), violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& v) {
    std::string out = "invalid genotype";
    for (const auto& x : v) out += "; " + x.message;
    return out;
  }
  std::vector<Violation> violations_;
};

// Broken internal invariant. Always a defect, never a user error.
class InternalError : public Error {
 public:
  using Error::Error;
};

// Evaluator protocol violation; carries the offending raw line when available.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string raw = {})
      : Error(raw.empty() ? what : what + " (raw: " + raw + ")"), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class EvaluatorError : public Error {
 public:
  using Error::Error;
};

}  // namespace tnas

#endif  // TNAS_ERROR_HPP_
