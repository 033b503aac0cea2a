#ifndef TNAS_EXTERNAL_HPP_
#define TNAS_EXTERNAL_HPP_

#include <string>
#include <sys/types.h>

#include "tnas/eval.hpp"

namespace tnas {

inline constexpr int kProtocolVersion = 1;

struct ExternalConfig {
  std::string command;           // run through /bin/sh -c
  double timeout_seconds = 600;  // per architecture, reset on every response
  bool operator==(const ExternalConfig&) const = default;
};

nlohmann::json wire_request(const EvalRequest& request);

/// Client for an evaluator child process speaking line-delimited JSON over
/// its standard streams.
///
/// The child must print {"protocol": 1} first. Requests of a batch are
/// written back to back and responses are matched by id in any order. A
/// response {"id", "error"} or a timeout fails that architecture (reward 0).
/// If the child exits mid-batch it is restarted once and pending requests are
/// resent; a second exit throws EvaluatorError. Unparseable lines, unknown ids
/// and bad handshakes throw ProtocolError.
class ExternalEvaluator : public Evaluator {
 public:
  explicit ExternalEvaluator(ExternalConfig cfg);
  ~ExternalEvaluator() override;
  ExternalEvaluator(const ExternalEvaluator&) = delete;
  ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

  std::vector<EvalOutcome> evaluate(std::span<const EvalRequest> requests) override;

  int starts() const { return starts_; }

 private:
  void start();
  void stop();
  // Reads one line, waiting at most `timeout_ms`. Returns false on timeout;
  // sets eof_ when the child closed its output.
  bool read_line(std::string& line, int timeout_ms);

  ExternalConfig cfg_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool eof_ = false;
  int starts_ = 0;
};

}  // namespace tnas

#endif  // TNAS_EXTERNAL_HPP_
