#include "tnas/external.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <map>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace tnas {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left =
      std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left < 0 ? 0 : static_cast<int>(left);
}

bool valid_metric(const nlohmann::json& v) {
  if (!v.is_number()) return false;
  const double x = v.get<double>();
  return x > 0.0 && x <= 1.0;
}

}  // namespace

nlohmann::json wire_request(const EvalRequest& r) {
  return {{"id", r.id},
          {"genotype", to_json(r.genotype)},
          {"summary",
           {{"params", r.summary.params},
            {"flops", r.summary.flops},
            {"downsample_factor", r.summary.downsample_factor},
            {"output_down_exp", r.summary.output_down_exp}}}};
}

ExternalEvaluator::ExternalEvaluator(ExternalConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.command.empty()) throw EvaluatorError("external evaluator command is empty");
}

ExternalEvaluator::~ExternalEvaluator() { stop(); }

void ExternalEvaluator::start() {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw EvaluatorError(std::string("pipe: ") + std::strerror(errno));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw EvaluatorError(std::string("pipe: ") + std::strerror(errno));
  }
  const pid_t pid = fork();
  if (pid < 0) throw EvaluatorError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", cfg_.command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  fcntl(to_child_, F_SETFL, fcntl(to_child_, F_GETFL) | O_NONBLOCK);
  buffer_.clear();
  eof_ = false;
  ++starts_;

  std::string line;
  if (!read_line(line, static_cast<int>(cfg_.timeout_seconds * 1000))) {
    stop();
    throw EvaluatorError(eof_ ? "evaluator exited before the handshake"
                              : "evaluator handshake timed out");
  }
  nlohmann::json hello;
  try {
    hello = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    stop();
    throw ProtocolError("malformed handshake", line);
  }
  if (!hello.is_object() || !hello.contains("protocol") ||
      hello["protocol"] != kProtocolVersion) {
    stop();
    throw ProtocolError("unsupported protocol version", line);
  }
}

void ExternalEvaluator::stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    kill(pid_, SIGTERM);
    waitpid(pid_, nullptr, 0);
  }
  pid_ = -1;
}

bool ExternalEvaluator::read_line(std::string& line, int timeout_ms) {
  const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return true;
    }
    if (eof_) return false;
    pollfd p{from_child_, POLLIN, 0};
    const int rc = poll(&p, 1, remaining_ms(deadline));
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) return false;
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      eof_ = true;
      continue;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<EvalOutcome> ExternalEvaluator::evaluate(std::span<const EvalRequest> requests) {
  std::vector<EvalOutcome> out(requests.size());
  if (requests.empty()) return out;
  if (pid_ < 0) start();

  std::map<std::int64_t, std::size_t> pending;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (!pending.emplace(requests[i].id, i).second)
      throw ProtocolError("duplicate request id " + std::to_string(requests[i].id));
  }

  auto queue_pending = [&] {
    std::string payload;
    for (const auto& [id, i] : pending) payload += wire_request(requests[i]).dump() + "\n";
    return payload;
  };
  std::string outgoing = queue_pending();
  bool restarted = false;
  const int timeout_ms = static_cast<int>(cfg_.timeout_seconds * 1000);
  auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);

  auto handle_exit = [&] {
    stop();
    if (restarted) {
      throw EvaluatorError("evaluator exited twice; failing architecture id " +
                           std::to_string(pending.begin()->first));
    }
    restarted = true;
    start();
    outgoing = queue_pending();
    deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  };

  while (!pending.empty()) {
    // drain complete lines before polling again
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      const std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (line.empty()) continue;
      nlohmann::json resp;
      try {
        resp = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        throw ProtocolError("malformed response", line);
      }
      if (!resp.is_object() || !resp.contains("id") || !resp["id"].is_number_integer())
        throw ProtocolError("response without an integer id", line);
      auto it = pending.find(resp["id"].get<std::int64_t>());
      if (it == pending.end()) throw ProtocolError("response for an unknown id", line);
      EvalOutcome& o = out[it->second];
      if (resp.contains("error")) {
        o.error = resp["error"].is_string() ? resp["error"].get<std::string>() : resp["error"].dump();
      } else if (resp.contains("miou") && resp.contains("mean_acc") && resp.contains("fw_iou")) {
        if (valid_metric(resp["miou"]) && valid_metric(resp["mean_acc"]) &&
            valid_metric(resp["fw_iou"])) {
          o.metrics = metrics_from_json(resp);
        } else {
          o.error = "metrics outside (0, 1]";
        }
      } else {
        throw ProtocolError("response without metrics or error", line);
      }
      pending.erase(it);
      deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
      continue;
    }
    if (eof_) {
      handle_exit();
      continue;
    }

    pollfd fds[2] = {{from_child_, POLLIN, 0}, {to_child_, POLLOUT, 0}};
    const nfds_t nfds = outgoing.empty() ? 1 : 2;
    const int rc = poll(fds, nfds, remaining_ms(deadline));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw EvaluatorError(std::string("poll: ") + std::strerror(errno));
    }
    if (rc == 0) {
      for (const auto& [id, i] : pending) out[i].error = "timeout";
      stop();  // late replies would carry stale ids
      break;
    }
    if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t n = write(to_child_, outgoing.data(), outgoing.size());
      if (n > 0) {
        outgoing.erase(0, static_cast<std::size_t>(n));
      } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
        // child closed stdin; any buffered output is still read below
        outgoing.clear();
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char chunk[4096];
      const ssize_t n = read(from_child_, chunk, sizeof chunk);
      if (n > 0) {
        buffer_.append(chunk, static_cast<std::size_t>(n));
      } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
        eof_ = true;
      }
    }
  }
  return out;
}

}  // namespace tnas
