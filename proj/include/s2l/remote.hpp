// Copyright 2026 The s2l Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Newline-delimited JSON scoring protocol.
//
//   -> {"id": 7, "op": "score", "table": "name[Aromi]area[riverside]",
//       "candidates": ["Aromi is in riverside.", "..."]}
//   <- {"id": 7, "log_probs": [-12.5, -14.1]}
//   -> {"id": 8, "op": "generate", "table": "...", "max_len": 40}
//   <- {"id": 8, "text": "Aromi is in the riverside area."}
//   <- {"id": 9, "error": "message"}
//
// Endpoints are "tcp://host:port" or "stdio:<shell command>". The server
// side (ProtocolHandler) answers from a local DelexModel so the client can
// be checked against in-process scoring.

#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2l/error.hpp"
#include "s2l/lm.hpp"
#include "s2l/tabular.hpp"

namespace s2l {

// ---------------------------------------------------------------------------
// Server side

class ProtocolHandler {
 public:
  ProtocolHandler(std::shared_ptr<const DelexModel> model, LocalScorerOptions opts = {},
                  DecodeOptions decode = {})
      : scorer_(std::move(model), opts), decode_(decode) {}

  // One request line in, one response line out (without newline).
  std::string handle(const std::string &line) {
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      return error(-1, std::string("malformed JSON: ") + e.what());
    }
    std::int64_t id = -1;
    try {
      if (!req.is_object() || !req.contains("id") || !req["id"].is_number_integer()) {
        return error(-1, "request needs an integer id");
      }
      id = req["id"].get<std::int64_t>();
      const std::string op = req.at("op").get<std::string>();
      const Table table = parse_mr(req.at("table").get<std::string>());
      if (op == "score") {
        std::vector<Sentence> candidates;
        for (const auto &c : req.at("candidates")) {
          candidates.push_back(tokenize(c.get<std::string>()));
        }
        nlohmann::json resp;
        resp["id"] = id;
        resp["log_probs"] = scorer_.score(table, candidates);
        return resp.dump();
      }
      if (op == "generate") {
        DecodeOptions opts = decode_;
        if (req.contains("max_len")) opts.max_len = req["max_len"].get<std::size_t>();
        nlohmann::json resp;
        resp["id"] = id;
        resp["text"] = detokenize(scorer_.generate(table, opts));
        return resp.dump();
      }
      return error(id, "unknown op \"" + op + "\"");
    } catch (const nlohmann::json::exception &e) {
      return error(id, std::string("bad request: ") + e.what());
    } catch (const Error &e) {
      return error(id, e.what());
    }
  }

 private:
  static std::string error(std::int64_t id, const std::string &message) {
    nlohmann::json resp;
    resp["id"] = id;
    resp["error"] = message;
    return resp.dump();
  }

  LocalScorer scorer_;
  DecodeOptions decode_;
};

// Answers requests line by line until end of input.
inline void serve_stream(ProtocolHandler &handler, std::istream &in, std::ostream &out) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << handler.handle(line) << '\n' << std::flush;
  }
}

// ---------------------------------------------------------------------------
// Line channels

namespace detail {

inline void write_all(int fd, const std::string &data, bool socket) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = socket ? ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                       : ::write(fd, data.data() + off, data.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw RemoteUnavailable("write failed");
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace detail

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string &line) = 0;
  // nullopt on timeout or closed peer.
  virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;
};

class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, bool socket)
      : read_fd_(read_fd), write_fd_(write_fd), socket_(socket) {}

  FdChannel(const FdChannel &) = delete;
  FdChannel &operator=(const FdChannel &) = delete;

  ~FdChannel() override {
    if (read_fd_ >= 0) ::close(read_fd_);
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  }

  void write_line(const std::string &line) override {
    detail::write_all(write_fd_, line + "\n", socket_);
  }

  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      std::size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd p{read_fd_, POLLIN, 0};
      int r = ::poll(&p, 1, static_cast<int>(left.count()));
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) return std::nullopt;
      char buf[4096];
      ssize_t n = ::read(read_fd_, buf, sizeof buf);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      buffer_.append(buf, static_cast<std::size_t>(n));
    }
  }

 protected:
  void release() { read_fd_ = write_fd_ = -1; }

 private:
  int read_fd_;
  int write_fd_;
  bool socket_;
  std::string buffer_;
};

inline std::unique_ptr<LineChannel> connect_tcp(const std::string &host, const std::string &port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo *res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw RemoteUnavailable("cannot resolve " + host + ":" + port);
  }
  int fd = -1;
  for (addrinfo *a = res; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw RemoteUnavailable("cannot connect to " + host + ":" + port);
  return std::make_unique<FdChannel>(fd, fd, true);
}

// Child process speaking the protocol on its standard input/output.
class ProcessChannel : public FdChannel {
 public:
  static std::unique_ptr<ProcessChannel> spawn(const std::string &command) {
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw RemoteUnavailable("pipe failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw RemoteUnavailable("pipe failed");
    }
    pid_t pid = ::fork();
    if (pid < 0) throw RemoteUnavailable("fork failed");
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
    return std::unique_ptr<ProcessChannel>(new ProcessChannel(from_child[0], to_child[1], pid));
  }

  ~ProcessChannel() override {
    close_fds();
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }

 private:
  ProcessChannel(int read_fd, int write_fd, pid_t pid)
      : FdChannel(read_fd, write_fd, false), read_(read_fd), write_(write_fd), pid_(pid) {}

  void close_fds() {
    ::close(write_);
    ::close(read_);
    release();
  }

  int read_;
  int write_;
  pid_t pid_;
};

// ---------------------------------------------------------------------------
// Client side

struct RemoteOptions {
  std::chrono::milliseconds timeout{30000};
  std::size_t batch_size = 64;    // candidates per request
  std::size_t max_retries = 2;    // reconnect attempts after a failure
  std::size_t max_inflight = 4;   // requests sent before awaiting replies
};

class RemoteScorer : public Scorer, public Generator {
 public:
  RemoteScorer(std::string endpoint, RemoteOptions opts = {})
      : endpoint_(std::move(endpoint)), opts_(opts) {
    if (!endpoint_.starts_with("tcp://") && !endpoint_.starts_with("stdio:")) {
      throw UsageError("scorer endpoint must be builtin, tcp://host:port or stdio:<cmd>");
    }
    if (opts_.batch_size == 0 || opts_.max_inflight == 0) {
      throw UsageError("remote batch size and in-flight limit must be >= 1");
    }
  }

  std::vector<double> score(const Table &table,
                            std::span<const Sentence> candidates) override {
    std::vector<nlohmann::json> requests;
    for (std::size_t b = 0; b < candidates.size(); b += opts_.batch_size) {
      nlohmann::json req;
      req["op"] = "score";
      req["table"] = linearize(table);
      std::vector<std::string> texts;
      for (std::size_t i = b; i < std::min(candidates.size(), b + opts_.batch_size); ++i) {
        texts.push_back(detokenize(candidates[i]));
      }
      req["candidates"] = std::move(texts);
      requests.push_back(std::move(req));
    }
    auto responses = round_trip(requests);
    std::vector<double> out;
    for (std::size_t r = 0; r < responses.size(); ++r) {
      const auto &resp = responses[r];
      const std::size_t expect = requests[r]["candidates"].size();
      if (!resp.contains("log_probs") || !resp["log_probs"].is_array() ||
          resp["log_probs"].size() != expect) {
        throw RemoteUnavailable("score response has wrong shape: " + resp.dump());
      }
      for (const auto &v : resp["log_probs"]) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
          throw RemoteUnavailable("non-finite score in " + resp.dump());
        }
        out.push_back(v.get<double>());
      }
    }
    return out;
  }

  Sentence generate(const Table &table, const DecodeOptions &opts) override {
    nlohmann::json req;
    req["op"] = "generate";
    req["table"] = linearize(table);
    req["max_len"] = opts.max_len;
    auto resp = round_trip({req}).front();
    if (!resp.contains("text") || !resp["text"].is_string()) {
      throw RemoteUnavailable("generate response has no text: " + resp.dump());
    }
    return tokenize(resp["text"].get<std::string>());
  }

  const std::string &endpoint() const { return endpoint_; }

 private:
  void connect() {
    if (endpoint_.starts_with("stdio:")) {
      channel_ = ProcessChannel::spawn(endpoint_.substr(6));
      return;
    }
    std::string rest = endpoint_.substr(6);
    std::size_t colon = rest.rfind(':');
    if (colon == std::string::npos) throw UsageError("tcp endpoint needs host:port");
    channel_ = connect_tcp(rest.substr(0, colon), rest.substr(colon + 1));
  }

  // Sends requests with at most max_inflight outstanding and returns the
  // responses in request order. Transport failures reconnect and retry.
  std::vector<nlohmann::json> round_trip(std::vector<nlohmann::json> requests) {
    std::lock_guard<std::mutex> lock(mu_);
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= opts_.max_retries; ++attempt) {
      try {
        if (!channel_) connect();
        return exchange(requests);
      } catch (const RemoteUnavailable &e) {
        last_error = e.what();
        channel_.reset();
        if (attempt < opts_.max_retries) {
          std::this_thread::sleep_for(std::chrono::milliseconds(50 << attempt));
        }
      }
    }
    throw RemoteUnavailable(endpoint_ + ": " + last_error);
  }

  std::vector<nlohmann::json> exchange(std::vector<nlohmann::json> &requests) {
    std::map<std::int64_t, std::size_t> pending;  // id -> request index
    std::vector<nlohmann::json> responses(requests.size());
    std::size_t sent = 0, received = 0;
    while (received < requests.size()) {
      while (sent < requests.size() && pending.size() < opts_.max_inflight) {
        const std::int64_t id = next_id_++;
        requests[sent]["id"] = id;
        channel_->write_line(requests[sent].dump());
        pending[id] = sent++;
      }
      auto line = channel_->read_line(opts_.timeout);
      if (!line) throw RemoteUnavailable("no response within timeout");
      nlohmann::json resp;
      try {
        resp = nlohmann::json::parse(*line);
      } catch (const nlohmann::json::exception &) {
        throw RemoteUnavailable("malformed response: " + *line);
      }
      if (!resp.is_object() || !resp.contains("id") || !resp["id"].is_number_integer()) {
        throw RemoteUnavailable("response without id: " + *line);
      }
      auto it = pending.find(resp["id"].get<std::int64_t>());
      if (resp.contains("error")) {
        // Server-side rejection; retrying the same request cannot help.
        throw Error(ErrorCategory::kRemote, "remote error: " + resp["error"].dump());
      }
      if (it == pending.end()) throw RemoteUnavailable("unexpected response id: " + *line);
      responses[it->second] = std::move(resp);
      pending.erase(it);
      ++received;
    }
    return responses;
  }

  std::string endpoint_;
  RemoteOptions opts_;
  std::mutex mu_;
  std::unique_ptr<LineChannel> channel_;
  std::int64_t next_id_ = 1;  // strictly increasing for the client's lifetime
};

// ---------------------------------------------------------------------------
// Minimal TCP server, one connection at a time.

class TcpServer {
 public:
  // Binds 127.0.0.1:port (0 picks a free port).
  TcpServer(ProtocolHandler &handler, std::uint16_t port) : handler_(handler) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw IoError("socket failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0 ||
        ::listen(fd_, 8) != 0) {
      ::close(fd_);
      throw IoError("cannot listen on port " + std::to_string(port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr *>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  ~TcpServer() {
    stop();
    if (thread_.joinable()) thread_.join();
  }

  std::uint16_t port() const { return port_; }

  void start() {
    thread_ = std::thread([this] { run(); });
  }

  // Serves until stop(); each connection is answered line by line.
  void run() {
    while (!stopping_) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 100) <= 0) continue;
      int conn = ::accept(fd_, nullptr, nullptr);
      if (conn < 0) continue;
      FdChannel channel(conn, conn, true);
      while (!stopping_) {
        auto line = channel.read_line(std::chrono::milliseconds(100));
        if (!line) {
          pollfd q{conn, POLLIN, 0};
          // Distinguish idle from closed.
          if (::poll(&q, 1, 0) > 0) {
            char c;
            if (::recv(conn, &c, 1, MSG_PEEK) <= 0) break;
          }
          continue;
        }
        if (line->empty()) continue;
        try {
          channel.write_line(handler_.handle(*line));
        } catch (const RemoteUnavailable &) {
          break;
        }
      }
    }
  }

  void stop() {
    if (!stopping_.exchange(true) && fd_ >= 0) {
      if (thread_.joinable()) thread_.join();
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  ProtocolHandler &handler_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

}  // namespace s2l
