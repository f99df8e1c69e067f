// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/transport.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <sstream>

#include "latsteer/error.hpp"

namespace latsteer {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() < 0 ? 0 : static_cast<int>(std::min<long long>(left.count(), 1 << 30));
}

void wait_fd(int fd, short events, Clock::time_point deadline) {
  for (;;) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return;
    if (rc == 0) throw Error(ErrorCode::kTimeout, "external endpoint did not respond in time");
    if (errno != EINTR) throw Error(ErrorCode::kTransport, std::strerror(errno));
  }
}

void write_all(int fd, std::string_view bytes, Clock::time_point deadline) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    wait_fd(fd, POLLOUT, deadline);
    const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorCode::kTransport, std::string("write failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

// Buffered reader over a file descriptor. Returns false on clean EOF before
// any byte of a frame was read.
class FrameReader {
 public:
  explicit FrameReader(int fd) : fd_(fd) {}

  bool read_frame(wire::Message& out, Clock::time_point deadline, bool blocking) {
    std::string line;
    for (;;) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        break;
      }
      if (buf_.size() > 256) throw Error(ErrorCode::kProtocol, "frame header line too long");
      if (!fill(deadline, blocking)) {
        if (buf_.empty()) return false;
        throw Error(ErrorCode::kTransport, "connection closed mid-frame");
      }
    }
    const auto header = wire::parse_header_line(line);
    while (buf_.size() < header.payload_length) {
      if (!fill(deadline, blocking)) throw Error(ErrorCode::kTransport, "connection closed mid-frame");
    }
    out = wire::decode_payload(header.op, std::string_view(buf_).substr(0, header.payload_length));
    buf_.erase(0, header.payload_length);
    return true;
  }

 private:
  bool fill(Clock::time_point deadline, bool blocking) {
    if (!blocking) wait_fd(fd_, POLLIN, deadline);
    char chunk[65536];
    for (;;) {
      const ssize_t n = ::read(fd_, chunk, sizeof chunk);
      if (n > 0) {
        buf_.append(chunk, static_cast<std::size_t>(n));
        return true;
      }
      if (n == 0) return false;
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kTransport, std::string("read failed: ") + std::strerror(errno));
    }
  }

  int fd_;
  std::string buf_;
};

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

class ExecTransport final : public Transport {
 public:
  explicit ExecTransport(std::vector<std::string> argv) : argv_(std::move(argv)) {
    if (argv_.empty()) throw Error(ErrorCode::kInvalidArgument, "exec endpoint has no command");
    ignore_sigpipe();
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      throw Error(ErrorCode::kTransport, "pipe() failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw Error(ErrorCode::kTransport, "fork() failed");
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      std::vector<char*> args;
      for (auto& a : argv_) args.push_back(a.data());
      args.push_back(nullptr);
      ::execvp(args[0], args.data());
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    reader_ = std::make_unique<FrameReader>(read_fd_);
  }

  ~ExecTransport() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  wire::Message exchange(const wire::Message& req, std::chrono::milliseconds timeout) override {
    std::lock_guard lock(mu_);
    const auto deadline = Clock::now() + timeout;
    write_all(write_fd_, wire::encode(req), deadline);
    wire::Message resp;
    if (!reader_->read_frame(resp, deadline, false)) {
      throw Error(ErrorCode::kTransport, "backend process closed its output");
    }
    return resp;
  }

  std::string describe() const override { return "exec:" + argv_.front(); }

 private:
  std::vector<std::string> argv_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::unique_ptr<FrameReader> reader_;
  std::mutex mu_;
};

class UnixSocketTransport final : public Transport {
 public:
  explicit UnixSocketTransport(std::string path) : path_(std::move(path)) {
    ignore_sigpipe();
    fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error(ErrorCode::kTransport, "socket() failed");
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path_.size() >= sizeof addr.sun_path) {
      ::close(fd_);
      throw Error(ErrorCode::kInvalidArgument, "socket path too long");
    }
    std::strncpy(addr.sun_path, path_.c_str(), sizeof addr.sun_path - 1);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      throw Error(ErrorCode::kTransport, "cannot reach " + path_ + ": " + why);
    }
    reader_ = std::make_unique<FrameReader>(fd_);
  }

  ~UnixSocketTransport() override {
    if (fd_ >= 0) ::close(fd_);
  }

  wire::Message exchange(const wire::Message& req, std::chrono::milliseconds timeout) override {
    std::lock_guard lock(mu_);
    const auto deadline = Clock::now() + timeout;
    write_all(fd_, wire::encode(req), deadline);
    wire::Message resp;
    if (!reader_->read_frame(resp, deadline, false)) {
      throw Error(ErrorCode::kTransport, "backend closed the connection");
    }
    return resp;
  }

  std::string describe() const override { return "unix:" + path_; }

 private:
  std::string path_;
  int fd_ = -1;
  std::unique_ptr<FrameReader> reader_;
  std::mutex mu_;
};

class LoopbackTransport final : public Transport {
 public:
  explicit LoopbackTransport(FrameHandler handler) : handler_(std::move(handler)) {}

  wire::Message exchange(const wire::Message& req, std::chrono::milliseconds) override {
    std::lock_guard lock(mu_);
    const wire::Message decoded = wire::decode(wire::encode(req));
    wire::Message resp;
    try {
      resp = handler_(decoded);
    } catch (const std::exception& e) {
      resp = wire::error_response(e.what());
    }
    return wire::decode(wire::encode(resp));
  }

  std::string describe() const override { return "loopback"; }

 private:
  FrameHandler handler_;
  std::mutex mu_;
};

std::vector<std::string> split_spaces(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string part; in >> part;) out.push_back(part);
  return out;
}

}  // namespace

std::unique_ptr<Transport> make_exec_transport(std::vector<std::string> argv) {
  return std::make_unique<ExecTransport>(std::move(argv));
}

std::unique_ptr<Transport> make_unix_socket_transport(std::string path) {
  return std::make_unique<UnixSocketTransport>(std::move(path));
}

std::unique_ptr<Transport> make_loopback_transport(FrameHandler handler) {
  return std::make_unique<LoopbackTransport>(std::move(handler));
}

std::unique_ptr<Transport> transport_from_endpoint(const std::string& endpoint) {
  if (endpoint.rfind("exec:", 0) == 0) return make_exec_transport(split_spaces(endpoint.substr(5)));
  if (endpoint.rfind("unix:", 0) == 0) return make_unix_socket_transport(endpoint.substr(5));
  throw Error(ErrorCode::kInvalidArgument,
              "endpoint must start with exec: or unix:, got '" + endpoint + "'");
}

void serve_stream(int in_fd, int out_fd, const FrameHandler& handler) {
  ignore_sigpipe();
  FrameReader reader(in_fd);
  const auto forever = Clock::now() + std::chrono::hours(24 * 365);
  for (;;) {
    wire::Message req;
    try {
      if (!reader.read_frame(req, forever, true)) return;
    } catch (const Error& e) {
      write_all(out_fd, wire::encode(wire::error_response(e.what(), "protocol")), forever);
      return;
    }
    wire::Message resp;
    try {
      resp = handler(req);
    } catch (const std::exception& e) {
      resp = wire::error_response(e.what());
    }
    write_all(out_fd, wire::encode(resp), forever);
  }
}

void serve_unix_socket(const std::string& path, const FrameHandler& handler) {
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorCode::kTransport, "socket() failed");
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  std::strncpy(addr.sun_path, path.c_str(), sizeof addr.sun_path - 1);
  ::unlink(path.c_str());
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 4) != 0) {
    ::close(fd);
    throw Error(ErrorCode::kTransport, "cannot listen on " + path);
  }
  for (;;) {
    const int conn = ::accept(fd, nullptr, nullptr);
    if (conn < 0) {
      if (errno == EINTR) continue;
      break;
    }
    try {
      serve_stream(conn, conn, handler);
    } catch (const Error&) {
      // Client went away; keep accepting.
    }
    ::close(conn);
  }
  ::close(fd);
}

}  // namespace latsteer
