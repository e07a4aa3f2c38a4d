/*
 * Copyright 2026 The fedbridge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fedbridge/net/stream.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "fedbridge/error.h"

namespace fedbridge::net {
namespace {

struct PipeState {
  std::string inbox[2];
  bool closed[2] = {false, false};
};

class PipeEnd : public ByteStream {
 public:
  PipeEnd(std::shared_ptr<PipeState> state, int side)
      : state_(std::move(state)), side_(side) {}
  ~PipeEnd() override { Close(); }

  void Write(std::string_view bytes) override {
    if (state_->closed[side_] || state_->closed[1 - side_]) return;
    state_->inbox[1 - side_].append(bytes);
  }
  std::string ReadSome() override {
    std::string out;
    out.swap(state_->inbox[side_]);
    return out;
  }
  bool Readable() const override {
    return !state_->inbox[side_].empty() || state_->closed[1 - side_];
  }
  bool PeerClosed() const override { return state_->closed[1 - side_]; }
  void Close() override { state_->closed[side_] = true; }
  bool IsClosed() const override { return state_->closed[side_]; }

 private:
  std::shared_ptr<PipeState> state_;
  int side_;
};

void SetNonBlocking(int fd) {
  int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> MakePipe() {
  auto state = std::make_shared<PipeState>();
  return {std::make_unique<PipeEnd>(state, 0), std::make_unique<PipeEnd>(state, 1)};
}

void FramedConnection::WriteFrame(std::string_view body) {
  std::string frame = wire::FrameBody(body);
  stream_->Write(frame);
}

std::optional<std::string> FramedConnection::ReadFrame() {
  if (auto body = reader_.NextBody()) return body;
  std::string bytes = stream_->ReadSome();
  if (bytes.empty()) return std::nullopt;
  reader_.Append(bytes);
  return reader_.NextBody();
}

std::unique_ptr<ByteStream> InProcListener::Accept() {
  if (!open_ || pending_.empty()) return nullptr;
  auto stream = std::move(pending_.front());
  pending_.pop_front();
  return stream;
}

std::unique_ptr<ByteStream> InProcListener::Dial() {
  if (!open_) return nullptr;
  auto [client, server] = MakePipe();
  pending_.push_back(std::move(server));
  return std::move(client);
}

TcpStream::TcpStream(int fd) : fd_(fd) {
  SetNonBlocking(fd_);
  int one = 1;
  setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpStream::~TcpStream() { Close(); }

void TcpStream::Write(std::string_view bytes) {
  if (fd_ < 0) return;
  out_.append(bytes);
  Flush();
}

bool TcpStream::Flush() {
  while (fd_ >= 0 && !out_.empty()) {
    ssize_t n = ::send(fd_, out_.data(), out_.size(), MSG_NOSIGNAL);
    if (n > 0) {
      out_.erase(0, static_cast<size_t>(n));
      continue;
    }
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      // Socket buffer full: wait for writability rather than spin.
      pollfd p{fd_, POLLOUT, 0};
      ::poll(&p, 1, 50);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    peer_closed_ = true;
    return false;
  }
  return fd_ >= 0;
}

std::string TcpStream::ReadSome() {
  std::string out;
  if (fd_ < 0) return out;
  char buf[65536];
  while (true) {
    ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n > 0) {
      out.append(buf, static_cast<size_t>(n));
      continue;
    }
    if (n == 0) {
      peer_closed_ = true;
      break;
    }
    if (errno == EINTR) continue;
    if (errno != EAGAIN && errno != EWOULDBLOCK) peer_closed_ = true;
    break;
  }
  return out;
}

bool TcpStream::Readable() const {
  if (fd_ < 0) return false;
  if (peer_closed_) return true;
  pollfd p{fd_, POLLIN, 0};
  return ::poll(&p, 1, 0) > 0 && (p.revents & (POLLIN | POLLHUP | POLLERR));
}

void TcpStream::Close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

TcpListener::TcpListener(uint16_t port, bool loopback_only) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::kIo, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(loopback_only ? INADDR_LOOPBACK : INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(fd_, 64) < 0) {
    std::string why = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::kIo, "listen on port " + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof(addr);
  getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  SetNonBlocking(fd_);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<ByteStream> TcpListener::Accept() {
  int client = ::accept(fd_, nullptr, nullptr);
  if (client < 0) return nullptr;
  return std::make_unique<TcpStream>(client);
}

bool TcpListener::HasPending() const {
  pollfd p{fd_, POLLIN, 0};
  return ::poll(&p, 1, 0) > 0 && (p.revents & POLLIN);
}

std::unique_ptr<TcpStream> TcpConnect(const std::string& host, uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) {
    return nullptr;
  }
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  bool ok = fd >= 0 && ::connect(fd, res->ai_addr, res->ai_addrlen) == 0;
  freeaddrinfo(res);
  if (!ok) {
    if (fd >= 0) ::close(fd);
    return nullptr;
  }
  return std::make_unique<TcpStream>(fd);
}

std::unique_ptr<ByteStream> TcpDialer::Dial() { return TcpConnect(host_, port_); }

std::optional<std::pair<std::string, uint16_t>> ParseHostPort(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) return std::nullopt;
  unsigned port = 0;
  auto digits = text.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || port > 65535) {
    return std::nullopt;
  }
  return std::pair{std::string(text.substr(0, colon)), static_cast<uint16_t>(port)};
}

}  // namespace fedbridge::net
