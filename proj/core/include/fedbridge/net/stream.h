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

#ifndef FEDBRIDGE_NET_STREAM_H_
#define FEDBRIDGE_NET_STREAM_H_

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "fedbridge/wire/codec.h"

namespace fedbridge::net {

// Non-blocking duplex byte stream.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void Write(std::string_view bytes) = 0;
  // Whatever is available right now; empty if nothing.
  virtual std::string ReadSome() = 0;
  // Data is buffered or the peer has closed.
  virtual bool Readable() const = 0;
  virtual bool PeerClosed() const = 0;
  virtual void Close() = 0;
  virtual bool IsClosed() const = 0;
  // Underlying descriptor for poll(), or -1 for in-process streams.
  virtual int fd() const { return -1; }
};

// Both ends of an in-process pipe.
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> MakePipe();

// Length-prefixed request/response framing over a ByteStream, using the same
// 4-byte big-endian prefix as envelopes.
class FramedConnection {
 public:
  explicit FramedConnection(std::unique_ptr<ByteStream> stream,
                            size_t max_frame_bytes = wire::kMaxFrameBytes)
      : stream_(std::move(stream)), reader_(max_frame_bytes) {}

  void WriteFrame(std::string_view body);
  // Next complete frame, or nullopt. Throws Error(kFrameTooLarge) on a bad
  // prefix; the caller is expected to reset the connection.
  std::optional<std::string> ReadFrame();
  // New bytes arrived or the peer closed. Frames already split off by an
  // earlier ReadSome are not counted, so callers drain ReadFrame() fully.
  bool HasInput() const { return stream_->Readable(); }
  bool PeerClosed() const { return stream_->PeerClosed(); }
  bool IsClosed() const { return stream_->IsClosed(); }
  void Close() { stream_->Close(); }
  int fd() const { return stream_->fd(); }
  ByteStream& stream() { return *stream_; }

 private:
  std::unique_ptr<ByteStream> stream_;
  wire::FrameReader reader_;
};

class StreamListener {
 public:
  virtual ~StreamListener() = default;
  // Next pending connection or nullptr.
  virtual std::unique_ptr<ByteStream> Accept() = 0;
  virtual bool HasPending() const = 0;
  virtual int fd() const { return -1; }
};

class StreamDialer {
 public:
  virtual ~StreamDialer() = default;
  // nullptr when the target is unreachable.
  virtual std::unique_ptr<ByteStream> Dial() = 0;
};

// In-process listener; Dial() hands back the client end immediately.
class InProcListener : public StreamListener {
 public:
  std::unique_ptr<ByteStream> Accept() override;
  bool HasPending() const override { return !pending_.empty() && open_; }
  std::unique_ptr<ByteStream> Dial();
  void Shutdown() { open_ = false; pending_.clear(); }
  bool open() const { return open_; }

 private:
  std::deque<std::unique_ptr<ByteStream>> pending_;
  bool open_ = true;
};

class InProcDialer : public StreamDialer {
 public:
  explicit InProcDialer(InProcListener* listener) : listener_(listener) {}
  std::unique_ptr<ByteStream> Dial() override {
    return listener_ && listener_->open() ? listener_->Dial() : nullptr;
  }

 private:
  InProcListener* listener_;
};

// TCP stream over a connected non-blocking socket.
class TcpStream : public ByteStream {
 public:
  explicit TcpStream(int fd);
  ~TcpStream() override;
  void Write(std::string_view bytes) override;
  std::string ReadSome() override;
  bool Readable() const override;
  bool PeerClosed() const override { return peer_closed_; }
  void Close() override;
  bool IsClosed() const override { return fd_ < 0; }
  int fd() const override { return fd_; }
  // Pushes buffered output; returns false once the socket has failed.
  bool Flush();
  bool HasPendingOutput() const { return !out_.empty(); }

 private:
  int fd_;
  std::string out_;
  mutable bool peer_closed_ = false;
};

// Listener bound to 127.0.0.1. Port 0 picks an ephemeral port.
class TcpListener : public StreamListener {
 public:
  explicit TcpListener(uint16_t port, bool loopback_only = true);
  ~TcpListener() override;
  std::unique_ptr<ByteStream> Accept() override;
  bool HasPending() const override;
  int fd() const override { return fd_; }
  uint16_t port() const { return port_; }

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

class TcpDialer : public StreamDialer {
 public:
  TcpDialer(std::string host, uint16_t port) : host_(std::move(host)), port_(port) {}
  std::unique_ptr<ByteStream> Dial() override;

 private:
  std::string host_;
  uint16_t port_;
};

// Blocking connect helper; returns a non-blocking stream or nullptr.
std::unique_ptr<TcpStream> TcpConnect(const std::string& host, uint16_t port);

// Parses "host:port".
std::optional<std::pair<std::string, uint16_t>> ParseHostPort(std::string_view text);

}  // namespace fedbridge::net

#endif  // FEDBRIDGE_NET_STREAM_H_
