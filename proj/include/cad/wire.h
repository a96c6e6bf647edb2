#pragma once

#include <chrono>
#include <memory>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cad/provider.h"

namespace cad {

inline constexpr std::string_view kWireProtocol = "cad-wire-v1";
inline constexpr std::size_t kMaxBatch = 16;
inline constexpr std::string_view kHttpPath = "/v1/cad";
inline constexpr int kDefaultWireTimeoutMs = 30000;

// Carries one request line to the model server and returns its reply line.
// Implementations raise kTransport on I/O failure or timeout.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string roundtrip(const std::string& request) = 0;
  virtual std::string describe() const = 0;
};

// Spawns `/bin/sh -c command` and speaks the protocol over its stdin/stdout,
// one JSON object per line.
class SubprocessTransport final : public Transport {
 public:
  SubprocessTransport(std::string command, std::chrono::milliseconds timeout);
  ~SubprocessTransport() override;
  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  std::string roundtrip(const std::string& request) override;
  std::string describe() const override { return "cmd:" + command_; }

 private:
  std::string read_line();

  std::string command_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
  int pid_ = -1;
  std::string buffer_;
};

// POSTs each request object to <base_url>/v1/cad.
class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string base_url, std::chrono::milliseconds timeout);
  ~HttpTransport() override;

  std::string roundtrip(const std::string& request) override;
  std::string describe() const override { return "http:" + base_url_; }

 private:
  struct Impl;
  std::string base_url_;
  std::unique_ptr<Impl> impl_;
};

struct SessionInfo {
  std::size_t vocab_size = 0;
  TokenId eos_id = 0;
  std::string name;
};

// A LogitProvider backed by a cad-wire-v1 server. One request is in flight
// per connection; calls from several threads are serialized.
class RemoteProvider final : public LogitProvider {
 public:
  // Takes ownership of the transport and performs the handshake.
  explicit RemoteProvider(std::unique_ptr<Transport> transport);

  // Sends hello and stores the session. Also clears an earlier protocol
  // failure.
  const SessionInfo& handshake();
  const SessionInfo& session() const noexcept { return session_; }
  bool usable() const noexcept;

  // One row per sequence in request order; at most kMaxBatch sequences.
  std::vector<LogitVector> remote_logits(std::span<const TokenSeq> sequences) const;

  std::string name() const override { return "remote:" + session_.name; }
  std::size_t vocab_size() const override { return session_.vocab_size; }
  TokenId eos() const override { return session_.eos_id; }
  LogitVector logits(std::span<const TokenId> seq) const override;
  std::vector<LogitVector> logits_batch(std::span<const TokenSeq> sequences) const override;
  TokenSeq tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const TokenId> ids) const override;
  bool concurrent_safe() const override { return true; }

 private:
  std::string exchange(const std::string& request) const;
  void require_usable() const;

  std::unique_ptr<Transport> transport_;
  SessionInfo session_;
  bool ready_ = false;
  mutable bool broken_ = false;
  mutable std::mutex mu_;
};

// Parses "cmd:<command>" or "http:<url>" (the url keeps its scheme, e.g.
// "http:http://127.0.0.1:8080").
std::unique_ptr<Transport> make_transport(std::string_view scheme, std::string_view locator,
                                          std::chrono::milliseconds timeout);

// Behaviour switches for the reference server, used to exercise the client's
// error paths.
struct ServerFaults {
  bool bad_hello = false;  // hello reply without vocab_size
  bool bad_rows = false;   // logits rows one entry short
  bool silent = false;     // never answers
};

// Answers cad-wire-v1 requests from a LogitProvider. Request errors are
// reported as {"type":"error"} replies; the connection stays usable.
class WireServer {
 public:
  explicit WireServer(const LogitProvider& provider, ServerFaults faults = {})
      : provider_(provider), faults_(faults) {}

  // Reply line without the trailing newline, or nullopt when silent.
  std::optional<std::string> handle(std::string_view request) const;

  // Serves until end of input.
  void serve_stream(std::istream& in, std::ostream& out) const;

 private:
  const LogitProvider& provider_;
  ServerFaults faults_;
};

// Reference providers for protocol tests. Tokenization maps each byte to its
// value; detokenization rejects ids >= vocab_size.
//   echo:    vocab 4, eos 3; rows tag the sequence as [length, first, last, 0]
//   uniform: vocab 4, eos 3; all-zero rows
//   bytes:   vocab 256, eos 0; all-zero rows
class ReferenceProvider final : public LogitProvider {
 public:
  enum class Mode { kEcho, kUniform, kBytes };
  explicit ReferenceProvider(Mode mode);
  static Mode parse_mode(std::string_view name);

  std::string name() const override;
  std::size_t vocab_size() const override { return vocab_size_; }
  TokenId eos() const override { return eos_; }
  LogitVector logits(std::span<const TokenId> seq) const override;
  TokenSeq tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const TokenId> ids) const override;
  bool concurrent_safe() const override { return true; }

 private:
  Mode mode_;
  std::size_t vocab_size_;
  TokenId eos_;
};

// HTTP front end for a WireServer: POST /v1/cad with one request object.
class HttpWireServer {
 public:
  explicit HttpWireServer(const WireServer& server);
  ~HttpWireServer();

  // Binds to `port` (0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cad
