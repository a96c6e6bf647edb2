#include "cad/wire.h"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include "json.hpp"

namespace cad {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

json parse_reply(const std::string& line, ErrorCode code) {
  try {
    json j = json::parse(line);
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
      throw Error(code, "reply is not a typed object: " + line);
    }
    return j;
  } catch (const json::parse_error& e) {
    throw Error(code, std::string("unparseable reply: ") + e.what());
  }
}

void raise_if_error(const json& reply) {
  if (reply["type"] == "error") {
    throw Error(ErrorCode::kRemote, reply.value("message", std::string("unspecified server error")));
  }
}

void expect_type(const json& reply, std::string_view type) {
  if (reply["type"] != type) {
    throw Error(ErrorCode::kProtocol, "expected a '" + std::string(type) + "' reply, got '" +
                                          reply["type"].get<std::string>() + "'");
  }
}

std::string error_reply(std::string_view message) {
  return json{{"type", "error"}, {"message", message}}.dump();
}

}  // namespace

// --- SubprocessTransport -----------------------------------------------------

SubprocessTransport::SubprocessTransport(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw Error(ErrorCode::kTransport, std::string("socketpair: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw Error(ErrorCode::kTransport, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(sv[1]);
  fd_ = sv[0];
  pid_ = pid;
}

SubprocessTransport::~SubprocessTransport() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_WR);
    ::close(fd_);
  }
  if (pid_ > 0) {
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }
}

std::string SubprocessTransport::roundtrip(const std::string& request) {
  if (fd_ < 0) throw Error(ErrorCode::kTransport, "connection to '" + command_ + "' is closed");
  const std::string line = request + "\n";
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd_);
      fd_ = -1;
      throw Error(ErrorCode::kTransport, std::string("write to server failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
  return read_line();
}

std::string SubprocessTransport::read_line() {
  const auto deadline = Clock::now() + timeout_;
  auto fail = [&](const std::string& why) {
    // A late reply would desynchronize request/response pairing.
    ::close(fd_);
    fd_ = -1;
    return Error(ErrorCode::kTransport, why);
  };
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) {
      throw fail("no reply from '" + command_ + "' within " + std::to_string(timeout_.count()) + " ms");
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw fail(std::string("poll: ") + std::strerror(errno));
    }
    if (ready == 0) continue;
    char buf[65536];
    const ssize_t n = ::read(fd_, buf, sizeof(buf));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw fail(std::string("read: ") + std::strerror(errno));
    }
    if (n == 0) throw fail("server '" + command_ + "' closed the connection");
    buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

// --- RemoteProvider ----------------------------------------------------------

RemoteProvider::RemoteProvider(std::unique_ptr<Transport> transport)
    : transport_(std::move(transport)) {
  handshake();
}

const SessionInfo& RemoteProvider::handshake() {
  std::lock_guard lock(mu_);
  ready_ = false;
  const json hello = {{"type", "hello"}, {"protocol", kWireProtocol}};
  const json reply = parse_reply(transport_->roundtrip(hello.dump()), ErrorCode::kVersion);
  if (reply["type"] == "error") {
    throw Error(ErrorCode::kVersion, "server rejected " + std::string(kWireProtocol) + ": " +
                                         reply.value("message", std::string()));
  }
  if (reply["type"] != "hello") throw Error(ErrorCode::kVersion, "expected a hello reply");
  auto is_count = [&](const char* key) {
    return reply.contains(key) && reply[key].is_number_integer() && reply[key].get<long long>() >= 0;
  };
  if (!is_count("vocab_size") || !is_count("eos_id")) {
    throw Error(ErrorCode::kVersion, "hello reply lacks vocab_size/eos_id: " + reply.dump());
  }
  SessionInfo info;
  info.vocab_size = reply["vocab_size"].get<std::size_t>();
  info.eos_id = reply["eos_id"].get<TokenId>();
  info.name = reply.value("name", std::string("unnamed"));
  if (info.vocab_size == 0 || static_cast<std::size_t>(info.eos_id) >= info.vocab_size) {
    throw Error(ErrorCode::kVersion, "hello reply has an inconsistent vocabulary");
  }
  session_ = info;
  ready_ = true;
  broken_ = false;
  return session_;
}

bool RemoteProvider::usable() const noexcept {
  std::lock_guard lock(mu_);
  return ready_ && !broken_;
}

void RemoteProvider::require_usable() const {
  if (!ready_) throw Error(ErrorCode::kProtocol, "no successful handshake");
  if (broken_) throw Error(ErrorCode::kProtocol, "connection unusable after a protocol error; handshake again");
}

std::string RemoteProvider::exchange(const std::string& request) const {
  require_usable();
  return transport_->roundtrip(request);
}

std::vector<LogitVector> RemoteProvider::remote_logits(std::span<const TokenSeq> sequences) const {
  if (sequences.empty() || sequences.size() > kMaxBatch) {
    throw Error(ErrorCode::kInvalidInput, "a logits request carries 1 to 16 sequences");
  }
  std::lock_guard lock(mu_);
  require_usable();
  for (const auto& seq : sequences) {
    for (TokenId id : seq) {
      if (id < 0 || static_cast<std::size_t>(id) >= session_.vocab_size) {
        throw Error(ErrorCode::kInvalidToken, "token id " + std::to_string(id) +
                                                  " outside remote vocabulary");
      }
    }
  }
  json request = {{"type", "logits"}, {"sequences", json::array()}};
  for (const auto& seq : sequences) request["sequences"].push_back(seq);
  const json reply = parse_reply(exchange(request.dump()), ErrorCode::kProtocol);
  raise_if_error(reply);

  auto protocol_error = [&](const std::string& why) {
    broken_ = true;
    return Error(ErrorCode::kProtocol, why);
  };
  if (reply["type"] != "logits") throw protocol_error("expected a 'logits' reply");
  const auto& values = reply.contains("values") ? reply["values"] : json();
  if (!values.is_array() || values.size() != sequences.size()) {
    throw protocol_error("logits reply has " + std::to_string(values.size()) + " rows for " +
                         std::to_string(sequences.size()) + " sequences");
  }
  std::vector<LogitVector> rows;
  rows.reserve(values.size());
  for (const auto& row : values) {
    if (!row.is_array() || row.size() != session_.vocab_size) {
      throw protocol_error("logits row of length " + std::to_string(row.size()) +
                           ", expected " + std::to_string(session_.vocab_size));
    }
    std::vector<double> out;
    out.reserve(row.size());
    for (const auto& v : row) {
      if (!v.is_number()) throw protocol_error("non-numeric logit");
      out.push_back(v.get<double>());
    }
    rows.emplace_back(std::move(out));
  }
  return rows;
}

LogitVector RemoteProvider::logits(std::span<const TokenId> seq) const {
  const TokenSeq one(seq.begin(), seq.end());
  return remote_logits(std::span(&one, 1)).front();
}

std::vector<LogitVector> RemoteProvider::logits_batch(std::span<const TokenSeq> sequences) const {
  std::vector<LogitVector> rows;
  for (std::size_t i = 0; i < sequences.size(); i += kMaxBatch) {
    auto part = remote_logits(sequences.subspan(i, std::min(kMaxBatch, sequences.size() - i)));
    std::move(part.begin(), part.end(), std::back_inserter(rows));
  }
  return rows;
}

TokenSeq RemoteProvider::tokenize(std::string_view text) const {
  std::lock_guard lock(mu_);
  const json request = {{"type", "tokenize"}, {"text", text}};
  const json reply = parse_reply(exchange(request.dump()), ErrorCode::kProtocol);
  raise_if_error(reply);
  expect_type(reply, "tokens");
  try {
    return reply.at("ids").get<TokenSeq>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("malformed tokens reply: ") + e.what());
  }
}

std::string RemoteProvider::detokenize(std::span<const TokenId> ids) const {
  std::lock_guard lock(mu_);
  const json request = {{"type", "detokenize"}, {"ids", TokenSeq(ids.begin(), ids.end())}};
  const json reply = parse_reply(exchange(request.dump()), ErrorCode::kProtocol);
  raise_if_error(reply);
  expect_type(reply, "text");
  try {
    return reply.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("malformed text reply: ") + e.what());
  }
}

std::unique_ptr<Transport> make_transport(std::string_view scheme, std::string_view locator,
                                          std::chrono::milliseconds timeout) {
  if (scheme == "cmd") return std::make_unique<SubprocessTransport>(std::string(locator), timeout);
  if (scheme == "http") {
    std::string url(locator);
    if (url.find("://") == std::string::npos) url = "http://" + url;
    return std::make_unique<HttpTransport>(url, timeout);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown transport scheme '" + std::string(scheme) + "'");
}

// --- WireServer --------------------------------------------------------------

std::optional<std::string> WireServer::handle(std::string_view request) const {
  if (faults_.silent) return std::nullopt;
  json req;
  try {
    req = json::parse(request);
  } catch (const json::parse_error&) {
    return error_reply("malformed request");
  }
  if (!req.is_object() || !req.contains("type") || !req["type"].is_string()) {
    return error_reply("request lacks a type");
  }
  const std::string type = req["type"];
  const std::size_t vocab = provider_.vocab_size();
  auto check_ids = [&](const TokenSeq& ids) {
    for (TokenId id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        throw Error(ErrorCode::kInvalidToken, "token id " + std::to_string(id) +
                                                  " outside vocabulary of size " +
                                                  std::to_string(vocab));
      }
    }
  };
  try {
    if (type == "hello") {
      if (req.value("protocol", std::string()) != kWireProtocol) {
        return error_reply("unsupported protocol; this server speaks " + std::string(kWireProtocol));
      }
      json reply = {{"type", "hello"}, {"eos_id", provider_.eos()}, {"name", provider_.name()}};
      if (!faults_.bad_hello) reply["vocab_size"] = vocab;
      return reply.dump();
    }
    if (type == "tokenize") {
      const auto text = req.at("text").get<std::string>();
      return json{{"type", "tokens"}, {"ids", provider_.tokenize(text)}}.dump();
    }
    if (type == "detokenize") {
      const auto ids = req.at("ids").get<TokenSeq>();
      check_ids(ids);
      return json{{"type", "text"}, {"text", provider_.detokenize(ids)}}.dump();
    }
    if (type == "logits") {
      const auto sequences = req.at("sequences").get<std::vector<TokenSeq>>();
      if (sequences.empty() || sequences.size() > kMaxBatch) {
        return error_reply("a logits request carries 1 to 16 sequences");
      }
      for (const auto& seq : sequences) check_ids(seq);
      json values = json::array();
      for (const auto& row : provider_.logits_batch(sequences)) {
        std::vector<double> v(row.values().begin(), row.values().end());
        if (faults_.bad_rows && !v.empty()) v.pop_back();
        values.push_back(v);
      }
      return json{{"type", "logits"}, {"values", values}}.dump();
    }
    return error_reply("unknown request type '" + type + "'");
  } catch (const json::exception& e) {
    return error_reply(std::string("malformed ") + type + " request: " + e.what());
  } catch (const std::exception& e) {
    return error_reply(e.what());
  }
}

void WireServer::serve_stream(std::istream& in, std::ostream& out) const {
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (auto reply = handle(line)) out << *reply << '\n' << std::flush;
  }
}

// --- ReferenceProvider -------------------------------------------------------

ReferenceProvider::ReferenceProvider(Mode mode) : mode_(mode) {
  if (mode == Mode::kBytes) {
    vocab_size_ = 256;
    eos_ = 0;
  } else {
    vocab_size_ = 4;
    eos_ = 3;
  }
}

ReferenceProvider::Mode ReferenceProvider::parse_mode(std::string_view name) {
  if (name == "echo") return Mode::kEcho;
  if (name == "uniform") return Mode::kUniform;
  if (name == "bytes") return Mode::kBytes;
  throw Error(ErrorCode::kInvalidConfig, "unknown reference mode '" + std::string(name) + "'");
}

std::string ReferenceProvider::name() const {
  switch (mode_) {
    case Mode::kEcho: return "reference-echo";
    case Mode::kUniform: return "reference-uniform";
    case Mode::kBytes: return "reference-bytes";
  }
  return "reference";
}

LogitVector ReferenceProvider::logits(std::span<const TokenId> seq) const {
  std::vector<double> row(vocab_size_, 0.0);
  if (mode_ == Mode::kEcho) {
    row[0] = static_cast<double>(seq.size());
    row[1] = seq.empty() ? 0.0 : seq.front();
    row[2] = seq.empty() ? 0.0 : seq.back();
  }
  return LogitVector(std::move(row));
}

TokenSeq ReferenceProvider::tokenize(std::string_view text) const {
  TokenSeq ids;
  for (unsigned char c : text) {
    if (c >= vocab_size_) {
      throw Error(ErrorCode::kInvalidToken, "byte " + std::to_string(c) + " outside vocabulary");
    }
    ids.push_back(c);
  }
  return ids;
}

std::string ReferenceProvider::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) {
      throw Error(ErrorCode::kInvalidToken, "token id " + std::to_string(id) + " outside vocabulary");
    }
    out.push_back(static_cast<char>(id));
  }
  return out;
}

}  // namespace cad
