#include <chrono>
#include <sstream>
#include <thread>

#include "cad/cad_engine.h"
#include "cad/fixtures.h"
#include "cad/wire.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "nlohmann/json.hpp"

namespace cad {
namespace {

using namespace std::chrono_literals;
using nlohmann::json;

const std::string kServe = CAD_SERVE_PATH;

std::unique_ptr<RemoteProvider> spawn(const std::string& args, std::chrono::milliseconds timeout = 10s) {
  return std::make_unique<RemoteProvider>(
      std::make_unique<SubprocessTransport>(kServe + " " + args, timeout));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

// Calls a WireServer directly; lets tests look at the exact request lines.
class Loopback final : public Transport {
 public:
  explicit Loopback(const WireServer& server) : server_(server) {}
  std::string roundtrip(const std::string& request) override {
    requests.push_back(request);
    auto reply = server_.handle(request);
    if (!reply) throw Error(ErrorCode::kTransport, "no reply");
    return *reply;
  }
  std::string describe() const override { return "loopback"; }
  std::vector<std::string> requests;

 private:
  const WireServer& server_;
};

TEST(Handshake, EchoServer) {
  const auto remote = spawn("--mode echo");
  EXPECT_EQ(remote->session().vocab_size, 4u);
  EXPECT_EQ(remote->session().eos_id, 3);
  EXPECT_EQ(remote->vocab_size(), 4u);
  EXPECT_TRUE(remote->usable());
}

TEST(Handshake, MissingVocabSizeIsVersionError) {
  EXPECT_EQ(code_of([] { spawn("--mode echo --fault bad-hello"); }), ErrorCode::kVersion);
}

TEST(Handshake, UnreachableEndpoints) {
  EXPECT_EQ(code_of([] {
              RemoteProvider(std::make_unique<SubprocessTransport>("/nonexistent/cad-serve", 2s));
            }),
            ErrorCode::kTransport);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of([] { RemoteProvider(std::make_unique<HttpTransport>("http://127.0.0.1:1", 500ms)); }),
            ErrorCode::kTransport);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 5s);
}

TEST(Handshake, SilentServerTimesOut) {
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of([] { spawn("--mode echo --fault silent", 300ms); }), ErrorCode::kTransport);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_GE(elapsed, 300ms);
  EXPECT_LT(elapsed, 5s);
}

TEST(Handshake, WrongProtocolTag) {
  ReferenceProvider echo(ReferenceProvider::Mode::kEcho);
  WireServer server(echo);
  const auto reply = json::parse(*server.handle(R"({"type":"hello","protocol":"cad-wire-v9"})"));
  EXPECT_EQ(reply["type"], "error");
}

TEST(RemoteLogits, UniformRowsAreZero) {
  const auto remote = spawn("--mode uniform");
  for (const TokenSeq& seq : {TokenSeq{0}, TokenSeq{1, 2, 0, 1}}) {
    const auto row = remote->logits(seq);
    EXPECT_EQ(oracle::as_vec(row.values()), (std::vector<double>(4, 0.0)));
    const auto probs = softmax(row);
    for (double p : probs.values()) EXPECT_NEAR(p, 0.25, 1e-15);
  }
}

TEST(RemoteLogits, BatchOrderPreserved) {
  const auto remote = spawn("--mode echo");
  const std::vector<TokenSeq> batch{{2, 0, 1}, {1}, {0, 0, 2, 2, 1}};
  const auto rows = remote->remote_logits(batch);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(oracle::as_vec(rows[0].values()), (std::vector<double>{3, 2, 1, 0}));
  EXPECT_EQ(oracle::as_vec(rows[1].values()), (std::vector<double>{1, 1, 1, 0}));
  EXPECT_EQ(oracle::as_vec(rows[2].values()), (std::vector<double>{5, 0, 1, 0}));
}

TEST(RemoteLogits, BatchLimit) {
  ReferenceProvider echo(ReferenceProvider::Mode::kEcho);
  WireServer server(echo);
  auto transport = std::make_unique<Loopback>(server);
  auto* loop = transport.get();
  RemoteProvider remote(std::move(transport));

  std::vector<TokenSeq> many;
  for (int i = 0; i < 40; ++i) many.push_back(TokenSeq(static_cast<std::size_t>(i + 1), 1));
  EXPECT_EQ(code_of([&] { remote.remote_logits(many); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([&] { remote.remote_logits({}); }), ErrorCode::kInvalidInput);

  loop->requests.clear();
  const auto rows = remote.logits_batch(many);
  ASSERT_EQ(rows.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(rows[i][0], static_cast<double>(i + 1));
  ASSERT_EQ(loop->requests.size(), 3u);  // 16 + 16 + 8
  for (const auto& r : loop->requests) EXPECT_LE(json::parse(r)["sequences"].size(), kMaxBatch);
}

TEST(RemoteLogits, WrongRowLengthBreaksUntilHandshake) {
  const auto remote = spawn("--mode echo --fault bad-rows");
  EXPECT_EQ(code_of([&] { remote->logits(TokenSeq{1}); }), ErrorCode::kProtocol);
  EXPECT_FALSE(remote->usable());
  EXPECT_EQ(code_of([&] { remote->tokenize("ab"); }), ErrorCode::kProtocol);
  remote->handshake();
  EXPECT_TRUE(remote->usable());
  EXPECT_EQ(remote->tokenize("\x01\x02"), (TokenSeq{1, 2}));
}

class Failing final : public LogitProvider {
 public:
  std::string name() const override { return "failing"; }
  std::size_t vocab_size() const override { return 4; }
  TokenId eos() const override { return 3; }
  LogitVector logits(std::span<const TokenId> seq) const override {
    if (seq.size() > 2) throw std::runtime_error("sequence too long for this backend");
    return LogitVector(std::vector<double>(4, 1.0));
  }
  TokenSeq tokenize(std::string_view) const override { return {}; }
  std::string detokenize(std::span<const TokenId>) const override { return ""; }
};

TEST(RemoteLogits, ServerErrorIsRemote) {
  Failing failing;
  WireServer server(failing);
  RemoteProvider remote(std::make_unique<Loopback>(server));
  try {
    remote.logits(TokenSeq{1, 1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRemote);
    EXPECT_NE(std::string(e.what()).find("too long"), std::string::npos) << e.what();
  }
  EXPECT_TRUE(remote.usable());
  EXPECT_EQ(remote.logits(TokenSeq{1})[0], 1.0);
}

TEST(RemoteLogits, OutOfVocabularyRejectedBeforeSending) {
  const auto remote = spawn("--mode echo");
  EXPECT_EQ(code_of([&] { remote->logits(TokenSeq{7}); }), ErrorCode::kInvalidToken);
  EXPECT_EQ(remote->logits(TokenSeq{1})[0], 1.0);
}

TEST(RemoteText, ByteTokenization) {
  const auto remote = spawn("--mode bytes");
  EXPECT_EQ(remote->tokenize("ab"), (TokenSeq{97, 98}));
  EXPECT_EQ(remote->detokenize(TokenSeq{97, 98}), "ab");
  const std::string text = "Grüße, world!\n";
  EXPECT_EQ(remote->detokenize(remote->tokenize(text)), text);
  EXPECT_EQ(code_of([&] { remote->detokenize(TokenSeq{256}); }), ErrorCode::kRemote);
}

TEST(Http, SameBehaviourAsSubprocess) {
  ReferenceProvider echo(ReferenceProvider::Mode::kEcho);
  WireServer server(echo);
  HttpWireServer http(server);
  const int port = http.bind("127.0.0.1", 0);
  std::thread loop([&] { http.listen(); });
  {
    RemoteProvider remote(std::make_unique<HttpTransport>("http://127.0.0.1:" + std::to_string(port), 5s));
    EXPECT_EQ(remote.session().vocab_size, 4u);
    const std::vector<TokenSeq> batch{{2, 0, 1}, {1}};
    const auto rows = remote.remote_logits(batch);
    EXPECT_EQ(oracle::as_vec(rows[0].values()), (std::vector<double>{3, 2, 1, 0}));
    EXPECT_EQ(oracle::as_vec(rows[1].values()), (std::vector<double>{1, 1, 1, 0}));
    EXPECT_EQ(code_of([&] { remote.detokenize(TokenSeq{9}); }), ErrorCode::kRemote);
  }
  http.stop();
  loop.join();
}

TEST(Http, SilentServerTimesOut) {
  ReferenceProvider echo(ReferenceProvider::Mode::kEcho);
  WireServer server(echo, ServerFaults{.silent = true});
  HttpWireServer http(server);
  const int port = http.bind("127.0.0.1", 0);
  std::thread loop([&] { http.listen(); });
  EXPECT_EQ(code_of([&] {
              RemoteProvider(std::make_unique<HttpTransport>("http://127.0.0.1:" + std::to_string(port), 300ms));
            }),
            ErrorCode::kTransport);
  http.stop();
  loop.join();
}

TEST(ServeStream, OneReplyPerLine) {
  ReferenceProvider bytes(ReferenceProvider::Mode::kBytes);
  WireServer server(bytes);
  std::istringstream in(
      "{\"type\":\"hello\",\"protocol\":\"cad-wire-v1\"}\n"
      "garbage\n"
      "{\"type\":\"tokenize\",\"text\":\"hi\"}\n");
  std::ostringstream out;
  server.serve_stream(in, out);
  std::istringstream replies(out.str());
  std::vector<json> lines;
  for (std::string line; std::getline(replies, line);) lines.push_back(json::parse(line));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0]["type"], "hello");
  EXPECT_EQ(lines[1]["type"], "error");
  EXPECT_EQ(lines[2]["ids"], json::array({104, 105}));
}

TEST(Transparency, ToyModelInProcessAndOverWire) {
  const auto fx = fixtures::build_conflict_fixture();
  const auto remote = spawn("--mode toy --model " + std::string(CAD_FIXTURE_DIR) + "/conflict.model");
  EXPECT_EQ(remote->vocab_size(), fx.model.vocab_size());
  for (const auto& ex : fx.swapped) {
    const auto local_prompt = build_prompt(fx.model, kDefaultTemplate, ex.context, ex.query);
    const auto remote_prompt = build_prompt(*remote, kDefaultTemplate, ex.context, ex.query);
    ASSERT_EQ(local_prompt.context, remote_prompt.context);
    ASSERT_EQ(local_prompt.query, remote_prompt.query);
    GenerationConfig cfg;
    cfg.alpha = 1.0;
    cfg.seed = 5;
    const auto a = generate(fx.model, local_prompt, cfg);
    const auto b = generate(*remote, remote_prompt, cfg);
    EXPECT_EQ(a.tokens, b.tokens);
    EXPECT_EQ(a.text, b.text);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      EXPECT_NEAR(a.steps[i].probability, b.steps[i].probability, 1e-9);
    }
  }
}

TEST(MakeTransport, Schemes) {
  EXPECT_NE(make_transport("cmd", kServe, 1s), nullptr);
  EXPECT_EQ(make_transport("http", "http://127.0.0.1:9", 1s)->describe(), "http:http://127.0.0.1:9");
  EXPECT_EQ(code_of([] { make_transport("ftp", "x", 1s); }), ErrorCode::kInvalidConfig);
}

}  // namespace
}  // namespace cad
