#include "httplib.h"

#include "cad/wire.h"

#include <atomic>
#include <thread>

namespace cad {

struct HttpTransport::Impl {
  explicit Impl(const std::string& url) : client(url) {}
  httplib::Client client;
};

HttpTransport::HttpTransport(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  impl_ = std::make_unique<Impl>(base_url_);
  if (!impl_->client.is_valid()) {
    throw Error(ErrorCode::kTransport, "invalid server url '" + base_url_ + "'");
  }
  impl_->client.set_connection_timeout(timeout);
  impl_->client.set_read_timeout(timeout);
  impl_->client.set_write_timeout(timeout);
}

HttpTransport::~HttpTransport() = default;

std::string HttpTransport::roundtrip(const std::string& request) {
  auto res = impl_->client.Post(std::string(kHttpPath), request, "application/json");
  if (!res) {
    throw Error(ErrorCode::kTransport,
                "POST " + base_url_ + std::string(kHttpPath) + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kTransport, "server answered HTTP " + std::to_string(res->status));
  }
  std::string body = res->body;
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
  return body;
}

struct HttpWireServer::Impl {
  explicit Impl(const WireServer& s) : server(s) {}
  const WireServer& server;
  httplib::Server http;
  std::atomic<bool> stopping{false};
};

HttpWireServer::HttpWireServer(const WireServer& server) : impl_(std::make_unique<Impl>(server)) {
  impl_->http.Post(std::string(kHttpPath), [this](const httplib::Request& req, httplib::Response& res) {
    auto reply = impl_->server.handle(req.body);
    if (!reply) {
      // Silent servers hold the request until the client gives up.
      while (!impl_->stopping) std::this_thread::sleep_for(std::chrono::milliseconds(20));
      return;
    }
    res.set_content(*reply + "\n", "application/json");
  });
}

HttpWireServer::~HttpWireServer() { stop(); }

int HttpWireServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->http.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kTransport, "cannot bind " + host);
    return bound;
  }
  if (!impl_->http.bind_to_port(host, port)) {
    throw Error(ErrorCode::kTransport, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpWireServer::listen() { impl_->http.listen_after_bind(); }

void HttpWireServer::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  impl_->http.stop();
}

}  // namespace cad
