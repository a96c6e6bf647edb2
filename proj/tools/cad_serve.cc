// Reference cad-wire-v1 server: serves a toy model or one of the protocol
// fixtures over stdin/stdout, or over HTTP with --http-port.

#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "cad/toy_models.h"
#include "cad/wire.h"

int main(int argc, char** argv) {
  CLI::App app{"cad-wire-v1 reference server", "cad-serve"};
  std::string mode = "echo", model_path, fault = "none", host = "127.0.0.1";
  int http_port = -1;
  app.add_option("--mode", mode, "echo | uniform | bytes | toy")
      ->check(CLI::IsMember({"echo", "uniform", "bytes", "toy"}));
  app.add_option("--model", model_path, "cad-toy-v1 model file (mode toy)");
  app.add_option("--fault", fault, "none | bad-hello | bad-rows | silent")
      ->check(CLI::IsMember({"none", "bad-hello", "bad-rows", "silent"}));
  app.add_option("--http-port", http_port, "Serve HTTP on this port (0 = any) instead of stdio");
  app.add_option("--host", host, "HTTP bind address");
  CLI11_PARSE(app, argc, argv);

  try {
    std::unique_ptr<cad::LogitProvider> provider;
    if (mode == "toy") {
      if (model_path.empty()) {
        std::cerr << "cad-serve: --mode toy needs --model\n";
        return 1;
      }
      provider = cad::load_toy_model(model_path);
    } else {
      provider = std::make_unique<cad::ReferenceProvider>(cad::ReferenceProvider::parse_mode(mode));
    }
    cad::ServerFaults faults;
    faults.bad_hello = fault == "bad-hello";
    faults.bad_rows = fault == "bad-rows";
    faults.silent = fault == "silent";
    const cad::WireServer server(*provider, faults);

    if (http_port >= 0) {
      cad::HttpWireServer http(server);
      const int port = http.bind(host, http_port);
      std::cout << port << std::endl;
      std::cerr << "cad-serve: " << provider->name() << " on http://" << host << ":" << port
                << cad::kHttpPath << "\n";
      http.listen();
      return 0;
    }
    std::ios::sync_with_stdio(false);
    server.serve_stream(std::cin, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "cad-serve: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
