#pragma once

#include <memory>
#include <optional>
#include <string>

#include "rfp/transport.hpp"

namespace rfp::sim {

// Serves a responder over HTTP so the http-fetch and file-drop transports can
// be exercised end to end.
//
//   POST <any>/exchange    challenge in the body, output in the reply
//   GET  <any>/version     the claimed version label
//   PUT  /drop/<name>      stores a challenge
//   GET  /run/<name>       runs a stored challenge (or <drop_dir>/<name>);
//                          404 while nothing is there
//
// Silence from the responder is a 404 on /run and a 504 on /exchange.
class SimHttpServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 picks a free port
    std::optional<std::string> credentials;
    std::optional<std::string> drop_dir;
    // Sleep for the modelled latency before answering.
    bool realtime_latency = true;
  };

  SimHttpServer(std::shared_ptr<LoopbackResponder> responder, Options options);
  ~SimHttpServer();
  SimHttpServer(const SimHttpServer&) = delete;
  SimHttpServer& operator=(const SimHttpServer&) = delete;

  // Binds and starts serving in a background thread; returns the port.
  int start();
  void stop();
  // Blocks serving on the calling thread until stop() is called elsewhere.
  void serve_forever();

  int port() const noexcept { return port_; }
  std::string base_url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace rfp::sim
