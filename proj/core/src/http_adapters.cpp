// The only translation unit that includes httplib.

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "http_client.hpp"
#include "httplib.h"
#include "rfp/sim_server.hpp"

namespace rfp {

namespace detail {

namespace {

struct Url {
  std::string origin;
  std::string path;
};

std::optional<Url> split_url(const std::string& url) {
  static const std::regex re(R"(^(https?)://([^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re) || m[1] != "http") return std::nullopt;
  return Url{"http://" + m[2].str(), m[3].matched ? m[3].str() : "/"};
}

std::pair<std::string, std::string> split_credentials(const std::string& c) {
  auto colon = c.find(':');
  if (colon == std::string::npos) return {c, ""};
  return {c.substr(0, colon), c.substr(colon + 1)};
}

}  // namespace

HttpResult http_request(HttpMethod method, const std::string& url, const std::string& body,
                        const std::optional<std::string>& credentials,
                        std::chrono::microseconds timeout) {
  HttpResult out;
  auto parts = split_url(url);
  if (!parts) {
    out.error = TransportError::protocol;
    return out;
  }
  if (timeout <= std::chrono::microseconds{0}) {
    out.error = TransportError::timeout;
    return out;
  }
  httplib::Client client(parts->origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  client.set_keep_alive(false);
  if (credentials) {
    auto [user, pass] = split_credentials(*credentials);
    client.set_basic_auth(user, pass);
  }

  auto start = std::chrono::steady_clock::now();
  httplib::Result res;
  switch (method) {
    case HttpMethod::get: res = client.Get(parts->path); break;
    case HttpMethod::put: res = client.Put(parts->path, body, "application/octet-stream"); break;
    case HttpMethod::post: res = client.Post(parts->path, body, "application/octet-stream"); break;
  }
  if (!res) {
    bool late = std::chrono::steady_clock::now() - start >= timeout;
    switch (res.error()) {
      case httplib::Error::ConnectionTimeout: out.error = TransportError::timeout; break;
      case httplib::Error::Read:
      case httplib::Error::Write:
        out.error = late ? TransportError::timeout : TransportError::connection;
        break;
      default: out.error = TransportError::connection; break;
    }
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  if (out.status == 401 || out.status == 403) out.error = TransportError::auth;
  return out;
}

}  // namespace detail

namespace sim {

struct SimHttpServer::Impl {
  std::shared_ptr<LoopbackResponder> responder;
  Options options;
  httplib::Server server;
  std::thread thread;
  std::mutex mutex;
  std::map<std::string, std::string> dropped;

  bool authorized(const httplib::Request& req) const {
    if (!options.credentials) return true;
    auto colon = options.credentials->find(':');
    auto user = options.credentials->substr(0, colon);
    auto pass = colon == std::string::npos ? "" : options.credentials->substr(colon + 1);
    auto expected = httplib::make_basic_authentication_header(user, pass).second;
    return req.get_header_value("Authorization") == expected;
  }

  std::optional<std::string> run(const std::string& payload) {
    auto reply = responder->respond(payload);
    if (options.realtime_latency && reply.latency.count() > 0) {
      std::this_thread::sleep_for(reply.latency);
    }
    return reply.output;
  }

  std::optional<std::string> stored(const std::string& name) {
    {
      std::lock_guard lock(mutex);
      auto it = dropped.find(name);
      if (it != dropped.end()) return it->second;
    }
    if (!options.drop_dir || name.find('/') != std::string::npos || name == "..") {
      return std::nullopt;
    }
    std::ifstream in(std::filesystem::path(*options.drop_dir) / name, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  void install_routes() {
    auto guard = [this](auto handler) {
      return [this, handler](const httplib::Request& req, httplib::Response& res) {
        if (!authorized(req)) {
          res.status = 401;
          res.set_header("WWW-Authenticate", "Basic realm=\"rfp\"");
          return;
        }
        handler(req, res);
      };
    };
    server.Post(R"(.*/exchange)", guard([this](const httplib::Request& req, httplib::Response& res) {
      auto out = run(req.body);
      if (!out) {
        res.status = 504;
        return;
      }
      res.set_content(*out, "text/plain");
    }));
    server.Get(R"(.*/version)", guard([this](const httplib::Request&, httplib::Response& res) {
      res.set_content(responder->version_claim(), "text/plain");
    }));
    server.Put(R"(/drop/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex);
      dropped[req.matches[1]] = req.body;
      res.status = 201;
    }));
    server.Get(R"(/run/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
      auto payload = stored(req.matches[1]);
      if (!payload) {
        res.status = 404;
        return;
      }
      auto out = run(*payload);
      if (!out) {
        res.status = 404;
        return;
      }
      res.set_content(*out, "text/plain");
    }));
  }
};

SimHttpServer::SimHttpServer(std::shared_ptr<LoopbackResponder> responder, Options options)
    : impl_(std::make_unique<Impl>()) {
  impl_->responder = std::move(responder);
  impl_->options = std::move(options);
  impl_->install_routes();
}

SimHttpServer::~SimHttpServer() { stop(); }

namespace {

int bind(httplib::Server& server, const SimHttpServer::Options& o) {
  int port = o.port == 0 ? server.bind_to_any_port(o.host)
                         : (server.bind_to_port(o.host, o.port) ? o.port : -1);
  if (port < 0) throw TransportFailure(TransportError::connection, "cannot bind " + o.host);
  return port;
}

}  // namespace

int SimHttpServer::start() {
  port_ = bind(impl_->server, impl_->options);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void SimHttpServer::serve_forever() {
  port_ = bind(impl_->server, impl_->options);
  impl_->server.listen_after_bind();
}

void SimHttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string SimHttpServer::base_url() const {
  return "http://" + impl_->options.host + ":" + std::to_string(port_);
}

}  // namespace sim
}  // namespace rfp
