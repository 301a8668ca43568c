#include "rfp/transport.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "http_client.hpp"
#include "json.hpp"

namespace rfp {

namespace fs = std::filesystem;
using namespace std::chrono;
using detail::HttpMethod;

namespace {

std::string fresh_token() {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  std::ostringstream out;
  out << std::hex << gen();
  return out.str();
}

std::string drop_name(const InterfaceEndpoint& ep) {
  std::string name = ep.filename_template;
  auto at = name.find("#token#");
  if (at != std::string::npos) name.replace(at, 7, fresh_token());
  return name;
}

std::string join_url(const std::string& base, const std::string& name) {
  if (!base.empty() && base.back() == '/') return base + name;
  return base + "/" + name;
}

microseconds since(steady_clock::time_point start) {
  return duration_cast<microseconds>(steady_clock::now() - start);
}

struct Budget {
  steady_clock::time_point start = steady_clock::now();
  microseconds total;
  microseconds left() const {
    auto rest = total - since(start);
    return rest > microseconds{0} ? rest : microseconds{0};
  }
};

// Runs `path` with `input` on stdin; returns stdout, or nullopt if the
// process outlives the budget (it is killed) or cannot be started.
std::optional<std::string> run_process(const std::string& path, std::string_view input,
                                       microseconds budget, std::optional<TransportError>& error) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) {
    error = TransportError::connection;
    return std::nullopt;
  }
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    error = TransportError::connection;
    return std::nullopt;
  }
  pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    error = TransportError::connection;
    return std::nullopt;
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    execl(path.c_str(), path.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);

  // Payloads are small; a failed write simply shows up as a wrong answer.
  signal(SIGPIPE, SIG_IGN);
  std::size_t written = 0;
  while (written < input.size()) {
    ssize_t n = write(in_pipe[1], input.data() + written, input.size() - written);
    if (n <= 0) break;
    written += static_cast<std::size_t>(n);
  }
  close(in_pipe[1]);

  auto start = steady_clock::now();
  std::string output;
  bool timed_out = false;
  char buf[4096];
  for (;;) {
    auto left = budget - since(start);
    if (left <= microseconds{0}) {
      timed_out = true;
      break;
    }
    pollfd pfd{out_pipe[0], POLLIN, 0};
    int ready = poll(&pfd, 1, static_cast<int>(duration_cast<milliseconds>(left).count()) + 1);
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    ssize_t n = read(out_pipe[0], buf, sizeof buf);
    if (n <= 0) break;
    output.append(buf, static_cast<std::size_t>(n));
  }
  close(out_pipe[0]);
  if (timed_out) kill(pid, SIGKILL);
  int status = 0;
  waitpid(pid, &status, 0);
  if (timed_out) {
    error = TransportError::timeout;
    return std::nullopt;
  }
  if (WIFEXITED(status) && WEXITSTATUS(status) == 127) {
    error = TransportError::connection;
    return std::nullopt;
  }
  return output;
}

}  // namespace

std::string_view to_string(EndpointKind kind) {
  switch (kind) {
    case EndpointKind::http_fetch: return "http-fetch";
    case EndpointKind::file_drop: return "file-drop";
    case EndpointKind::local_exec: return "local-exec";
    case EndpointKind::loopback_sim: return "loopback-sim";
  }
  return "";
}

std::optional<EndpointKind> parse_endpoint_kind(std::string_view text) {
  if (text == "http-fetch") return EndpointKind::http_fetch;
  if (text == "file-drop") return EndpointKind::file_drop;
  if (text == "local-exec") return EndpointKind::local_exec;
  if (text == "loopback-sim") return EndpointKind::loopback_sim;
  return std::nullopt;
}

std::string_view to_string(TransportError error) {
  switch (error) {
    case TransportError::timeout: return "timeout";
    case TransportError::connection: return "connection";
    case TransportError::auth: return "auth";
    case TransportError::protocol: return "protocol";
  }
  return "";
}

void Transport::register_loopback(const std::string& address,
                                  std::shared_ptr<LoopbackResponder> responder) {
  loopbacks_[address] = std::move(responder);
}

std::shared_ptr<LoopbackResponder> Transport::loopback(const InterfaceEndpoint& ep) const {
  auto it = loopbacks_.find(ep.address);
  return it == loopbacks_.end() ? nullptr : it->second;
}

ExchangeRecord Transport::exchange(const InterfaceEndpoint& challenge_ep,
                                   const InterfaceEndpoint& response_ep, std::string_view payload,
                                   microseconds deadline) {
  ExchangeRecord rec;
  rec.challenge = std::string(payload);
  const microseconds cap = deadline + duration_cast<microseconds>(response_ep.timeout_cap);

  auto finish = [&](steady_clock::time_point start, TimePoint wall_start,
                    microseconds extra = microseconds{0}) {
    rec.elapsed = since(start) + extra;
    rec.sent_at = wall_start;
    rec.received_at = wall_start + duration_cast<system_clock::duration>(rec.elapsed);
  };

  if (challenge_ep.kind == EndpointKind::loopback_sim ||
      response_ep.kind == EndpointKind::loopback_sim) {
    auto responder = loopback(challenge_ep);
    if (challenge_ep.kind != response_ep.kind || challenge_ep.address != response_ep.address ||
        !responder) {
      rec.sent_at = rec.received_at = system_clock::now();
      rec.error = TransportError::connection;
      return rec;
    }
    auto wall = system_clock::now();
    auto start = steady_clock::now();
    auto reply = responder->respond(payload);
    finish(start, wall, reply.latency);
    if (!reply.output || rec.elapsed > cap) {
      rec.error = TransportError::timeout;
      if (rec.elapsed > cap) {
        rec.elapsed = cap;
        rec.received_at = rec.sent_at + duration_cast<system_clock::duration>(cap);
      }
      return rec;
    }
    rec.response = std::move(reply.output);
    return rec;
  }

  if (challenge_ep.kind == EndpointKind::local_exec) {
    auto wall = system_clock::now();
    auto start = steady_clock::now();
    std::optional<TransportError> error;
    auto out = run_process(challenge_ep.address, payload, cap, error);
    finish(start, wall);
    rec.response = std::move(out);
    rec.error = error;
    return rec;
  }

  // Same http endpoint on both sides: one POST carries the challenge and
  // returns the response.
  if (challenge_ep.kind == EndpointKind::http_fetch && challenge_ep.id == response_ep.id) {
    auto wall = system_clock::now();
    auto start = steady_clock::now();
    auto res = detail::http_request(HttpMethod::post, challenge_ep.address, rec.challenge,
                                    challenge_ep.credentials, cap);
    finish(start, wall);
    if (res.error) {
      rec.error = res.error;
    } else if (res.status / 100 != 2) {
      rec.error = TransportError::protocol;
    } else {
      rec.response = std::move(res.body);
    }
    return rec;
  }

  // Two channels: store the challenge under a fresh name, then fetch it.
  const std::string name = drop_name(challenge_ep);
  Budget budget{steady_clock::now(), cap};
  if (challenge_ep.kind == EndpointKind::file_drop) {
    std::error_code ec;
    fs::create_directories(challenge_ep.address, ec);
    std::ofstream out(fs::path(challenge_ep.address) / name, std::ios::binary);
    out.write(rec.challenge.data(), static_cast<std::streamsize>(rec.challenge.size()));
    out.close();
    if (!out) {
      rec.sent_at = rec.received_at = system_clock::now();
      rec.error = TransportError::connection;
      return rec;
    }
  } else if (challenge_ep.kind == EndpointKind::http_fetch) {
    auto res = detail::http_request(HttpMethod::put, join_url(challenge_ep.address, name),
                                    rec.challenge, challenge_ep.credentials, budget.left());
    if (res.error || res.status / 100 != 2) {
      rec.sent_at = rec.received_at = system_clock::now();
      rec.error = res.error ? res.error : TransportError::protocol;
      return rec;
    }
  }

  auto wall = system_clock::now();
  auto start = steady_clock::now();
  budget = Budget{start, cap};
  if (response_ep.kind != EndpointKind::http_fetch) {
    finish(start, wall);
    rec.error = TransportError::protocol;
    return rec;
  }
  const std::string url = join_url(response_ep.address, name);
  for (;;) {
    auto left = budget.left();
    if (left <= microseconds{0}) {
      finish(start, wall);
      rec.error = TransportError::timeout;
      break;
    }
    auto res = detail::http_request(HttpMethod::get, url, "", response_ep.credentials, left);
    if (res.error) {
      finish(start, wall);
      rec.error = res.error;
      break;
    }
    if (res.status / 100 == 2) {
      finish(start, wall);
      rec.response = std::move(res.body);
      break;
    }
    if (res.status != 404) {
      finish(start, wall);
      rec.error = TransportError::protocol;
      break;
    }
    std::this_thread::sleep_for(std::min<microseconds>(milliseconds(20), budget.left()));
  }
  if (challenge_ep.kind == EndpointKind::file_drop) {
    std::error_code ec;
    fs::remove(fs::path(challenge_ep.address) / name, ec);
  }
  return rec;
}

std::string Transport::probe_version_claim(const InterfaceEndpoint& ep) {
  switch (ep.kind) {
    case EndpointKind::loopback_sim: {
      auto responder = loopback(ep);
      if (!responder) {
        throw TransportFailure(TransportError::connection,
                               "no simulated provider registered at '" + ep.address + "'");
      }
      return responder->version_claim();
    }
    case EndpointKind::http_fetch: {
      auto res = detail::http_request(HttpMethod::get, join_url(ep.address, "version"), "",
                                      ep.credentials, duration_cast<microseconds>(ep.timeout_cap));
      if (res.error) {
        throw TransportFailure(*res.error, "version probe of '" + ep.address + "' failed");
      }
      if (res.status / 100 != 2) {
        throw TransportFailure(TransportError::protocol,
                               "version probe of '" + ep.address + "' returned status " +
                                   std::to_string(res.status));
      }
      return res.body;
    }
    case EndpointKind::local_exec: {
      std::optional<TransportError> error;
      auto out = run_process(ep.address, "", duration_cast<microseconds>(ep.timeout_cap), error);
      if (!out) throw TransportFailure(error.value_or(TransportError::connection), "version probe failed");
      return *out;
    }
    case EndpointKind::file_drop:
      break;
  }
  throw TransportFailure(TransportError::protocol, "a file-drop endpoint cannot answer a version probe");
}

const InterfaceEndpoint* EndpointConfig::find(const std::string& id) const {
  for (const auto& ep : endpoints) {
    if (ep.id == id) return &ep;
  }
  return nullptr;
}

EnvLookup process_environment() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

EndpointConfig parse_endpoint_config(std::string_view document, const std::string& base_dir,
                                     const EnvLookup& env) {
  using json = nlohmann::json;
  json root;
  try {
    root = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("endpoint config is not JSON: ") + e.what());
  }
  auto bad = [](const std::string& what) { throw std::invalid_argument("endpoint config: " + what); };
  if (!root.is_object() || !root.contains("endpoints") || !root["endpoints"].is_array()) {
    bad("expected an object with an 'endpoints' list");
  }
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? p : (fs::path(base_dir) / path).lexically_normal().string();
  };

  EndpointConfig cfg;
  for (const auto& e : root["endpoints"]) {
    if (!e.is_object()) bad("endpoint entries must be objects");
    for (auto it = e.begin(); it != e.end(); ++it) {
      static const std::vector<std::string> kKnown = {
          "id", "kind", "address", "credentials_env", "credentials_file", "timeout_cap_ms",
          "filename"};
      if (std::find(kKnown.begin(), kKnown.end(), it.key()) == kKnown.end()) {
        bad("unknown field '" + it.key() + "'");
      }
    }
    InterfaceEndpoint ep;
    if (!e.contains("id") || !e["id"].is_string()) bad("endpoint without an id");
    ep.id = e["id"].get<std::string>();
    if (cfg.find(ep.id)) bad("duplicate endpoint id '" + ep.id + "'");
    if (!e.contains("kind") || !e["kind"].is_string()) bad("endpoint '" + ep.id + "' has no kind");
    auto kind = parse_endpoint_kind(e["kind"].get<std::string>());
    if (!kind) bad("endpoint '" + ep.id + "' has unknown kind '" + e["kind"].get<std::string>() + "'");
    ep.kind = *kind;
    if (!e.contains("address") || !e["address"].is_string()) bad("endpoint '" + ep.id + "' has no address");
    ep.address = e["address"].get<std::string>();
    if (ep.kind != EndpointKind::http_fetch) ep.address = resolve(ep.address);
    if (auto it = e.find("timeout_cap_ms"); it != e.end()) {
      if (!it->is_number_integer() || it->get<long long>() < 0) bad("timeout_cap_ms must be >= 0");
      ep.timeout_cap = milliseconds(it->get<long long>());
    }
    if (auto it = e.find("filename"); it != e.end()) ep.filename_template = it->get<std::string>();
    if (auto it = e.find("credentials_env"); it != e.end()) {
      auto value = env(it->get<std::string>());
      if (!value) bad("environment variable '" + it->get<std::string>() + "' is not set");
      ep.credentials = *value;
    } else if (auto it = e.find("credentials_file"); it != e.end()) {
      std::ifstream in(resolve(it->get<std::string>()));
      if (!in) bad("cannot read credentials file '" + it->get<std::string>() + "'");
      std::string line;
      std::getline(in, line);
      ep.credentials = line;
    }
    cfg.endpoints.push_back(std::move(ep));
  }
  if (auto it = root.find("challenge"); it != root.end()) cfg.challenge_id = it->get<std::string>();
  if (auto it = root.find("response"); it != root.end()) cfg.response_id = it->get<std::string>();
  return cfg;
}

}  // namespace rfp
