#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rfp/timestamp.hpp"

namespace rfp {

enum class EndpointKind { http_fetch, file_drop, local_exec, loopback_sim };

std::string_view to_string(EndpointKind kind);
std::optional<EndpointKind> parse_endpoint_kind(std::string_view text);

struct InterfaceEndpoint {
  std::string id;
  EndpointKind kind = EndpointKind::loopback_sim;
  // URL (http-fetch), directory (file-drop), executable path (local-exec) or
  // registered responder name (loopback-sim).
  std::string address;
  // "user:password" for basic auth.
  std::optional<std::string> credentials;
  std::chrono::milliseconds timeout_cap{1000};
  // Name of dropped challenge files; "#token#" becomes a fresh random token.
  std::string filename_template = "rfp-#token#.php";
};

enum class TransportError { timeout, connection, auth, protocol };
std::string_view to_string(TransportError error);

struct ExchangeRecord {
  std::string challenge;
  std::optional<std::string> response;
  TimePoint sent_at;
  TimePoint received_at;
  std::chrono::microseconds elapsed{0};
  std::optional<TransportError> error;
};

class TransportFailure : public std::runtime_error {
 public:
  TransportFailure(TransportError error, const std::string& message)
      : std::runtime_error(message), error_(error) {}
  TransportError error() const noexcept { return error_; }

 private:
  TransportError error_;
};

struct LoopbackReply {
  // Absent when the responder stays silent.
  std::optional<std::string> output;
  std::chrono::microseconds latency{0};
};

// In-process provider behind a loopback-sim endpoint.
class LoopbackResponder {
 public:
  virtual ~LoopbackResponder() = default;
  virtual LoopbackReply respond(std::string_view payload) = 0;
  virtual std::string version_claim() const = 0;
};

// Delivers a challenge over one endpoint and collects the response over the
// same or another one, timing the round trip at the verifier.
//
// Loopback exchanges run on simulated time: the reply's modelled latency is
// added to the measured evaluation time instead of being slept.
class Transport {
 public:
  void register_loopback(const std::string& address, std::shared_ptr<LoopbackResponder> responder);

  ExchangeRecord exchange(const InterfaceEndpoint& challenge_ep,
                          const InterfaceEndpoint& response_ep, std::string_view payload,
                          std::chrono::microseconds deadline);

  // Class-1 baseline: whatever the provider says its version is.
  std::string probe_version_claim(const InterfaceEndpoint& ep);

 private:
  std::shared_ptr<LoopbackResponder> loopback(const InterfaceEndpoint& ep) const;

  std::map<std::string, std::shared_ptr<LoopbackResponder>> loopbacks_;
};

// Endpoint configuration document:
//   {"endpoints": [{"id", "kind", "address", "credentials_env"?,
//                   "credentials_file"?, "timeout_cap_ms"?, "filename"?}],
//    "challenge": id?, "response": id?}
// Credentials come only from the named environment variable or file.
struct EndpointConfig {
  std::vector<InterfaceEndpoint> endpoints;
  std::optional<std::string> challenge_id;
  std::optional<std::string> response_id;

  const InterfaceEndpoint* find(const std::string& id) const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_environment();

// Relative paths in the document resolve against `base_dir`.
EndpointConfig parse_endpoint_config(std::string_view document, const std::string& base_dir = ".",
                                     const EnvLookup& env = process_environment());

}  // namespace rfp
