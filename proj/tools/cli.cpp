#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

#include "rfp/orfp.hpp"
#include "rfp/sim_server.hpp"
#include "rfp/strategy.hpp"
#include "rfp/verdict.hpp"

namespace rfp::cli {

namespace fs = std::filesystem;

namespace {

// Bad input the user can fix; reported without a stack of context.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw UsageError("cannot write '" + path + "'");
}

Version version_arg(const std::string& text) {
  auto v = Version::try_parse(text);
  if (!v) throw UsageError("'" + text + "' is not a version label");
  return *v;
}

RandomnessSource rng_for(const std::optional<std::uint64_t>& seed) {
  return seed ? RandomnessSource::seeded(*seed) : RandomnessSource::secure();
}

std::string now_rfc3339() { return format_rfc3339(std::chrono::system_clock::now()); }

// ---- audit -------------------------------------------------------------------

struct AuditArgs {
  std::string database;
  std::string strategy;
  std::string target;
  std::optional<std::uint64_t> seed;
  unsigned repeat = 1;
  std::optional<std::size_t> budget;
  std::string format = "table";
  std::string endpoints;
  std::string simulator;
  std::string claim_endpoint;
};

StrategyKind pick_strategy(const Database& db, const std::string& requested) {
  std::vector<StrategyKind> enabled;
  for (const auto& name : db.meta().strategies) {
    if (auto k = parse_strategy(name)) enabled.push_back(*k);
  }
  if (requested.empty()) return enabled.empty() ? StrategyKind::CBS : enabled.front();
  auto kind = parse_strategy(requested);
  if (!kind) throw UsageError("unknown strategy '" + requested + "'");
  if (!enabled.empty() && std::find(enabled.begin(), enabled.end(), *kind) == enabled.end()) {
    throw UsageError("strategy '" + requested + "' is not enabled in the database settings");
  }
  return *kind;
}

struct Provider {
  Transport transport;
  Endpoints endpoints;
  std::optional<InterfaceEndpoint> claim;
};

void setup_simulator(Provider& p, const std::string& path) {
  auto cfg = sim::parse_simulator_config(read_text(path));
  if (!cfg.provider) throw UsageError("simulator config '" + path + "' has no provider");
  p.transport.register_loopback("sim", sim::produce(cfg.family, *cfg.provider));
  InterfaceEndpoint ep{"sim", EndpointKind::loopback_sim, "sim"};
  p.endpoints = {ep, ep};
  p.claim = ep;
}

void setup_endpoints(Provider& p, const Database& db, const AuditArgs& a) {
  auto base = fs::path(a.endpoints).parent_path().string();
  auto cfg = parse_endpoint_config(read_text(a.endpoints), base.empty() ? "." : base);
  auto lookup = [&](const std::optional<std::string>& id, const std::string& fallback) {
    const std::string& name = id ? *id : fallback;
    const auto* ep = cfg.find(name);
    if (!ep) throw UsageError("endpoint '" + name + "' is not defined in '" + a.endpoints + "'");
    return *ep;
  };
  p.endpoints = {lookup(cfg.challenge_id, db.meta().challenge_interface),
                 lookup(cfg.response_id, db.meta().response_interface)};
  if (!a.claim_endpoint.empty()) p.claim = lookup(a.claim_endpoint, a.claim_endpoint);
}

// Exchanges that did not reach the provider at all.
std::vector<std::string> transport_failures(const DecisionLog& log) {
  std::vector<std::string> out;
  for (const auto& e : log.entries()) {
    if (e.provenance != Provenance::selected) continue;
    for (const auto& x : e.outcome.exchanges) {
      if (x.error && *x.error != TransportError::timeout) {
        out.push_back(e.version.raw() + ": " + std::string(to_string(*x.error)));
      }
    }
  }
  return out;
}

int finish_report(VerdictReport& report, const std::string& format, std::ostream& out) {
  if (format == "json") {
    out << report_json(report) << "\n";
  } else {
    out << report_table(report);
  }
  if (report.bounds.inconsistency) return kAbnormal;
  if (report.target) return report.compliant.value_or(false) ? kOk : kFailed;
  return kOk;
}

int cmd_audit(const AuditArgs& a, std::ostream& out, std::ostream& err) {
  auto db = load_database(read_text(a.database));
  auto kind = pick_strategy(db, a.strategy);
  std::optional<Version> target;
  if (!a.target.empty()) target = version_arg(a.target);
  if (a.repeat == 0) throw UsageError("--repeat must be at least 1");

  Provider p;
  if (!a.simulator.empty() == !a.endpoints.empty()) {
    throw UsageError("give exactly one of --simulator and --endpoints");
  }
  if (!a.simulator.empty()) {
    setup_simulator(p, a.simulator);
  } else {
    setup_endpoints(p, db, a);
  }

  std::optional<std::string> claim;
  if (p.claim) {
    try {
      claim = p.transport.probe_version_claim(*p.claim);
    } catch (const TransportFailure& e) {
      err << "version claim unavailable: " << e.what() << "\n";
    }
  }

  auto rng = rng_for(a.seed);
  auto log = run_audit(db, std::string(to_string(kind)), p.endpoints, rng, p.transport, a.budget,
                       a.repeat);
  auto report = make_report(log, db, std::string(to_string(kind)), target);
  report.claim = claim;
  auto failures = transport_failures(log);
  int status = finish_report(report, a.format, out);
  if (!failures.empty()) {
    err << "transport failures:\n";
    for (const auto& f : failures) err << "  " << f << "\n";
    return kAbnormal;
  }
  return status;
}

// ---- db ----------------------------------------------------------------------

int cmd_db_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  Database db;
  try {
    db = load_database(read_text(path));
  } catch (const DatabaseError& e) {
    err << path << ": " << to_string(e.kind()) << ": " << e.what() << "\n";
    return kFailed;
  }
  auto report = validate_strategy_independence(db);
  for (const auto& p : report.problems) err << path << ": " << p << "\n";
  for (const auto& [v, rep] : report.equivalent) {
    out << v.raw() << " is indistinguishable from " << (rep ? rep->raw() : "nothing below it")
        << "\n";
  }
  out << path << ": " << db.entries().size() << " entries, " << db.family().size()
      << " versions, " << (report.ok() ? "valid" : "invalid") << "\n";
  return report.ok() ? kOk : kFailed;
}

int cmd_db_new(const std::string& service, const std::string& output, std::ostream& out) {
  auto text = serialize_database(make_empty_database(service, now_rfc3339()));
  if (output.empty()) {
    out << text;
  } else {
    write_text(output, text);
  }
  return kOk;
}

struct AddEntryArgs {
  std::string database;
  std::string output;
  std::string version;
  std::string payload;
  std::string expect;
  std::vector<std::string> vars;
  std::vector<std::string> branches;
  std::string deprecated;
  std::string reintroduced;
  std::optional<std::int64_t> wait_ms;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

// name:integer:MIN:MAX | name:string:LEN | name:binary:LEN | name:version |
// name:dir-file[:LEN]
VariableSpec variable_arg(const std::string& text) {
  auto parts = split(text, ':');
  auto bad = [&] { return UsageError("bad --var '" + text + "'"); };
  if (parts.size() < 2) throw bad();
  auto format = parse_variable_format(parts[1]);
  if (!format) throw bad();
  VariableSpec spec;
  spec.name = parts[0];
  spec.format = *format;
  try {
    switch (*format) {
      case VariableFormat::integer:
        if (parts.size() != 4) throw bad();
        spec.min = std::stoll(parts[2]);
        spec.max = std::stoll(parts[3]);
        break;
      case VariableFormat::string:
      case VariableFormat::binary:
        if (parts.size() != 3) throw bad();
        spec.length = static_cast<std::uint32_t>(std::stoul(parts[2]));
        break;
      case VariableFormat::version:
        if (parts.size() != 2) throw bad();
        break;
      case VariableFormat::dir_file:
        if (parts.size() > 3) throw bad();
        if (parts.size() == 3) spec.length = static_cast<std::uint32_t>(std::stoul(parts[2]));
        break;
    }
  } catch (const std::logic_error&) {
    throw bad();
  }
  return spec;
}

int cmd_db_add_entry(const AddEntryArgs& a, std::ostream& out, std::ostream& err) {
  auto db = load_database(read_text(a.database));
  VersionTest t;
  t.version = version_arg(a.version);
  if (!a.payload.empty()) {
    t.challenge_template = a.payload;
    t.expect_template = a.expect;
  } else if (!a.expect.empty() || !a.vars.empty()) {
    throw UsageError("--expect and --var need --payload");
  }
  for (const auto& v : a.vars) {
    auto spec = variable_arg(v);
    t.variables[spec.name] = spec;
  }
  for (const auto& b : a.branches) {
    auto eq = b.find('=');
    t.branching.push_back({version_arg(b.substr(0, eq)), eq == std::string::npos ? "1" : b.substr(eq + 1)});
  }
  if (!a.deprecated.empty()) {
    t.deprecated = Deprecation{version_arg(a.deprecated), std::nullopt};
    if (!a.reintroduced.empty()) t.deprecated->reintroduced = version_arg(a.reintroduced);
  } else if (!a.reintroduced.empty()) {
    throw UsageError("--reintroduced needs --deprecated");
  }
  if (a.wait_ms) t.overrides.wait = WaitTime{*a.wait_ms, "milliseconds"};

  Database updated;
  try {
    updated = db.with_entry(t);
  } catch (const DatabaseError& e) {
    err << to_string(e.kind()) << ": " << e.what() << "\n";
    return kFailed;
  }
  auto meta = updated.meta();
  meta.last_update_timestamp = now_rfc3339();
  updated = Database(meta, updated.family(), updated.entries());
  write_text(a.output.empty() ? a.database : a.output, serialize_database(updated));
  out << "added " << t.version.raw() << "\n";
  return kOk;
}

// ---- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string version;
  std::string behavior;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> payload;
  bool claim = false;
  bool serve = false;
  std::string host = "127.0.0.1";
  int port = 0;
  std::string drop_dir;
  std::string credentials_env;
};

std::shared_ptr<sim::SimResponder> build_responder(const SimulateArgs& a) {
  auto cfg = sim::parse_simulator_config(read_text(a.config));
  sim::SimProviderConfig provider;
  if (cfg.provider) provider = *cfg.provider;
  if (!a.version.empty()) {
    provider.src_version = version_arg(a.version);
  } else if (!cfg.provider) {
    throw UsageError("the config has no provider; give --version");
  }
  if (!a.behavior.empty()) provider.behavior = sim::parse_behavior(a.behavior);
  if (a.seed) provider.seed = *a.seed;
  return sim::produce(cfg.family, provider);
}

int cmd_simulate(const SimulateArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  auto responder = build_responder(a);
  if (a.serve) {
    sim::SimHttpServer::Options opts;
    opts.host = a.host;
    opts.port = a.port;
    if (!a.drop_dir.empty()) opts.drop_dir = a.drop_dir;
    if (!a.credentials_env.empty()) {
      const char* value = std::getenv(a.credentials_env.c_str());
      if (!value) throw UsageError("environment variable '" + a.credentials_env + "' is not set");
      opts.credentials = value;
    }
    sim::SimHttpServer server(responder, opts);
    err << "serving " << sim::behavior_name(responder->config().behavior) << " provider at "
        << responder->config().src_version.raw() << "\n";
    err.flush();
    // serve_forever binds first; report the address once it is known.
    std::thread announce([&] {
      for (int i = 0; i < 500 && server.port() == 0; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      out << server.base_url() << std::endl;
    });
    server.serve_forever();
    announce.join();
    return kOk;
  }
  if (a.claim) {
    out << responder->version_claim() << "\n";
    return kOk;
  }
  std::string payload = a.payload ? *a.payload
                                  : std::string(std::istreambuf_iterator<char>(in),
                                                std::istreambuf_iterator<char>());
  auto reply = responder->respond(payload);
  if (!reply.output) {
    err << "no response\n";
    return kFailed;
  }
  out << *reply.output;
  return kOk;
}

// ---- orfp and verify-logs ----------------------------------------------------

struct OrfpArgs {
  std::string database;
  std::string simulator;
  std::string strategy;
  std::string target;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget;
  std::string out_dir;
  std::string format = "table";
};

int cmd_orfp(const OrfpArgs& a, std::ostream& out, std::ostream& err) {
  auto db = load_database(read_text(a.database));
  auto kind = pick_strategy(db, a.strategy);
  std::optional<Version> target;
  if (!a.target.empty()) target = version_arg(a.target);
  auto cfg = sim::parse_simulator_config(read_text(a.simulator));
  if (!cfg.provider) throw UsageError("simulator config '" + a.simulator + "' has no provider");

  orfp::Session::Options opts;
  opts.seed = a.seed.value_or(0);
  orfp::Session session(db.family(), sim::produce(cfg.family, *cfg.provider), opts);
  orfp::OrfpExecutor executor(session);
  DecisionLog log;
  try {
    log = run_audit(db, kind, executor, a.budget);
  } catch (const orfp::ProtocolError& e) {
    err << "round aborted, " << orfp::to_string(e.blamed()) << " at fault: " << e.what() << "\n";
    return kAbnormal;
  }
  auto report = make_report(log, db, std::string(to_string(kind)), target);

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    auto logs = session.logs();
    write_text((fs::path(a.out_dir) / "auditor.ndjson").string(), orfp::encode_log(*logs.auditor));
    write_text((fs::path(a.out_dir) / "user.ndjson").string(), orfp::encode_log(*logs.user));
    write_text((fs::path(a.out_dir) / "provider.ndjson").string(), orfp::encode_log(*logs.provider));
    write_text((fs::path(a.out_dir) / "keys.json").string(),
               orfp::encode_public_keys(session.keys()) + "\n");
  }
  if (session.auditor().repeated_randomness_alarm()) err << "warning: user randomness repeats\n";
  return finish_report(report, a.format, out);
}

struct VerifyArgs {
  std::string keys;
  std::string database;
  std::vector<std::string> logs;
  std::int64_t skew_ms = 2000;
};

int cmd_verify_logs(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  orfp::PartyLogs logs;
  orfp::PublicKeys keys;
  try {
    keys = orfp::decode_public_keys(read_text(a.keys));
    for (const auto& path : a.logs) {
      auto text = read_text(path);
      auto role = orfp::detect_log_role(text);
      auto dup = [&] { return orfp::LogFormatError("second " + std::string(orfp::to_string(role)) + " log: " + path); };
      switch (role) {
        case orfp::Role::auditor:
          if (logs.auditor) throw dup();
          logs.auditor = orfp::decode_auditor_log(text);
          break;
        case orfp::Role::user:
          if (logs.user) throw dup();
          logs.user = orfp::decode_user_log(text);
          break;
        case orfp::Role::provider:
          if (logs.provider) throw dup();
          logs.provider = orfp::decode_provider_log(text);
          break;
      }
    }
  } catch (const orfp::LogFormatError& e) {
    err << "malformed log: " << e.what() << "\n";
    return kAbnormal;
  }

  std::optional<Database> db;
  if (!a.database.empty()) db = load_database(read_text(a.database));
  orfp::VerifyOptions opts;
  opts.skew = std::chrono::milliseconds(a.skew_ms);
  opts.db = db ? &*db : nullptr;
  auto report = orfp::verify_liability(logs, keys, opts);

  for (const auto* v : {&report.auditor, &report.user, &report.provider}) {
    out << orfp::to_string(v->role) << ": ";
    if (!v->supplied && v->compliant) {
      out << "no log\n";
    } else if (v->compliant) {
      out << "compliant\n";
    } else {
      out << "blamed";
      if (v->round) out << " in round " << *v->round;
      out << ": " << v->reason << "\n";
    }
  }
  return report.all_compliant() ? kOk : kFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Audit which software version a remote provider really runs.", "rfp"};
  app.require_subcommand(1);

  AuditArgs audit;
  auto* audit_cmd = app.add_subcommand("audit", "Run an audit and print the verdict");
  audit_cmd->add_option("--database", audit.database, "Fingerprint database")->required();
  audit_cmd->add_option("--strategy", audit.strategy, "BS, CBS, HTL, LTH or HMSU");
  audit_cmd->add_option("--target", audit.target, "Version the provider must run");
  audit_cmd->add_option("--seed", audit.seed, "Reproducible randomness (testing only)");
  audit_cmd->add_option("--repeat", audit.repeat, "Runs per intrinsic test; all must pass");
  audit_cmd->add_option("--budget", audit.budget, "Maximum number of selected tests");
  audit_cmd->add_option("--format", audit.format)->check(CLI::IsMember({"table", "json"}));
  audit_cmd->add_option("--endpoints", audit.endpoints, "Endpoint configuration");
  audit_cmd->add_option("--simulator", audit.simulator, "Audit an in-process simulated provider");
  audit_cmd->add_option("--claim-endpoint", audit.claim_endpoint,
                        "Endpoint id to ask for the claimed version");

  auto* db_cmd = app.add_subcommand("db", "Validate or author fingerprint databases");
  db_cmd->require_subcommand(1);
  std::string validate_path;
  auto* validate_cmd = db_cmd->add_subcommand("validate", "Load and check a database");
  validate_cmd->add_option("database", validate_path)->required();
  std::string new_service, new_output;
  auto* new_cmd = db_cmd->add_subcommand("new", "Write an empty database");
  new_cmd->add_option("--service", new_service, "Service name")->required();
  new_cmd->add_option("--output", new_output, "Destination (default: stdout)");
  AddEntryArgs add;
  auto* add_cmd = db_cmd->add_subcommand("add-entry", "Add or replace a version entry");
  add_cmd->add_option("--database", add.database)->required();
  add_cmd->add_option("--output", add.output, "Destination (default: in place)");
  add_cmd->add_option("--version", add.version)->required();
  add_cmd->add_option("--payload", add.payload, "Challenge template");
  add_cmd->add_option("--expect", add.expect, "Expected response template");
  add_cmd->add_option("--var", add.vars, "name:format[:...] variable");
  add_cmd->add_option("--branch", add.branches, "Referenced version, optionally =flag");
  add_cmd->add_option("--deprecated", add.deprecated, "Version that removed the function");
  add_cmd->add_option("--reintroduced", add.reintroduced, "Version that brought it back");
  add_cmd->add_option("--wait-ms", add.wait_ms, "Deadline override");

  SimulateArgs simulate;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulated provider");
  sim_cmd->add_option("--config", simulate.config)->required();
  sim_cmd->add_option("--version", simulate.version, "Installed version");
  sim_cmd->add_option("--behavior", simulate.behavior, "Behaviour as JSON");
  sim_cmd->add_option("--seed", simulate.seed);
  sim_cmd->add_option("--payload", simulate.payload, "Challenge (default: stdin)");
  sim_cmd->add_flag("--claim", simulate.claim, "Print the claimed version");
  sim_cmd->add_flag("--serve", simulate.serve, "Serve over HTTP until killed");
  sim_cmd->add_option("--host", simulate.host);
  sim_cmd->add_option("--port", simulate.port);
  sim_cmd->add_option("--drop-dir", simulate.drop_dir, "Directory of dropped challenges");
  sim_cmd->add_option("--credentials-env", simulate.credentials_env,
                      "Variable holding user:password for basic auth");

  OrfpArgs orfp_args;
  auto* orfp_cmd = app.add_subcommand("orfp", "Run an outsourced audit with signed logs");
  orfp_cmd->add_option("--database", orfp_args.database)->required();
  orfp_cmd->add_option("--simulator", orfp_args.simulator)->required();
  orfp_cmd->add_option("--strategy", orfp_args.strategy);
  orfp_cmd->add_option("--target", orfp_args.target);
  orfp_cmd->add_option("--seed", orfp_args.seed, "Deterministic keys and randomness (testing only)");
  orfp_cmd->add_option("--budget", orfp_args.budget);
  orfp_cmd->add_option("--out-dir", orfp_args.out_dir, "Where to write the logs and keys");
  orfp_cmd->add_option("--format", orfp_args.format)->check(CLI::IsMember({"table", "json"}));

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify-logs", "Check signed logs and assign blame");
  verify_cmd->add_option("--keys", verify.keys, "Public keys")->required();
  verify_cmd->add_option("--database", verify.database, "Recompute expected responses");
  verify_cmd->add_option("--skew-ms", verify.skew_ms, "Tolerated clock skew");
  verify_cmd->add_option("logs", verify.logs, "Log files")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kAbnormal;
  }

  try {
    if (audit_cmd->parsed()) return cmd_audit(audit, out, err);
    if (validate_cmd->parsed()) return cmd_db_validate(validate_path, out, err);
    if (new_cmd->parsed()) return cmd_db_new(new_service, new_output, out);
    if (add_cmd->parsed()) return cmd_db_add_entry(add, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(simulate, std::cin, out, err);
    if (orfp_cmd->parsed()) return cmd_orfp(orfp_args, out, err);
    if (verify_cmd->parsed()) return cmd_verify_logs(verify, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const DatabaseError& e) {
    err << "database: " << to_string(e.kind()) << ": " << e.what() << "\n";
  } catch (const sim::SimConfigError& e) {
    err << "simulator: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kAbnormal;
}

}  // namespace rfp::cli
