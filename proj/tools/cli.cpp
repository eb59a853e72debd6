#include "cli.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qubof/error.hpp"
#include "qubof/experiments.hpp"
#include "qubof/obfuscation.hpp"
#include "qubof/privacy.hpp"
#include "qubof/protocol.hpp"
#include "qubof/qubo.hpp"
#include "qubof/reconstruction.hpp"
#include "qubof/transport.hpp"

namespace qubof::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPending = 3;

class CliError : public std::runtime_error {
 public:
  CliError(std::string code, const std::string& message) : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop.store(true); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError("io", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw CliError("bad_json", path.string() + ": " + e.what());
  }
}

std::string pretty(const ordered_json& j) { return j.dump(2) + "\n"; }

void write_file(const fs::path& path, const std::string& body, bool secret = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const int mode = secret ? 0600 : 0644;
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, mode);
  if (fd < 0) throw CliError("io", "cannot write " + path.string());
  // An existing file keeps its old mode through O_CREAT; force it.
  if (secret) ::fchmod(fd, 0600);
  std::size_t done = 0;
  while (done < body.size()) {
    const ssize_t w = ::write(fd, body.data() + done, body.size() - done);
    if (w <= 0) {
      ::close(fd);
      throw CliError("io", "short write to " + path.string());
    }
    done += static_cast<std::size_t>(w);
  }
  if (::close(fd) != 0) throw CliError("io", "cannot close " + path.string());
}

void emit(std::ostream& out, const std::string& dest, const std::string& body) {
  if (dest.empty() || dest == "-") {
    out << body;
    out.flush();
  } else {
    write_file(dest, body);
  }
}

std::uint64_t parse_seed_text(const std::string& text, const char* source) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-')
    throw CliError("usage", std::string(source) + ": expected an unsigned 64-bit integer, got '" + text + "'");
  return v;
}

// --seed, then QUBOF_SEED, then fresh entropy.
std::uint64_t resolve_seed(const std::optional<std::string>& flag) {
  if (flag) return parse_seed_text(*flag, "--seed");
  if (const char* env = std::getenv("QUBOF_SEED"); env && *env) return parse_seed_text(env, "QUBOF_SEED");
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

QuboMatrix load_matrix(const std::string& path) { return matrix_from_json(read_json(path)); }

std::vector<BinaryVector> load_vectors(const std::string& path) {
  const json j = read_json(path);
  if (j.is_object() && j.value("type", "") == "error")
    throw CliError("server_error", j.value("code", std::string("unknown")) + ": " + j.value("message", ""));
  const json* arr = nullptr;
  if (j.is_object() && j.contains("vectors")) arr = &j["vectors"];
  if (j.is_array()) arr = &j;
  if (!arr || !arr->is_array()) throw CliError("bad_request", path + ": expected {\"vectors\": [[0/1, ...]]}");
  std::vector<BinaryVector> out;
  for (const auto& v : *arr) out.push_back(bits_from_json(v));
  return out;
}

struct SolverFlags {
  std::size_t exact_cap = kDefaultExactLimit;
  std::uint64_t budget = 2000;
  bool strict = false;

  protocol::SolverConfig config() const {
    protocol::SolverConfig c;
    c.exact_cap = exact_cap;
    c.budget = budget;
    c.strict_exact = strict;
    return c;
  }
};

void add_solver_flags(CLI::App* app, SolverFlags& f) {
  app->add_option("--exact-cap", f.exact_cap, "Largest order solved by exhaustive search")
      ->check(CLI::Range(std::size_t{1}, std::size_t{kMaxExactOrder}));
  app->add_option("--budget", f.budget, "Annealing sweeps for matrices above the exact cap")
      ->check(CLI::PositiveNumber);
}

struct ParamFlags {
  int radix = 4;
  int digits = 5;
  std::size_t decoys = 0;
  double epsilon = 1e-9;
  std::string decoy_mode = "sign-pattern";

  ObfuscationParams params(std::uint64_t seed) const {
    ObfuscationParams p;
    p.radix = radix;
    p.digits = digits;
    p.decoys = decoys;
    p.epsilon = epsilon;
    p.seed = seed;
    p.decoy_mode = decoy_mode_from_string(decoy_mode);
    p.validate();
    return p;
  }
};

void add_param_flags(CLI::App* app, ParamFlags& f, bool with_decoys = true) {
  app->add_option("--radix,-r", f.radix, "Digit base r (>= 2)");
  app->add_option("--digits,-k", f.digits, "Number of digit matrices k");
  if (with_decoys) {
    app->add_option("--decoys,-d", f.decoys, "Number of decoy matrices");
    app->add_option("--decoy-mode", f.decoy_mode, "Decoy generator")
        ->check(CLI::IsMember({"sign-pattern", "uniform"}));
  }
  app->add_option("--epsilon", f.epsilon, "Normalization headroom");
}

std::unique_ptr<protocol::Transport> make_transport(const std::string& endpoint, const std::string& offline,
                                                    const SolverFlags& solver, int timeout_ms) {
  if (!offline.empty()) return std::make_unique<protocol::OfflineTransport>(offline);
  if (endpoint == "inproc") return std::make_unique<protocol::LoopbackTransport>(solver.config());
  return std::make_unique<protocol::SocketTransport>(protocol::Endpoint::parse(endpoint), timeout_ms);
}

std::string json_error(const std::string& code, const std::string& message) {
  ordered_json j;
  j["error"] = code;
  j["message"] = message;
  return j.dump() + "\n";
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"qubof: outsource QUBO problems without revealing the model matrix"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::optional<std::string> seed_flag;
  auto add_seed = [&seed_flag](CLI::App* sub) {
    sub->add_option("--seed,-s", seed_flag, "Seed for all randomness (falls back to QUBOF_SEED)");
  };

  // obfuscate
  auto* obf = app.add_subcommand("obfuscate", "Split, permute and shuffle a matrix into transmit.json and secret.json");
  std::string obf_matrix, obf_out = ".";
  ParamFlags obf_params;
  obf->add_option("--matrix,-m", obf_matrix, "Matrix JSON {\"n\", \"entries\"}")->required();
  obf->add_option("--out-dir,-o", obf_out, "Directory for transmit.json and secret.json");
  add_param_flags(obf, obf_params);
  add_seed(obf);

  // recover
  auto* rec = app.add_subcommand("recover", "Rebuild a solution from the solver's vectors and the secret");
  std::string rec_vectors, rec_secret, rec_matrix, rec_out;
  std::size_t rec_samples = 200;
  bool rec_reference = false;
  rec->add_option("--vectors,-v", rec_vectors, "Solver response or {\"vectors\": [...]}")->required();
  rec->add_option("--secret", rec_secret, "secret.json written by obfuscate")->required();
  rec->add_option("--matrix,-m", rec_matrix, "Original matrix JSON")->required();
  rec->add_option("--samples,-t", rec_samples, "Bernoulli candidates")->check(CLI::PositiveNumber);
  rec->add_option("--out,-o", rec_out, "Solution file (stdout when omitted)");
  rec->add_flag("--reference-exact", rec_reference, "Add acc_vs against the exact optimum");
  add_seed(rec);

  // solve
  auto* sol = app.add_subcommand("solve", "Obfuscate, send to a solver, recover: the whole client flow");
  std::string sol_matrix, sol_endpoint = "127.0.0.1:7878", sol_offline, sol_out;
  ParamFlags sol_params;
  SolverFlags sol_solver;
  std::size_t sol_samples = 200;
  int sol_timeout = 120000;
  sol->add_option("--matrix,-m", sol_matrix, "Matrix JSON {\"n\", \"entries\"}")->required();
  add_param_flags(sol, sol_params);
  sol->add_option("--samples,-t", sol_samples, "Bernoulli candidates")->check(CLI::PositiveNumber);
  sol->add_option("--endpoint,-e", sol_endpoint, "HOST:PORT, unix:PATH, or inproc for an in-process solver");
  sol->add_option("--offline", sol_offline,
                  "Exchange files in DIR instead: the first run writes request.json and exits 3, "
                  "rerun with the same seed once response.json exists");
  sol->add_option("--timeout-ms", sol_timeout, "Socket timeout")->check(CLI::PositiveNumber);
  sol->add_option("--out,-o", sol_out, "Solution file (stdout when omitted)");
  add_solver_flags(sol, sol_solver);
  add_seed(sol);

  // serve
  auto* srv = app.add_subcommand("serve", "Run the stand-in solver service");
  std::string srv_listen = "127.0.0.1:7878", srv_offline;
  SolverFlags srv_solver;
  srv->add_option("--listen,-l", srv_listen, "HOST:PORT (port 0 picks one) or unix:PATH");
  add_solver_flags(srv, srv_solver);
  srv->add_flag("--strict", srv_solver.strict, "Reject matrices above the exact cap instead of annealing");
  srv->add_option("--offline", srv_offline, "Answer DIR/request.json into DIR/response.json and exit");

  // privacy
  auto* prv = app.add_subcommand("privacy", "Automorphism count, recovery probability and digit uniformity");
  std::string prv_matrix, prv_out;
  ParamFlags prv_params;
  std::size_t prv_cap = kDefaultAutomorphismCap;
  prv->add_option("--matrix,-m", prv_matrix, "Matrix JSON")->required();
  add_param_flags(prv, prv_params, false);
  prv->add_option("--cap", prv_cap, "Largest order for exact automorphism counting")
      ->check(CLI::Range(std::size_t{1}, kMaxAutomorphismOrder));
  prv->add_option("--out,-o", prv_out, "Report file (stdout when omitted)");

  // bench
  auto* bch = app.add_subcommand("bench", "Accuracy sweep over a parameter grid");
  std::vector<std::string> bch_grid;
  std::size_t bch_trials = 20, bch_decoys = 0;
  std::string bch_out = "results.csv", bch_endpoint = "inproc";
  SolverFlags bch_solver;
  std::uint64_t bch_reference_budget = 20000;
  double bch_mean = 0.0, bch_stddev = 4.0;
  bool bch_no_timing = false;
  bch->add_option("--grid,-g", bch_grid, "Axes such as n=8:22:2 k=1:8 r=2,4,8,10 t=50,100,200,300")
      ->required()
      ->expected(1, 4);
  bch->add_option("--trials", bch_trials, "Matrices per cell")->check(CLI::PositiveNumber);
  bch->add_option("--out,-o", bch_out, "CSV path; the summary goes next to it as .summary.json");
  bch->add_option("--endpoint,-e", bch_endpoint, "Solver endpoint or inproc");
  bch->add_option("--decoys,-d", bch_decoys, "Decoys per run");
  bch->add_option("--mean", bch_mean, "Entry mean of generated matrices");
  bch->add_option("--stddev", bch_stddev, "Entry standard deviation of generated matrices")
      ->check(CLI::PositiveNumber);
  bch->add_option("--reference-budget", bch_reference_budget, "Annealing sweeps for truth above the exact cap");
  bch->add_flag("--no-timing", bch_no_timing, "Write 0 in the ms column so reruns are byte-identical");
  add_solver_flags(bch, bch_solver);
  add_seed(bch);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json_error("usage", e.what());
    return kExitUsage;
  }

  try {
    if (obf->parsed()) {
      const auto q = load_matrix(obf_matrix);
      const auto params = obf_params.params(resolve_seed(seed_flag));
      const auto [transmit, secret] = obfuscate(q, params);
      const std::string payload = pretty(transmit_to_json(transmit));
      write_file(fs::path(obf_out) / "transmit.json", payload);
      write_file(fs::path(obf_out) / "secret.json", pretty(secret_to_json(secret)), true);
      ordered_json summary;
      summary["n"] = q.order();
      summary["k"] = params.digits;
      summary["radix"] = params.radix;
      summary["decoys"] = params.decoys;
      summary["matrices"] = transmit.matrices.size();
      summary["payload_bytes"] = payload.size();
      out << pretty(summary);
    } else if (rec->parsed()) {
      const auto q = load_matrix(rec_matrix);
      const auto secret = secret_from_json(read_json(rec_secret));
      const auto vectors = load_vectors(rec_vectors);
      RecoverOptions opts;
      opts.samples = rec_samples;
      opts.seed = resolve_seed(seed_flag);
      const auto s = recover(vectors, secret, q, opts);
      auto j = solution_to_json(s);
      if (rec_reference) {
        const double truth = solve_exact(q).value;
        j["acc_vs"] = truth == 0.0 ? ordered_json(nullptr) : ordered_json(s.value / truth);
      }
      emit(out, rec_out, pretty(j));
    } else if (sol->parsed()) {
      const auto q = load_matrix(sol_matrix);
      const std::uint64_t seed = resolve_seed(seed_flag);
      const auto params = sol_params.params(0);
      auto transport = make_transport(sol_endpoint, sol_offline, sol_solver, sol_timeout);
      const auto result = protocol::run_protocol(q, params, sol_samples, *transport, seed);
      auto j = solution_to_json(result.solution);
      j["batch_id"] = result.batch_id;
      emit(out, sol_out, pretty(j));
    } else if (srv->parsed()) {
      const auto config = srv_solver.config();
      if (!srv_offline.empty()) {
        if (!fs::exists(fs::path(srv_offline) / "request.json"))
          throw CliError("io", "no request.json in " + srv_offline);
        protocol::serve_offline(srv_offline, config);
        return 0;
      }
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::signal(SIGPIPE, SIG_IGN);
      protocol::Server server(config);
      server.listen(protocol::Endpoint::parse(srv_listen));
      ordered_json ready;
      ready["listening"] = server.endpoint().to_string();
      out << ready.dump() << std::endl;
      server.run(&g_stop);
    } else if (prv->parsed()) {
      const auto q = load_matrix(prv_matrix);
      const auto report = privacy_report(q, prv_params.params(0), prv_cap);
      emit(out, prv_out, pretty(privacy_report_to_json(report)));
    } else if (bch->parsed()) {
      experiments::Grid grid;
      grid.n = {16};
      grid.k = {5};
      grid.r = {4};
      grid.t = {300};
      for (const auto& axis : bch_grid) experiments::parse_axis(axis, grid);
      experiments::RunSettings settings;
      settings.mean = bch_mean;
      settings.stddev = bch_stddev;
      settings.decoys = bch_decoys;
      settings.base_seed = resolve_seed(seed_flag);
      settings.exact_cap = bch_solver.exact_cap;
      settings.reference_budget = bch_reference_budget;
      const std::string endpoint = bch_endpoint;
      const SolverFlags solver = bch_solver;
      settings.transport = [endpoint, solver]() { return make_transport(endpoint, "", solver, 600000); };
      const auto records = experiments::run_grid(grid, bch_trials, settings);
      std::ostringstream csv;
      experiments::write_csv(csv, records, !bch_no_timing);
      write_file(bch_out, csv.str());
      fs::path summary_path(bch_out);
      summary_path.replace_extension(".summary.json");
      write_file(summary_path, pretty(experiments::summary_to_json(experiments::aggregate(records))));
      ordered_json done;
      done["records"] = records.size();
      done["csv"] = bch_out;
      done["summary"] = summary_path.string();
      out << pretty(done);
    }
    return 0;
  } catch (const CliError& e) {
    err << json_error(e.code(), e.what());
    return e.code() == "usage" ? kExitUsage : kExitError;
  } catch (const protocol::TransportError& e) {
    const std::string code = e.kind() == protocol::TransportErrorKind::kServer && !e.code().empty()
                                 ? e.code()
                                 : "transport_" + protocol::to_string(e.kind());
    err << json_error(code, e.what());
    return e.kind() == protocol::TransportErrorKind::kPending ? kExitPending : kExitError;
  } catch (const protocol::ProtocolError& e) {
    err << json_error(e.code(), e.what());
  } catch (const DegenerateInput& e) {
    err << json_error("degenerate_input", e.what());
  } catch (const SizeLimitError& e) {
    err << json_error("size_limit", e.what());
  } catch (const ContractViolation& e) {
    err << json_error("invalid_input", e.what());
  } catch (const nlohmann::json::exception& e) {
    err << json_error("bad_json", e.what());
  } catch (const std::exception& e) {
    err << json_error("internal", e.what());
  }
  return kExitError;
}

}  // namespace qubof::cli
