#include "qubof/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "qubof/error.hpp"
#include "qubof/rng.hpp"
#include "socket_io.hpp"

namespace qubof::protocol {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(TransportErrorKind kind) {
  switch (kind) {
    case TransportErrorKind::kConnect: return "connect";
    case TransportErrorKind::kTimeout: return "timeout";
    case TransportErrorKind::kClosed: return "closed";
    case TransportErrorKind::kProtocol: return "protocol";
    case TransportErrorKind::kServer: return "server";
    case TransportErrorKind::kPending: return "pending";
  }
  return "unknown";
}

std::string encode_frame(std::string_view payload) {
  require(payload.size() <= kMaxFrameBytes, "encode_frame: payload too large");
  const auto len = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  out.push_back(static_cast<char>((len >> 24) & 0xFF));
  out.push_back(static_cast<char>((len >> 16) & 0xFF));
  out.push_back(static_cast<char>((len >> 8) & 0xFF));
  out.push_back(static_cast<char>(len & 0xFF));
  out.append(payload);
  return out;
}

std::optional<std::string> FrameReader::next() {
  if (buffer_.size() < 4) return std::nullopt;
  const auto* p = reinterpret_cast<const unsigned char*>(buffer_.data());
  const std::size_t len = (std::size_t{p[0]} << 24) | (std::size_t{p[1]} << 16) |
                          (std::size_t{p[2]} << 8) | std::size_t{p[3]};
  if (len > max_frame_) throw ProtocolError("frame_too_large", "frame of " + std::to_string(len) + " bytes");
  if (buffer_.size() < 4 + len) return std::nullopt;
  std::string payload = buffer_.substr(4, len);
  buffer_.erase(0, 4 + len);
  return payload;
}

SolveRequest make_request(const TransmitSet& t, std::string batch_id) {
  SolveRequest r;
  r.batch_id = std::move(batch_id);
  r.radix = t.radix;
  r.kind = MatrixKind::kDigits;
  r.matrices.reserve(t.matrices.size());
  for (const auto& m : t.matrices) r.matrices.push_back(m.to_qubo());
  return r;
}

std::string encode_request(const SolveRequest& r) {
  ordered_json j;
  j["type"] = "solve";
  j["batch_id"] = r.batch_id;
  j["radix"] = r.radix;
  if (r.kind == MatrixKind::kTest) j["mode"] = "test";
  auto arr = ordered_json::array();
  for (const auto& m : r.matrices) {
    if (r.kind == MatrixKind::kTest) {
      arr.push_back(matrix_to_json(m));
      continue;
    }
    ordered_json mj;
    mj["n"] = m.order();
    auto rows = ordered_json::array();
    for (std::size_t i = 0; i < m.order(); ++i) {
      auto row = ordered_json::array();
      for (double v : m.row(i)) row.push_back(static_cast<std::int64_t>(v));
      rows.push_back(std::move(row));
    }
    mj["entries"] = std::move(rows);
    arr.push_back(std::move(mj));
  }
  j["matrices"] = std::move(arr);
  return j.dump();
}

namespace {

json parse_json(std::string_view payload) {
  try {
    return json::parse(payload);
  } catch (const json::parse_error& e) {
    throw ProtocolError("bad_json", e.what());
  }
}

QuboMatrix decode_matrix(const json& mj, MatrixKind kind, int radix, std::size_t slot) {
  const std::string where = "matrix " + std::to_string(slot) + ": ";
  if (!mj.is_object() || !mj.contains("entries") || !mj["entries"].is_array()) {
    throw ProtocolError("bad_request", where + "missing entries");
  }
  const auto& rows = mj["entries"];
  const std::size_t n = rows.size();
  if (n == 0) throw ProtocolError("bad_request", where + "empty matrix");
  if (mj.contains("n") && (!mj["n"].is_number_integer() || mj["n"].get<std::int64_t>() != static_cast<std::int64_t>(n))) {
    throw ProtocolError("bad_request", where + "'n' does not match entries");
  }
  std::vector<double> flat;
  flat.reserve(n * n);
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != n) throw ProtocolError("bad_request", where + "not square");
    for (const auto& v : row) {
      if (kind == MatrixKind::kDigits) {
        if (!v.is_number_integer()) throw ProtocolError("bad_request", where + "digit entries must be integers");
        const auto x = v.get<std::int64_t>();
        if (x < -(radix - 1) || x > radix - 1) {
          throw ProtocolError("entry_out_of_range", where + "entry " + std::to_string(x) + " outside radix bound");
        }
        flat.push_back(static_cast<double>(x));
      } else {
        if (!v.is_number()) throw ProtocolError("bad_request", where + "entries must be numbers");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ProtocolError("bad_request", where + "non-finite entry");
        flat.push_back(x);
      }
    }
  }
  return QuboMatrix(n, std::move(flat));
}

}  // namespace

SolveRequest decode_request(std::string_view payload) {
  const json j = parse_json(payload);
  if (!j.is_object()) throw ProtocolError("bad_request", "request must be a JSON object");
  if (!j.contains("type") || j["type"] != "solve") throw ProtocolError("bad_request", "expected type 'solve'");
  if (!j.contains("batch_id") || !j["batch_id"].is_string()) throw ProtocolError("bad_request", "missing batch_id");
  if (!j.contains("radix") || !j["radix"].is_number_integer() || j["radix"].get<std::int64_t>() < 2 ||
      j["radix"].get<std::int64_t>() > (std::int64_t{1} << 30)) {
    throw ProtocolError("bad_request", "radix must be an integer >= 2");
  }
  if (!j.contains("matrices") || !j["matrices"].is_array()) throw ProtocolError("bad_request", "missing matrices");

  SolveRequest r;
  r.batch_id = j["batch_id"].get<std::string>();
  r.radix = j["radix"].get<int>();
  if (j.contains("mode")) {
    if (j["mode"] != "test") throw ProtocolError("bad_request", "unknown mode");
    r.kind = MatrixKind::kTest;
  }
  const auto& mats = j["matrices"];
  if (mats.empty()) throw ProtocolError("empty_batch", "batch contains no matrices");
  for (std::size_t s = 0; s < mats.size(); ++s) {
    r.matrices.push_back(decode_matrix(mats[s], r.kind, r.radix, s));
    if (r.matrices.back().order() != r.matrices.front().order()) {
      throw ProtocolError("mixed_order", "matrices in a batch must share one order");
    }
  }
  return r;
}

std::string encode_response(const SolveResponse& r) {
  ordered_json j;
  j["type"] = "result";
  j["batch_id"] = r.batch_id;
  auto arr = ordered_json::array();
  for (const auto& v : r.vectors) arr.push_back(std::vector<int>(v.begin(), v.end()));
  j["vectors"] = std::move(arr);
  return j.dump();
}

std::string encode_error(const std::string& code, const std::string& message) {
  ordered_json j;
  j["type"] = "error";
  j["code"] = code;
  j["message"] = message;
  return j.dump();
}

SolveResponse decode_response(std::string_view payload) {
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::parse_error& e) {
    throw TransportError(TransportErrorKind::kProtocol, std::string("unparseable response: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type")) {
    throw TransportError(TransportErrorKind::kProtocol, "response is not a typed object");
  }
  if (j["type"] == "error") {
    const std::string code = j.value("code", std::string("unknown"));
    throw TransportError(TransportErrorKind::kServer, "server error " + code + ": " + j.value("message", std::string()),
                         code);
  }
  if (j["type"] != "result" || !j.contains("vectors") || !j["vectors"].is_array() || !j.contains("batch_id") ||
      !j["batch_id"].is_string()) {
    throw TransportError(TransportErrorKind::kProtocol, "malformed result frame");
  }
  SolveResponse r;
  r.batch_id = j["batch_id"].get<std::string>();
  try {
    for (const auto& v : j["vectors"]) r.vectors.push_back(bits_from_json(v));
  } catch (const ContractViolation& e) {
    throw TransportError(TransportErrorKind::kProtocol, e.what());
  }
  return r;
}

std::uint64_t matrix_seed(const std::string& batch_id, const QuboMatrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(batch_id.data(), batch_id.size());
  const std::uint64_t n = m.order();
  mix(&n, sizeof n);
  for (double v : m.entries()) {
    const double canon = v == 0.0 ? 0.0 : v;  // -0.0 and 0.0 hash alike
    mix(&canon, sizeof canon);
  }
  return derive_seed(h);
}

std::vector<BinaryVector> solve_batch(const SolveRequest& r, const SolverConfig& config) {
  const std::size_t count = r.matrices.size();
  if (count == 0) throw ProtocolError("empty_batch", "batch contains no matrices");
  if (config.strict_exact) {
    for (std::size_t s = 0; s < count; ++s) {
      if (r.matrices[s].order() > config.exact_cap) {
        throw ProtocolError("matrix_too_large", "matrix " + std::to_string(s) + ": order " +
                                                    std::to_string(r.matrices[s].order()) + " exceeds exact cap " +
                                                    std::to_string(config.exact_cap));
      }
    }
  }
  std::vector<BinaryVector> out(count);
  const auto slots = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t s = 0; s < slots; ++s) {
    const auto& m = r.matrices[static_cast<std::size_t>(s)];
    out[static_cast<std::size_t>(s)] =
        m.order() <= config.exact_cap
            ? solve_exact(m, config.exact_cap).bits
            : solve_heuristic(m, config.budget, matrix_seed(r.batch_id, m), config.schedule).bits;
  }
  return out;
}

std::string handle_payload(std::string_view payload, const SolverConfig& config) {
  try {
    const auto request = decode_request(payload);
    return encode_response({request.batch_id, solve_batch(request, config)});
  } catch (const ProtocolError& e) {
    return encode_error(e.code(), e.what());
  } catch (const std::exception& e) {
    return encode_error("internal", e.what());
  }
}

Endpoint Endpoint::parse(const std::string& text) {
  Endpoint ep;
  if (text.rfind("unix:", 0) == 0) {
    ep.kind = Kind::kUnix;
    ep.path = text.substr(5);
    require(!ep.path.empty(), "endpoint: empty unix socket path");
    return ep;
  }
  const auto colon = text.rfind(':');
  require(colon != std::string::npos, "endpoint: expected HOST:PORT or unix:PATH, got '" + text + "'");
  ep.host = text.substr(0, colon);
  if (ep.host.empty()) ep.host = "127.0.0.1";
  const std::string port = text.substr(colon + 1);
  std::size_t used = 0;
  long value = -1;
  try {
    value = std::stol(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == port.size() && value >= 0 && value <= 65535, "endpoint: invalid port '" + port + "'");
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

std::string Endpoint::to_string() const {
  return kind == Kind::kUnix ? "unix:" + path : host + ":" + std::to_string(port);
}

Server::Server(SolverConfig config) : config_(std::move(config)) {}

Server::~Server() { stop(); }

void Server::listen(const Endpoint& endpoint) {
  require(listen_fd_ < 0, "Server::listen: already listening");
  bound_ = endpoint;
  if (endpoint.kind == Endpoint::Kind::kUnix) {
    listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    require(endpoint.path.size() < sizeof(addr.sun_path), "unix socket path too long");
    std::memcpy(addr.sun_path, endpoint.path.c_str(), endpoint.path.size() + 1);
    ::unlink(endpoint.path.c_str());
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw std::runtime_error("bind " + endpoint.to_string() + ": " + std::strerror(errno));
    }
  } else {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = detail::resolve_ipv4(endpoint.host, endpoint.port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw std::runtime_error("bind " + endpoint.to_string() + ": " + std::strerror(errno));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_.port = ntohs(addr.sin_port);
  }
  if (::listen(listen_fd_, 64) != 0) throw std::runtime_error(std::string("listen: ") + std::strerror(errno));
}

void Server::run(const std::atomic<bool>* external_stop) {
  require(listen_fd_ >= 0, "Server::run: call listen() first");
  while (!stopping_.load() && !(external_stop && external_stop->load())) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    std::lock_guard<std::mutex> lock(mu_);
    if (stopping_.load()) {
      ::close(fd);
      break;
    }
    open_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void Server::start() {
  require(!runner_.joinable(), "Server::start: already running");
  runner_ = std::thread([this] { run(); });
}

void Server::stop() {
  stopping_.store(true);
  if (runner_.joinable()) runner_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (bound_.kind == Endpoint::Kind::kUnix) ::unlink(bound_.path.c_str());
  }
}

void Server::serve_connection(int fd) {
  for (;;) {
    std::string header;
    if (detail::read_exact(fd, 4, header, -1) != detail::IoStatus::kOk) break;
    const auto* p = reinterpret_cast<const unsigned char*>(header.data());
    const std::size_t len = (std::size_t{p[0]} << 24) | (std::size_t{p[1]} << 16) |
                            (std::size_t{p[2]} << 8) | std::size_t{p[3]};
    if (len > kMaxFrameBytes) {
      detail::write_all(fd, encode_frame(encode_error("frame_too_large", "frame exceeds limit")), -1);
      break;
    }
    std::string payload;
    if (detail::read_exact(fd, len, payload, -1) != detail::IoStatus::kOk) break;
    const std::string response = handle_payload(payload, config_);
    frames_.fetch_add(1);
    if (detail::write_all(fd, encode_frame(response), -1) != detail::IoStatus::kOk) break;
  }
  std::lock_guard<std::mutex> lock(mu_);
  std::erase(open_fds_, fd);
  ::close(fd);
}

void serve(const Endpoint& endpoint, const SolverConfig& config, const std::atomic<bool>* external_stop) {
  Server server(config);
  server.listen(endpoint);
  server.run(external_stop);
}

void serve_offline(const std::filesystem::path& dir, const SolverConfig& config) {
  std::ifstream in(dir / "request.json", std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + (dir / "request.json").string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string response = handle_payload(ss.str(), config);
  std::ofstream out(dir / "response.json", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (dir / "response.json").string());
  out << response << '\n';
}

}  // namespace qubof::protocol
