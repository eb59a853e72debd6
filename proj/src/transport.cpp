#include "qubof/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "qubof/error.hpp"
#include "qubof/rng.hpp"
#include "socket_io.hpp"

namespace qubof::protocol {

namespace detail {

namespace {

int remaining_ms(std::chrono::steady_clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
  return left.count() < 0 ? 0 : static_cast<int>(left.count());
}

IoStatus wait_for(int fd, short events, int timeout_ms, std::chrono::steady_clock::time_point deadline) {
  if (timeout_ms < 0) return IoStatus::kOk;
  pollfd pfd{fd, events, 0};
  for (;;) {
    const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
    if (rc > 0) return IoStatus::kOk;
    if (rc == 0) return IoStatus::kTimeout;
    if (errno != EINTR) return IoStatus::kError;
  }
}

}  // namespace

IoStatus read_exact(int fd, std::size_t count, std::string& out, int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms < 0 ? 0 : timeout_ms);
  char buf[65536];
  while (count > 0) {
    if (const auto st = wait_for(fd, POLLIN, timeout_ms, deadline); st != IoStatus::kOk) return st;
    const ssize_t got = ::recv(fd, buf, std::min(count, sizeof buf), 0);
    if (got == 0) return IoStatus::kClosed;
    if (got < 0) {
      if (errno == EINTR) continue;
      return errno == ECONNRESET ? IoStatus::kClosed : IoStatus::kError;
    }
    out.append(buf, static_cast<std::size_t>(got));
    count -= static_cast<std::size_t>(got);
  }
  return IoStatus::kOk;
}

IoStatus write_all(int fd, std::string_view bytes, int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms < 0 ? 0 : timeout_ms);
  while (!bytes.empty()) {
    if (const auto st = wait_for(fd, POLLOUT, timeout_ms, deadline); st != IoStatus::kOk) return st;
    const ssize_t sent = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (sent < 0) {
      if (errno == EINTR) continue;
      return (errno == EPIPE || errno == ECONNRESET) ? IoStatus::kClosed : IoStatus::kError;
    }
    bytes.remove_prefix(static_cast<std::size_t>(sent));
  }
  return IoStatus::kOk;
}

sockaddr_in resolve_ipv4(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError(TransportErrorKind::kConnect, "cannot resolve host '" + host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

int connect_to(const Endpoint& endpoint, int timeout_ms) {
  const bool unix_socket = endpoint.kind == Endpoint::Kind::kUnix;
  const int fd = ::socket(unix_socket ? AF_UNIX : AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw TransportError(TransportErrorKind::kConnect, std::string("socket: ") + std::strerror(errno));

  sockaddr_storage storage{};
  socklen_t len = 0;
  if (unix_socket) {
    auto* addr = reinterpret_cast<sockaddr_un*>(&storage);
    addr->sun_family = AF_UNIX;
    if (endpoint.path.size() >= sizeof(addr->sun_path)) {
      ::close(fd);
      throw TransportError(TransportErrorKind::kConnect, "unix socket path too long");
    }
    std::memcpy(addr->sun_path, endpoint.path.c_str(), endpoint.path.size() + 1);
    len = sizeof(sockaddr_un);
  } else {
    sockaddr_in addr;
    try {
      addr = resolve_ipv4(endpoint.host, endpoint.port);
    } catch (...) {
      ::close(fd);
      throw;
    }
    std::memcpy(&storage, &addr, sizeof addr);
    len = sizeof addr;
  }

  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&storage), len);
  if (rc != 0 && errno == EINPROGRESS) {
    pollfd pfd{fd, POLLOUT, 0};
    rc = ::poll(&pfd, 1, timeout_ms < 0 ? -1 : timeout_ms);
    if (rc == 1) {
      int err = 0;
      socklen_t errlen = sizeof err;
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &errlen);
      rc = err == 0 ? 0 : -1;
      errno = err;
    } else {
      if (rc == 0) errno = ETIMEDOUT;
      rc = -1;
    }
  }
  if (rc != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    throw TransportError(TransportErrorKind::kConnect, "connect " + endpoint.to_string() + ": " + why);
  }
  ::fcntl(fd, F_SETFL, flags);
  return fd;
}

}  // namespace detail

std::size_t WireCapture::bytes_sent() const noexcept {
  std::size_t total = 0;
  for (const auto& f : sent) total += f.size();
  return total;
}

std::size_t WireCapture::bytes_received() const noexcept {
  std::size_t total = 0;
  for (const auto& f : received) total += f.size();
  return total;
}

SolveResponse Transport::exchange(const SolveRequest& request) {
  const std::string reply = round_trip(encode_frame(encode_request(request)));
  FrameReader reader;
  reader.feed(reply);
  std::optional<std::string> payload;
  try {
    payload = reader.next();
  } catch (const ProtocolError& e) {
    throw TransportError(TransportErrorKind::kProtocol, e.what());
  }
  if (!payload || reader.buffered() != 0) {
    throw TransportError(TransportErrorKind::kProtocol, "response is not exactly one frame");
  }
  SolveResponse response = decode_response(*payload);
  if (response.batch_id != request.batch_id) {
    throw TransportError(TransportErrorKind::kProtocol, "response batch id does not match request");
  }
  if (response.vectors.size() != request.matrices.size()) {
    throw TransportError(TransportErrorKind::kProtocol, "response has " + std::to_string(response.vectors.size()) +
                                                            " vectors for " +
                                                            std::to_string(request.matrices.size()) + " matrices");
  }
  for (std::size_t s = 0; s < response.vectors.size(); ++s) {
    if (response.vectors[s].size() != request.matrices[s].order()) {
      throw TransportError(TransportErrorKind::kProtocol, "response vector length mismatch");
    }
  }
  return response;
}

std::string SocketTransport::round_trip(const std::string& request_frame) {
  const int fd = detail::connect_to(endpoint_, timeout_ms_);
  auto fail = [fd](TransportErrorKind kind, const std::string& what) {
    ::close(fd);
    throw TransportError(kind, what);
  };
  using detail::IoStatus;
  if (const auto st = detail::write_all(fd, request_frame, timeout_ms_); st != IoStatus::kOk) {
    fail(st == IoStatus::kTimeout ? TransportErrorKind::kTimeout : TransportErrorKind::kClosed,
         "failed to send request");
  }
  if (capture_) capture_->sent.push_back(request_frame);

  std::string reply;
  auto st = detail::read_exact(fd, 4, reply, timeout_ms_);
  if (st == IoStatus::kOk) {
    const auto* p = reinterpret_cast<const unsigned char*>(reply.data());
    const std::size_t len = (std::size_t{p[0]} << 24) | (std::size_t{p[1]} << 16) |
                            (std::size_t{p[2]} << 8) | std::size_t{p[3]};
    if (len > kMaxFrameBytes) fail(TransportErrorKind::kProtocol, "response frame too large");
    st = detail::read_exact(fd, len, reply, timeout_ms_);
  }
  if (st == IoStatus::kTimeout) fail(TransportErrorKind::kTimeout, "timed out waiting for response");
  if (st != IoStatus::kOk) fail(TransportErrorKind::kClosed, "connection closed before a complete response");
  ::close(fd);
  if (capture_) {
    capture_->received.push_back(reply);
    ++capture_->round_trips;
  }
  return reply;
}

std::string LoopbackTransport::round_trip(const std::string& request_frame) {
  FrameReader reader;
  reader.feed(request_frame);
  const auto payload = reader.next();
  require(payload.has_value(), "loopback: incomplete request frame");
  std::string reply = encode_frame(handle_payload(*payload, config_));
  if (capture_) {
    capture_->sent.push_back(request_frame);
    capture_->received.push_back(reply);
    ++capture_->round_trips;
  }
  return reply;
}

std::string OfflineTransport::round_trip(const std::string& request_frame) {
  FrameReader reader;
  reader.feed(request_frame);
  const std::string payload = *reader.next();
  const auto response_path = dir_ / "response.json";
  if (std::filesystem::exists(response_path)) {
    std::ifstream in(response_path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string body = ss.str();
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    return encode_frame(body);
  }
  std::filesystem::create_directories(dir_);
  std::ofstream out(dir_ / "request.json", std::ios::binary | std::ios::trunc);
  if (!out) throw TransportError(TransportErrorKind::kConnect, "cannot write " + (dir_ / "request.json").string());
  out << payload << '\n';
  throw TransportError(TransportErrorKind::kPending,
                       "request written to " + (dir_ / "request.json").string() + "; awaiting response.json");
}

std::vector<BinaryVector> submit(Transport& transport, const TransmitSet& t, const std::string& batch_id) {
  return transport.exchange(make_request(t, batch_id)).vectors;
}

std::vector<BinaryVector> submit(const Endpoint& endpoint, const TransmitSet& t, const std::string& batch_id,
                                 int timeout_ms) {
  SocketTransport transport(endpoint, timeout_ms);
  return submit(transport, t, batch_id);
}

std::string batch_id_for(std::uint64_t seed) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "b%016llx", static_cast<unsigned long long>(derive_seed(seed, 3)));
  return buf;
}

ProtocolRun run_protocol(const QuboMatrix& q, ObfuscationParams params, std::size_t samples, Transport& transport,
                         std::uint64_t seed, std::optional<WeightVector> weights) {
  params.seed = derive_seed(seed, 1);
  auto [transmit, secret] = obfuscate(q, params);
  ProtocolRun run;
  run.batch_id = batch_id_for(seed);
  run.answers = submit(transport, transmit, run.batch_id);
  RecoverOptions opts;
  opts.samples = samples;
  opts.weights = std::move(weights);
  opts.seed = derive_seed(seed, 2);
  run.solution = recover(run.answers, secret, q, opts);
  run.transmit = std::move(transmit);
  run.secret = std::move(secret);
  return run;
}

}  // namespace qubof::protocol
