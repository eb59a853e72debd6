#pragma once

// Wire protocol between the client and the solver service.
//
// Frame: 4-byte big-endian payload length, then UTF-8 JSON.
//   request  {"type":"solve","batch_id":str,"radix":int,
//             "matrices":[{"n":int,"entries":[[int]]}]}
//            test mode adds "mode":"test" and allows real entries
//   response {"type":"result","batch_id":str,"vectors":[[0|1,...]]}
//            {"type":"error","code":str,"message":str}

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "qubof/obfuscation.hpp"
#include "qubof/qubo.hpp"

namespace qubof::protocol {

inline constexpr std::size_t kMaxFrameBytes = std::size_t{256} << 20;

/// Malformed or rejected message; `code` is the wire error code.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

enum class TransportErrorKind { kConnect, kTimeout, kClosed, kProtocol, kServer, kPending };

std::string to_string(TransportErrorKind kind);

class TransportError : public std::runtime_error {
 public:
  TransportError(TransportErrorKind kind, const std::string& message, std::string code = {})
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}
  TransportErrorKind kind() const noexcept { return kind_; }
  /// Server error code for kServer, empty otherwise.
  const std::string& code() const noexcept { return code_; }

 private:
  TransportErrorKind kind_;
  std::string code_;
};

std::string encode_frame(std::string_view payload);

/// Incremental frame splitter for a byte stream.
class FrameReader {
 public:
  explicit FrameReader(std::size_t max_frame = kMaxFrameBytes) : max_frame_(max_frame) {}
  void feed(std::string_view bytes) { buffer_.append(bytes); }
  /// Next complete payload; throws ProtocolError("frame_too_large").
  std::optional<std::string> next();
  std::size_t buffered() const noexcept { return buffer_.size(); }

 private:
  std::size_t max_frame_;
  std::string buffer_;
};

enum class MatrixKind { kDigits, kTest };

struct SolveRequest {
  std::string batch_id;
  int radix = 2;
  MatrixKind kind = MatrixKind::kDigits;
  std::vector<QuboMatrix> matrices;
};

struct SolveResponse {
  std::string batch_id;
  std::vector<BinaryVector> vectors;
};

SolveRequest make_request(const TransmitSet& t, std::string batch_id);

std::string encode_request(const SolveRequest& r);
/// Throws ProtocolError with the wire code on any malformation.
SolveRequest decode_request(std::string_view payload);

std::string encode_response(const SolveResponse& r);
std::string encode_error(const std::string& code, const std::string& message);
/// Throws TransportError(kServer) for error frames, kProtocol for garbage.
SolveResponse decode_response(std::string_view payload);

struct SolverConfig {
  std::size_t exact_cap = kDefaultExactLimit;
  std::uint64_t budget = 2000;  // annealing sweeps for matrices above the cap
  bool strict_exact = false;    // refuse instead of annealing above the cap
  AnnealSchedule schedule;
};

/// Per-matrix seed: depends on the batch id and the matrix contents only, so
/// identical matrices get identical answers and slot order does not matter.
std::uint64_t matrix_seed(const std::string& batch_id, const QuboMatrix& m);

/// Solves every matrix independently, output in request order.
std::vector<BinaryVector> solve_batch(const SolveRequest& r, const SolverConfig& config);

/// Full request-to-response step; never throws, errors become error frames.
std::string handle_payload(std::string_view payload, const SolverConfig& config);

/// "HOST:PORT" (TCP) or "unix:PATH".
struct Endpoint {
  enum class Kind { kTcp, kUnix };
  Kind kind = Kind::kTcp;
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string path;

  static Endpoint parse(const std::string& text);
  std::string to_string() const;
};

/// Stream-socket solver service. One thread per connection; each connection
/// handles one frame at a time.
class Server {
 public:
  explicit Server(SolverConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and listens. TCP port 0 picks a free port, see endpoint().
  void listen(const Endpoint& endpoint);
  Endpoint endpoint() const { return bound_; }

  /// Accept loop; returns after stop() or once *external_stop becomes true.
  void run(const std::atomic<bool>* external_stop = nullptr);
  /// run() on a background thread.
  void start();
  void stop();

  std::uint64_t frames_handled() const noexcept { return frames_.load(); }

 private:
  void serve_connection(int fd);

  SolverConfig config_;
  Endpoint bound_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> frames_{0};
  std::thread runner_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::vector<int> open_fds_;
};

/// Blocking call to serve() until shutdown; used by the CLI.
void serve(const Endpoint& endpoint, const SolverConfig& config,
           const std::atomic<bool>* external_stop = nullptr);

/// Reads DIR/request.json, writes DIR/response.json.
void serve_offline(const std::filesystem::path& dir, const SolverConfig& config);

}  // namespace qubof::protocol
