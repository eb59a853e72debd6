#pragma once

// Client side of the protocol: transports that carry one SolveRequest to a
// solver and bring back its SolveResponse, plus the end-to-end client flow.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qubof/obfuscation.hpp"
#include "qubof/protocol.hpp"
#include "qubof/reconstruction.hpp"

namespace qubof::protocol {

/// Every frame that crossed the boundary, as raw bytes including the length
/// prefix.
struct WireCapture {
  std::vector<std::string> sent;
  std::vector<std::string> received;
  std::size_t round_trips = 0;

  std::size_t bytes_sent() const noexcept;
  std::size_t bytes_received() const noexcept;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// One round trip. The response is checked against the request (batch id,
  /// vector count, vector lengths); any failure throws TransportError and
  /// no partial result is returned.
  SolveResponse exchange(const SolveRequest& request);

 protected:
  virtual std::string round_trip(const std::string& request_frame) = 0;
};

class SocketTransport final : public Transport {
 public:
  explicit SocketTransport(Endpoint endpoint, int timeout_ms = 120000, WireCapture* capture = nullptr)
      : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms), capture_(capture) {}

 protected:
  std::string round_trip(const std::string& request_frame) override;

 private:
  Endpoint endpoint_;
  int timeout_ms_;
  WireCapture* capture_;
};

/// Runs the solver service in-process on the encoded frames; behaves like a
/// socket round trip without the socket.
class LoopbackTransport final : public Transport {
 public:
  explicit LoopbackTransport(SolverConfig config = {}, WireCapture* capture = nullptr)
      : config_(std::move(config)), capture_(capture) {}

 protected:
  std::string round_trip(const std::string& request_frame) override;

 private:
  SolverConfig config_;
  WireCapture* capture_;
};

/// File exchange for air-gapped solving: writes DIR/request.json and throws
/// TransportError(kPending) until DIR/response.json for the same batch exists.
class OfflineTransport final : public Transport {
 public:
  explicit OfflineTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}

 protected:
  std::string round_trip(const std::string& request_frame) override;

 private:
  std::filesystem::path dir_;
};

/// Sends t as one batch; vectors come back in slot order.
std::vector<BinaryVector> submit(Transport& transport, const TransmitSet& t, const std::string& batch_id);
std::vector<BinaryVector> submit(const Endpoint& endpoint, const TransmitSet& t, const std::string& batch_id,
                                 int timeout_ms = 120000);

/// Batch id sent for a protocol run with this seed.
std::string batch_id_for(std::uint64_t seed);

struct ProtocolRun {
  SolutionVector solution;
  std::string batch_id;
  TransmitSet transmit;
  ObfuscationSecret secret;
  std::vector<BinaryVector> answers;
};

/// obfuscate -> submit -> recover. `seed` fixes everything: the obfuscation
/// seed (replacing params.seed), the sampling seed and the batch id are all
/// derived from it.
ProtocolRun run_protocol(const QuboMatrix& q, ObfuscationParams params, std::size_t samples, Transport& transport,
                         std::uint64_t seed, std::optional<WeightVector> weights = std::nullopt);

}  // namespace qubof::protocol
