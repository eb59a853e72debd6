#pragma once

#include <netinet/in.h>

#include <cstddef>
#include <string>
#include <string_view>

#include "qubof/protocol.hpp"

namespace qubof::protocol::detail {

enum class IoStatus { kOk, kClosed, kTimeout, kError };

/// Appends exactly `count` bytes to `out`. timeout_ms < 0 blocks forever;
/// otherwise the deadline covers the whole read.
IoStatus read_exact(int fd, std::size_t count, std::string& out, int timeout_ms);
IoStatus write_all(int fd, std::string_view bytes, int timeout_ms);

sockaddr_in resolve_ipv4(const std::string& host, std::uint16_t port);

/// Connected stream socket; throws TransportError(kConnect).
int connect_to(const Endpoint& endpoint, int timeout_ms);

}  // namespace qubof::protocol::detail
