#pragma once

// Structural scan of captured request frames for anything derived from an
// ObfuscationSecret. Returns an empty string when clean, else a reason.

#include <cstdio>
#include <set>
#include <string>

#include "json.hpp"
#include "qubof/obfuscation.hpp"
#include "qubof/protocol.hpp"

namespace qubof::testing {

inline std::string json_array(std::span<const std::size_t> v, std::size_t offset) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i] + offset);
  return s + "]";
}

inline std::string scan_request_frame(const std::string& frame, const ObfuscationSecret& secret) {
  protocol::FrameReader reader;
  reader.feed(frame);
  const auto payload = reader.next();
  if (!payload || reader.buffered() != 0) return "not exactly one frame";

  const auto j = nlohmann::json::parse(*payload);
  const std::set<std::string> top{"type", "batch_id", "radix", "matrices"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!top.count(it.key())) return "unexpected top-level key " + it.key();
  for (const auto& m : j["matrices"]) {
    for (auto it = m.begin(); it != m.end(); ++it)
      if (it.key() != "n" && it.key() != "entries") return "unexpected matrix key " + it.key();
    for (const auto& row : m["entries"])
      for (const auto& v : row)
        if (!v.is_number_integer()) return "non-integer entry";
  }

  std::set<std::string> needles;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", secret.scale);
  needles.insert(buf);
  needles.insert(nlohmann::json(secret.scale).dump());
  needles.insert(std::to_string(secret.params.seed));
  for (const auto& s : secret.sigmas) {
    needles.insert(json_array(s.images(), 0));
    needles.insert(json_array(s.images(), 1));
  }
  needles.insert(json_array(secret.send_order.images(), 0));
  needles.insert(json_array(secret.send_order.images(), 1));
  if (!secret.decoy_slots.empty()) {
    needles.insert(json_array(secret.decoy_slots, 0));
    needles.insert(json_array(secret.decoy_slots, 1));
  }
  for (const auto& n : needles)
    if (payload->find(n) != std::string::npos) return "secret-derived text " + n;
  return {};
}

}  // namespace qubof::testing
