#include "qubof/obfuscation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qubof/error.hpp"
#include "qubof/rng.hpp"

namespace qubof {

namespace {

// r^k, or 0 when it does not fit in 64 bits.
std::uint64_t checked_power(int radix, int count) {
  unsigned __int128 acc = 1;
  for (int i = 0; i < count; ++i) {
    acc *= static_cast<unsigned>(radix);
    if (acc > std::numeric_limits<std::uint64_t>::max()) return 0;
  }
  return static_cast<std::uint64_t>(acc);
}

void check_radix_count(int radix, int count) {
  require(radix >= 2, "radix must be at least 2");
  require(count >= 1, "digit count must be at least 1");
  require(checked_power(radix, count) != 0, "radix^digits must fit in 64 bits");
}

}  // namespace

std::string to_string(DecoyMode mode) {
  return mode == DecoyMode::kUniform ? "uniform" : "sign-pattern";
}

DecoyMode decoy_mode_from_string(const std::string& s) {
  if (s == "uniform") return DecoyMode::kUniform;
  if (s == "sign-pattern") return DecoyMode::kSignPattern;
  throw ContractViolation("unknown decoy mode '" + s + "'");
}

void ObfuscationParams::validate() const {
  check_radix_count(radix, digits);
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
}

QuboMatrix IntMatrix::to_qubo() const {
  return QuboMatrix(n, std::vector<double>(entries.begin(), entries.end()));
}

std::size_t ObfuscationSecret::slot_of_digit(int m) const {
  require(m >= 1 && static_cast<std::size_t>(m) <= sigmas.size(), "slot_of_digit: position out of range");
  for (std::size_t s = 0; s < send_order.size(); ++s) {
    if (send_order(s) == static_cast<std::size_t>(m - 1)) return s;
  }
  throw ContractViolation("slot_of_digit: send order does not contain digit");
}

bool ObfuscationSecret::is_decoy_slot(std::size_t slot) const {
  return std::binary_search(decoy_slots.begin(), decoy_slots.end(), slot);
}

void ObfuscationSecret::validate() const {
  params.validate();
  const auto k = static_cast<std::size_t>(params.digits);
  require(scale > 0.0 && std::isfinite(scale), "secret: scale must be positive");
  require(sigmas.size() == k, "secret: expected one permutation per digit matrix");
  for (const auto& s : sigmas) require(s.size() == n, "secret: permutation size differs from order");
  require(send_order.size() == k + params.decoys, "secret: send order covers wrong slot count");
  require(decoy_slots.size() == params.decoys, "secret: decoy slot count mismatch");
  for (std::size_t s = 0; s < send_order.size(); ++s) {
    require((send_order(s) >= k) == is_decoy_slot(s), "secret: decoy slots disagree with send order");
  }
}

NormalizedMatrix normalize(const QuboMatrix& q, double epsilon) {
  require(epsilon > 0.0 && std::isfinite(epsilon), "normalize: epsilon must be positive");
  const double peak = q.max_abs();
  if (peak == 0.0) throw DegenerateInput("normalize: all-zero model matrix has a constant objective");
  const double scale = (1.0 + epsilon) * peak;
  std::vector<double> out(q.entries().begin(), q.entries().end());
  for (auto& v : out) {
    v /= scale;
    require(std::abs(v) < 1.0, "normalize: epsilon too small to keep entries inside (-1, 1)");
  }
  return {QuboMatrix(q.order(), std::move(out)), scale};
}

std::vector<int> fractional_digits(double v, int radix, int count) {
  check_radix_count(radix, count);
  require(std::isfinite(v) && std::abs(v) < 1.0, "fractional_digits: |v| must be below 1");
  std::vector<int> out(static_cast<std::size_t>(count), 0);
  const double mag = std::abs(v);
  if (mag == 0.0) return out;

  // mag = mantissa * 2^(exponent - 53) exactly, exponent <= 0.
  int exponent = 0;
  const double frac = std::frexp(mag, &exponent);
  const auto mantissa = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  const int shift = 53 - exponent;
  const unsigned __int128 scaled =
      static_cast<unsigned __int128>(mantissa) * checked_power(radix, count);
  unsigned __int128 truncated = shift >= 128 ? 0 : scaled >> shift;

  const int sign = v < 0 ? -1 : 1;
  for (int m = count; m >= 1; --m) {
    out[static_cast<std::size_t>(m - 1)] = sign * static_cast<int>(truncated % static_cast<unsigned>(radix));
    truncated /= static_cast<unsigned>(radix);
  }
  return out;
}

std::vector<DigitMatrix> digit_split(const QuboMatrix& qstar, int radix, int count) {
  check_radix_count(radix, count);
  const std::size_t n = qstar.order();
  std::vector<DigitMatrix> out(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) {
    auto& dm = out[static_cast<std::size_t>(m)];
    dm.radix = radix;
    dm.position = m + 1;
    dm.digits.n = n;
    dm.digits.entries.assign(n * n, 0);
  }
  const auto values = qstar.entries();
  for (std::size_t e = 0; e < values.size(); ++e) {
    const auto d = fractional_digits(values[e], radix, count);
    for (int m = 0; m < count; ++m) {
      out[static_cast<std::size_t>(m)].digits.entries[e] = d[static_cast<std::size_t>(m)];
    }
  }
  return out;
}

IntMatrix permute_matrix(const IntMatrix& m, const Permutation& sigma) {
  require(sigma.size() == m.n, "permute_matrix: permutation size differs from matrix order");
  IntMatrix out{m.n, std::vector<std::int32_t>(m.entries.size())};
  for (std::size_t i = 0; i < m.n; ++i) {
    const std::size_t si = sigma(i);
    for (std::size_t j = 0; j < m.n; ++j) out.entries[i * m.n + j] = m(si, sigma(j));
  }
  return out;
}

DigitMatrix permute_matrix(const DigitMatrix& m, const Permutation& sigma) {
  return {permute_matrix(m.digits, sigma), m.radix, m.position};
}

DigitMatrix make_decoy(std::size_t n, int radix, std::uint64_t seed) {
  require(n >= 1 && radix >= 2, "make_decoy: need n >= 1 and radix >= 2");
  Rng rng(seed);
  DigitMatrix out{IntMatrix{n, std::vector<std::int32_t>(n * n)}, radix, 0};
  for (auto& e : out.digits.entries) e = static_cast<std::int32_t>(rng.uniform_int(-(radix - 1), radix - 1));
  return out;
}

DigitMatrix make_decoy(std::size_t n, int radix, std::uint64_t seed, const SignMatrix& pattern) {
  require(n >= 1 && radix >= 2, "make_decoy: need n >= 1 and radix >= 2");
  require(pattern.n == n, "make_decoy: sign pattern order differs");
  Rng rng(seed);
  const auto relabeled = permute_signs(pattern, Permutation::random(n, rng));
  DigitMatrix out{IntMatrix{n, std::vector<std::int32_t>(n * n)}, radix, 0};
  for (std::size_t e = 0; e < n * n; ++e) {
    const auto mag = static_cast<std::int32_t>(rng.uniform_below(static_cast<std::uint64_t>(radix)));
    out.digits.entries[e] = relabeled.signs[e] * mag;
  }
  return out;
}

Obfuscation obfuscate(const QuboMatrix& q, const ObfuscationParams& params,
                      const ObfuscateOptions& options) {
  params.validate();
  const std::size_t n = q.order();
  const auto k = static_cast<std::size_t>(params.digits);

  const auto normalized = normalize(q, params.epsilon);
  const auto digits = digit_split(normalized.matrix, params.radix, params.digits);

  Rng rng(params.seed);
  ObfuscationSecret secret;
  secret.n = n;
  secret.scale = normalized.scale;
  secret.params = params;
  secret.sigmas.reserve(k);
  for (std::size_t m = 0; m < k; ++m) {
    secret.sigmas.push_back(options.identity_permutations ? Permutation::identity(n)
                                                          : Permutation::random(n, rng));
  }

  std::vector<DigitMatrix> decoys;
  decoys.reserve(params.decoys);
  const SignMatrix pattern = params.decoy_mode == DecoyMode::kSignPattern ? sign_matrix(q) : SignMatrix{};
  for (std::size_t d = 0; d < params.decoys; ++d) {
    const std::uint64_t decoy_seed = rng.next_u64();
    decoys.push_back(params.decoy_mode == DecoyMode::kUniform
                         ? make_decoy(n, params.radix, decoy_seed)
                         : make_decoy(n, params.radix, decoy_seed, pattern));
  }

  const std::size_t slots = k + params.decoys;
  secret.send_order = options.identity_send_order ? Permutation::identity(slots)
                                                  : Permutation::random(slots, rng);

  TransmitSet transmit;
  transmit.radix = params.radix;
  transmit.matrices.reserve(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    const std::size_t source = secret.send_order(s);
    if (source < k) {
      transmit.matrices.push_back(permute_matrix(digits[source].digits, secret.sigmas[source]));
    } else {
      transmit.matrices.push_back(decoys[source - k].digits);
      secret.decoy_slots.push_back(s);
    }
  }
  return {std::move(transmit), std::move(secret)};
}

QuboMatrix reconstruct_matrix(const TransmitSet& t, const ObfuscationSecret& s) {
  s.validate();
  require(t.matrices.size() == s.slot_count(), "reconstruct_matrix: slot count mismatch");
  require(t.radix == s.params.radix, "reconstruct_matrix: radix mismatch");
  const std::size_t n = s.n;
  std::vector<double> acc(n * n, 0.0);
  for (int m = 1; m <= s.params.digits; ++m) {
    const auto& sent = t.matrices[s.slot_of_digit(m)];
    require(sent.n == n, "reconstruct_matrix: matrix order mismatch");
    const auto original = permute_matrix(sent, s.sigmas[static_cast<std::size_t>(m - 1)].inverse());
    const double weight = std::pow(static_cast<double>(s.params.radix), -m);
    for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += weight * original.entries[e];
  }
  return QuboMatrix(n, std::move(acc));
}

nlohmann::ordered_json int_matrix_to_json(const IntMatrix& m) {
  nlohmann::ordered_json j;
  j["n"] = m.n;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.n; ++i) {
    rows.push_back(std::vector<std::int32_t>(m.entries.begin() + static_cast<std::ptrdiff_t>(i * m.n),
                                             m.entries.begin() + static_cast<std::ptrdiff_t>((i + 1) * m.n)));
  }
  j["entries"] = std::move(rows);
  return j;
}

IntMatrix int_matrix_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("entries") && j["entries"].is_array(),
          "integer matrix JSON: missing 'entries' array");
  const auto& rows = j["entries"];
  IntMatrix out;
  out.n = rows.size();
  require(out.n >= 1, "integer matrix JSON: empty matrix");
  if (j.contains("n")) {
    require(j["n"].is_number_integer() && j["n"].get<std::int64_t>() == static_cast<std::int64_t>(out.n),
            "integer matrix JSON: 'n' does not match number of rows");
  }
  out.entries.reserve(out.n * out.n);
  for (const auto& row : rows) {
    require(row.is_array() && row.size() == out.n, "integer matrix JSON: rows must form an n x n array");
    for (const auto& v : row) {
      require(v.is_number_integer(), "integer matrix JSON: entries must be integers");
      const auto x = v.get<std::int64_t>();
      require(x >= std::numeric_limits<std::int32_t>::min() && x <= std::numeric_limits<std::int32_t>::max(),
              "integer matrix JSON: entry out of range");
      out.entries.push_back(static_cast<std::int32_t>(x));
    }
  }
  return out;
}

nlohmann::ordered_json transmit_to_json(const TransmitSet& t) {
  nlohmann::ordered_json j;
  j["radix"] = t.radix;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& m : t.matrices) arr.push_back(int_matrix_to_json(m));
  j["matrices"] = std::move(arr);
  return j;
}

TransmitSet transmit_from_json(const nlohmann::json& j) {
  require(j.is_object(), "transmit JSON: expected an object");
  require(j.contains("radix") && j["radix"].is_number_integer(), "transmit JSON: missing integer 'radix'");
  require(j.contains("matrices") && j["matrices"].is_array(), "transmit JSON: missing 'matrices' array");
  TransmitSet t;
  t.radix = j["radix"].get<int>();
  require(t.radix >= 2, "transmit JSON: radix must be at least 2");
  for (const auto& m : j["matrices"]) {
    t.matrices.push_back(int_matrix_from_json(m));
    require(t.matrices.back().n == t.matrices.front().n, "transmit JSON: matrices differ in order");
  }
  return t;
}

nlohmann::ordered_json params_to_json(const ObfuscationParams& p) {
  nlohmann::ordered_json j;
  j["radix"] = p.radix;
  j["digits"] = p.digits;
  j["decoys"] = p.decoys;
  j["epsilon"] = p.epsilon;
  j["decoy_mode"] = to_string(p.decoy_mode);
  return j;
}

ObfuscationParams params_from_json(const nlohmann::json& j) {
  require(j.is_object(), "params JSON: expected an object");
  ObfuscationParams p;
  try {
    p.radix = j.at("radix").get<int>();
    p.digits = j.at("digits").get<int>();
    p.decoys = j.at("decoys").get<std::size_t>();
    p.epsilon = j.at("epsilon").get<double>();
    p.decoy_mode = decoy_mode_from_string(j.at("decoy_mode").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("params JSON: ") + e.what());
  }
  return p;
}

nlohmann::ordered_json secret_to_json(const ObfuscationSecret& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["scale"] = s.scale;
  auto sig = nlohmann::ordered_json::array();
  for (const auto& p : s.sigmas) sig.push_back(p.to_json());
  j["sigmas"] = std::move(sig);
  j["send_order"] = s.send_order.to_json();
  auto decoys = nlohmann::ordered_json::array();
  for (std::size_t slot : s.decoy_slots) decoys.push_back(slot + 1);
  j["decoy_slots"] = std::move(decoys);
  j["params"] = params_to_json(s.params);
  j["seed"] = s.params.seed;
  return j;
}

ObfuscationSecret secret_from_json(const nlohmann::json& j) {
  require(j.is_object(), "secret JSON: expected an object");
  ObfuscationSecret s;
  try {
    s.n = j.at("n").get<std::size_t>();
    s.scale = j.at("scale").get<double>();
    for (const auto& p : j.at("sigmas")) s.sigmas.push_back(Permutation::from_json(p));
    s.send_order = Permutation::from_json(j.at("send_order"));
    for (const auto& v : j.at("decoy_slots")) {
      const auto slot = v.get<std::int64_t>();
      require(slot >= 1, "secret JSON: decoy slots are 1-based");
      s.decoy_slots.push_back(static_cast<std::size_t>(slot - 1));
    }
    s.params = params_from_json(j.at("params"));
    s.params.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("secret JSON: ") + e.what());
  }
  std::sort(s.decoy_slots.begin(), s.decoy_slots.end());
  s.validate();
  return s;
}

}  // namespace qubof
