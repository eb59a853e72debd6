#include "doctest.h"
#include "qubof/obfuscation.hpp"
#include "qubof/protocol.hpp"
#include "support.hpp"

using namespace qubof;
using namespace qubof::protocol;
using nlohmann::json;

namespace {

std::string error_code(const std::string& response) {
  const auto j = json::parse(response);
  return j["type"] == "error" ? j["code"].get<std::string>() : std::string();
}

std::string digits_request(const std::string& matrices) {
  return R"({"type":"solve","batch_id":"b1","radix":4,"matrices":)" + matrices + "}";
}

}  // namespace

TEST_SUITE("protocol") {
  TEST_CASE("frames are big-endian length prefixed") {
    const auto f = encode_frame("abc");
    CHECK(f == std::string("\0\0\0\3abc", 7));
    const std::string big(300, 'x');
    const auto g = encode_frame(big);
    CHECK(static_cast<unsigned char>(g[2]) == 1);
    CHECK(static_cast<unsigned char>(g[3]) == 44);
  }

  TEST_CASE("frame reader handles split and concatenated input") {
    FrameReader r;
    const auto stream = encode_frame("hello") + encode_frame("") + encode_frame("world");
    for (char c : stream.substr(0, 6)) r.feed(std::string(1, c));
    CHECK_FALSE(r.next().has_value());
    r.feed(stream.substr(6));
    CHECK(r.next() == "hello");
    CHECK(r.next() == "");
    CHECK(r.next() == "world");
    CHECK_FALSE(r.next().has_value());

    FrameReader small(4);
    small.feed(encode_frame("too long"));
    CHECK_THROWS_AS(small.next(), ProtocolError);
  }

  TEST_CASE("request encoding round trips") {
    TransmitSet t{4, {IntMatrix{2, {1, -3, 0, 2}}, IntMatrix{2, {0, 0, -1, 3}}}};
    const auto req = make_request(t, "batch-7");
    const auto text = encode_request(req);
    CHECK(text == R"({"type":"solve","batch_id":"batch-7","radix":4,"matrices":[{"n":2,"entries":[[1,-3],[0,2]]},)"
                   R"({"n":2,"entries":[[0,0],[-1,3]]}]})");
    const auto back = decode_request(text);
    CHECK(back.batch_id == "batch-7");
    CHECK(back.radix == 4);
    CHECK(back.kind == MatrixKind::kDigits);
    REQUIRE(back.matrices.size() == 2);
    CHECK(back.matrices[0] == t.matrices[0].to_qubo());
  }

  TEST_CASE("request validation error codes") {
    const SolverConfig cfg;
    CHECK(error_code(handle_payload("{not json", cfg)) == "bad_json");
    CHECK(error_code(handle_payload("[1,2]", cfg)) == "bad_request");
    CHECK(error_code(handle_payload(R"({"type":"hello"})", cfg)) == "bad_request");
    CHECK(error_code(handle_payload(digits_request("[]"), cfg)) == "empty_batch");
    CHECK(error_code(handle_payload(digits_request(R"([{"n":1,"entries":[[1]]},{"n":2,"entries":[[1,0],[0,1]]}])"),
                                    cfg)) == "mixed_order");
    CHECK(error_code(handle_payload(digits_request(R"([{"n":1,"entries":[[4]]}])"), cfg)) == "entry_out_of_range");
    CHECK(error_code(handle_payload(digits_request(R"([{"n":1,"entries":[[1.5]]}])"), cfg)) == "bad_request");
    CHECK(error_code(handle_payload(digits_request(R"([{"n":2,"entries":[[1,0]]}])"), cfg)) == "bad_request");
    CHECK(error_code(handle_payload(digits_request(R"([{"n":3,"entries":[[1]]}])"), cfg)) == "bad_request");
    CHECK(error_code(handle_payload(R"({"type":"solve","batch_id":"b","radix":1,"matrices":[]})", cfg)) ==
          "bad_request");
  }

  TEST_CASE("test mode carries real entries and solves the worked example") {
    SolveRequest r;
    r.batch_id = "t";
    r.radix = 2;
    r.kind = MatrixKind::kTest;
    r.matrices = {testing::paper_example()};
    const auto text = encode_request(r);
    CHECK(json::parse(text)["mode"] == "test");
    const auto resp = decode_response(handle_payload(text, {}));
    CHECK(resp.batch_id == "t");
    REQUIRE(resp.vectors.size() == 1);
    CHECK(resp.vectors[0] == BinaryVector{0, 1, 1, 0});

    // Real values are rejected outside test mode.
    CHECK(error_code(handle_payload(R"({"type":"solve","batch_id":"b","radix":100,"matrices":[{"n":1,"entries":[[-0.5]]}]})",
                                    {})) == "bad_request");
  }

  TEST_CASE("identical matrices get identical answers, also above the exact cap") {
    SolverConfig cfg;
    cfg.exact_cap = 4;
    cfg.budget = 200;
    const auto q = generate_matrix({10, 0.0, 4.0, 5});
    SolveRequest r{"same", 2, MatrixKind::kTest, {q, q, q}};
    const auto out = solve_batch(r, cfg);
    CHECK(out[0] == out[1]);
    CHECK(out[1] == out[2]);
    CHECK(matrix_seed("a", q) != matrix_seed("b", q));
  }

  TEST_CASE("strict exact mode rejects oversized batches") {
    SolverConfig cfg;
    cfg.exact_cap = 3;
    cfg.strict_exact = true;
    SolveRequest r{"s", 2, MatrixKind::kTest, {generate_matrix({4, 0.0, 1.0, 1})}};
    CHECK(error_code(handle_payload(encode_request(r), cfg)) == "matrix_too_large");
    cfg.strict_exact = false;
    CHECK(error_code(handle_payload(encode_request(r), cfg)).empty());
  }

  TEST_CASE("responses decode and errors surface as typed transport errors") {
    const auto ok = decode_response(encode_response({"x", {{1, 0}, {0, 1}}}));
    CHECK(ok.batch_id == "x");
    CHECK(ok.vectors == std::vector<BinaryVector>{{1, 0}, {0, 1}});
    try {
      decode_response(encode_error("empty_batch", "nothing"));
      FAIL("expected throw");
    } catch (const TransportError& e) {
      CHECK(e.kind() == TransportErrorKind::kServer);
      CHECK(e.code() == "empty_batch");
    }
    CHECK_THROWS_AS(decode_response("garbage"), TransportError);
    CHECK_THROWS_AS(decode_response(R"({"type":"result","batch_id":"x","vectors":[[2]]})"), TransportError);
  }

  TEST_CASE("endpoint parsing") {
    const auto tcp = Endpoint::parse("127.0.0.1:7000");
    CHECK(tcp.kind == Endpoint::Kind::kTcp);
    CHECK(tcp.port == 7000);
    CHECK(tcp.to_string() == "127.0.0.1:7000");
    const auto ux = Endpoint::parse("unix:/tmp/q.sock");
    CHECK(ux.kind == Endpoint::Kind::kUnix);
    CHECK(ux.path == "/tmp/q.sock");
    CHECK(Endpoint::parse(":9").host == "127.0.0.1");
    CHECK_THROWS(Endpoint::parse("nohost"));
    CHECK_THROWS(Endpoint::parse("h:70000"));
    CHECK_THROWS(Endpoint::parse("h:12x"));
  }
}
