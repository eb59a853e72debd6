#include <cmath>
#include <sstream>

#include "doctest.h"
#include "qubof/error.hpp"
#include "qubof/experiments.hpp"

using namespace qubof;
using namespace qubof::experiments;

namespace {

ExperimentRecord record(const Cell& c, double obtained, double truth, double ms = 1.0) {
  auto r = score(c, 0, 1, obtained, {truth, false});
  r.ms = ms;
  return r;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("score computes acc, err and flags") {
    const Cell c{};
    const auto r = score(c, 3, 9, -90.0, {-100.0, false});
    CHECK(r.acc == doctest::Approx(0.9));
    CHECK(r.err == doctest::Approx(0.1));
    CHECK(r.err == doctest::Approx(std::abs(1 - r.acc)));
    CHECK(r.flags == 0);
    const auto d = score(c, 0, 0, -1.0, {0.0, false});
    CHECK((d.flags & kDegenerate));
    CHECK(std::isnan(d.acc));
    const auto s = score(c, 0, 0, 5.0, {-1.0, true});
    CHECK((s.flags & kSignMismatch));
    CHECK((s.flags & kApproxTruth));
    CHECK(flags_to_string(s.flags) == "sign_mismatch|approx_truth");
    CHECK(flags_to_string(0).empty());
  }

  TEST_CASE("axis parsing") {
    Grid g;
    parse_axis("n=8:22:2", g);
    CHECK(g.n == std::vector<std::size_t>{8, 10, 12, 14, 16, 18, 20, 22});
    parse_axis("k=1:3", g);
    CHECK(g.k == std::vector<int>{1, 2, 3});
    parse_axis("r=2,4,8,10", g);
    CHECK(g.r == std::vector<int>{2, 4, 8, 10});
    parse_axis("t=50", g);
    CHECK(g.t == std::vector<std::size_t>{50});
    CHECK(g.cells().size() == 8 * 3 * 4);
    CHECK_THROWS_AS(parse_axis("q=1", g), ContractViolation);
    CHECK_THROWS_AS(parse_axis("r=1", g), ContractViolation);
    CHECK_THROWS_AS(parse_axis("n=5:2", g), ContractViolation);
    CHECK_THROWS_AS(parse_axis("n=a", g), ContractViolation);
    CHECK_THROWS_AS(parse_axis("n", g), ContractViolation);
  }

  TEST_CASE("describe") {
    const auto s = describe({1, 2, 3, 4});
    CHECK(s.mean == 2.5);
    CHECK(s.median == 2.5);
    CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(describe({7}).stddev == 0.0);
    CHECK(std::isnan(describe({}).mean));
  }

  TEST_CASE("aggregate examples") {
    const Cell c{};
    const auto single = aggregate({record(c, -9, -10)});
    REQUIRE(single.size() == 1);
    CHECK(single[0].acc.mean == doctest::Approx(0.9));
    CHECK(single[0].err.median == doctest::Approx(0.1));
    CHECK(single[0].records == 1);

    const auto same = aggregate({record(c, -9, -10), record(c, -9, -10), record(c, -9, -10)});
    CHECK(same[0].acc.stddev == 0.0);

    const auto mixed = aggregate({record(c, -9, -10), record(c, -5, 0)});
    CHECK(mixed[0].degenerate == 1);
    CHECK(mixed[0].acc.mean == doctest::Approx(0.9));

    Cell other = c;
    other.samples = 10;
    const auto two = aggregate({record(c, -9, -10), record(other, -8, -10), record(c, -7, -10)});
    REQUIRE(two.size() == 2);
    CHECK(two[0].cell == c);
    CHECK(two[0].records == 2);
    CHECK_THROWS_AS(aggregate({}), ContractViolation);
  }

  TEST_CASE("CSV columns and formatting") {
    const Cell c{12, 5, 4, 300};
    auto r = record(c, -9, -10, 12.5);
    r.trial = 2;
    r.seed = 77;
    std::ostringstream os;
    write_csv(os, {r});
    const auto text = os.str();
    CHECK(text.rfind("n,k,r,t,trial,seed,obtained,true,acc,err,flags,ms\n", 0) == 0);
    CHECK(text.find("12,5,4,300,2,77,-9,-10,0.90000000000000002,0.10000000000000001,,12.500\n") != std::string::npos);
    std::ostringstream no_time;
    write_csv(no_time, {r}, false);
    CHECK(no_time.str().find(",0.000\n") != std::string::npos);
  }

  TEST_CASE("run_cell is deterministic, paired across cells and scores against exact truth") {
    RunSettings s;
    s.base_seed = 5;
    const Cell a{8, 3, 4, 50};
    const auto r1 = run_cell(a, 4, s);
    const auto r2 = run_cell(a, 4, s);
    REQUIRE(r1.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(r1[i].same_outcome(r2[i]));
      CHECK(r1[i].trial == i);
      CHECK(r1[i].truth == solve_exact(generate_matrix({8, 0.0, 4.0, derive_seed(r1[i].seed, 1)})).value);
      CHECK(r1[i].obtained >= r1[i].truth - 1e-9);
    }
    const auto r3 = run_cell(Cell{8, 3, 2, 50}, 4, s);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(r3[i].seed == r1[i].seed);
      CHECK(r3[i].truth == r1[i].truth);
    }
  }

  TEST_CASE("run_grid reuses truth per order and matches run_cell") {
    RunSettings s;
    s.base_seed = 3;
    Grid g{{6}, {2}, {2, 4}, {20}};
    const auto recs = run_grid(g, 3, s);
    REQUIRE(recs.size() == 6);
    const auto direct = run_cell(Cell{6, 2, 4, 20}, 3, s);
    for (std::size_t i = 0; i < 3; ++i) CHECK(recs[3 + i].same_outcome(direct[i]));
  }

  TEST_CASE("approximate truth above the exact cap") {
    RunSettings s;
    s.exact_cap = 6;
    s.reference_budget = 500;
    const auto recs = run_cell(Cell{9, 2, 4, 20}, 2, s);
    for (const auto& r : recs) CHECK((r.flags & kApproxTruth));
  }

  TEST_CASE("summary JSON") {
    const Cell c{};
    const auto j = summary_to_json(aggregate({record(c, -9, -10), record(c, -5, 0)}));
    REQUIRE(j["cells"].size() == 1);
    CHECK(j["cells"][0]["degenerate"] == 1);
    CHECK(j["cells"][0]["acc"]["stddev"] == 0.0);
  }

  TEST_CASE("payload bytes grow like k n^2") {
    // Large enough that row brackets and frame envelopes are minor terms.
    const auto rep = cost_scaling_check({32, 64}, {2, 4});
    REQUIRE(rep.points.size() == 4);
    auto bytes = [&](std::size_t n, std::size_t k) {
      for (const auto& p : rep.points)
        if (p.n == n && p.k == k) return static_cast<double>(p.bytes_sent);
      return 0.0;
    };
    CHECK(bytes(64, 2) / bytes(32, 2) == doctest::Approx(4.0).epsilon(0.10));
    CHECK(bytes(32, 4) / bytes(32, 2) == doctest::Approx(2.0).epsilon(0.10));
    for (const auto& p : rep.points) CHECK(p.round_trips == 1);
  }

  TEST_CASE("doubling t roughly doubles sampling time") {
    const double ratio = sampling_time_ratio(64, 4000, 7);
    CHECK(ratio >= 1.6);
    CHECK(ratio <= 2.6);
  }
}
