#pragma once

// Accuracy sweeps: generate Normal model matrices, run the full obfuscated
// protocol against a solver, and compare with the true optimum.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qubof/protocol.hpp"
#include "qubof/qubo.hpp"
#include "qubof/transport.hpp"

namespace qubof::experiments {

struct Cell {
  std::size_t n = 16;
  int digits = 5;  // k
  int radix = 4;   // r
  std::size_t samples = 300;  // t

  friend bool operator==(const Cell&, const Cell&) = default;
};

enum RecordFlag : unsigned {
  kDegenerate = 1U << 0,    // true optimum is 0, ratios undefined
  kSignMismatch = 1U << 1,  // obtained and true values have opposite signs
  kApproxTruth = 1U << 2,   // truth from the annealer, not enumeration
};

std::string flags_to_string(unsigned flags);

struct ExperimentRecord {
  Cell cell;
  std::size_t trial = 0;
  std::uint64_t seed = 0;  // trial seed; matrix and protocol seeds derive from it
  double obtained = 0.0;
  double truth = 0.0;
  double acc = 0.0;
  double err = 0.0;
  unsigned flags = 0;
  double ms = 0.0;

  /// Everything except the wall time.
  bool same_outcome(const ExperimentRecord& other) const;
};

using TransportFactory = std::function<std::unique_ptr<protocol::Transport>()>;

struct RunSettings {
  double mean = 0.0;
  double stddev = 4.0;
  std::size_t decoys = 0;
  std::uint64_t base_seed = 1;
  std::size_t exact_cap = kDefaultExactLimit;  // truth by enumeration up to here
  std::uint64_t reference_budget = 20000;      // annealing sweeps for approximate truth
  TransportFactory transport;                  // defaults to an in-process loopback
};

/// Seed of trial `trial` at order n; shared by every (k, r, t) so cells are
/// paired on identical matrices and protocol randomness.
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t n, std::size_t trial);

/// Objective of the true optimum, or of the reference annealer above the cap.
struct Truth {
  double value = 0.0;
  bool approximate = false;
};
Truth true_optimum(const QuboMatrix& q, std::uint64_t seed, const RunSettings& settings);

ExperimentRecord score(const Cell& cell, std::size_t trial, std::uint64_t seed, double obtained, const Truth& truth);

/// Trials run in parallel, records returned in trial order.
std::vector<ExperimentRecord> run_cell(const Cell& cell, std::size_t trials, const RunSettings& settings);

struct Grid {
  std::vector<std::size_t> n;
  std::vector<int> k;
  std::vector<int> r;
  std::vector<std::size_t> t;

  std::vector<Cell> cells() const;
};

/// Parses one axis such as "n=8:22:2", "k=1:8" or "r=2,4,8,10" into grid.
void parse_axis(const std::string& spec, Grid& grid);

std::vector<ExperimentRecord> run_grid(const Grid& grid, std::size_t trials, const RunSettings& settings);

struct Stats {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
};

Stats describe(std::vector<double> values);

struct CellSummary {
  Cell cell;
  std::size_t records = 0;
  std::size_t degenerate = 0;
  std::size_t sign_mismatch = 0;
  std::size_t approximate = 0;
  Stats acc;
  Stats err;
  Stats ms;
};

/// Per-cell statistics, cells in first-appearance order. Degenerate records
/// are counted but left out of the acc/err statistics.
std::vector<CellSummary> aggregate(const std::vector<ExperimentRecord>& records);

/// Columns: n,k,r,t,trial,seed,obtained,true,acc,err,flags,ms
void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records, bool include_timing = true);
nlohmann::ordered_json summary_to_json(const std::vector<CellSummary>& summary);

struct CostPoint {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t bytes_sent = 0;
  std::size_t bytes_received = 0;
  std::size_t round_trips = 0;
  std::size_t total() const noexcept { return bytes_sent + bytes_received; }
};

struct CostReport {
  std::vector<CostPoint> points;
  double exponent_n = 0.0;  // fit of log bytes = c + a log n + b log k
  double exponent_k = 0.0;
};

/// Measures wire bytes of one protocol round trip for every (n, k) pair with
/// a loopback solver, then fits the growth exponents.
CostReport cost_scaling_check(const std::vector<std::size_t>& ns, const std::vector<std::size_t>& ks,
                              int radix = 4, std::uint64_t seed = 7);

/// Best-of-`reps` wall time of sample_candidates + select_best at 2t over t.
double sampling_time_ratio(std::size_t n, std::size_t t, int reps = 5, std::uint64_t seed = 11);

}  // namespace qubof::experiments
