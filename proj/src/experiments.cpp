#include "qubof/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "qubof/error.hpp"
#include "qubof/obfuscation.hpp"
#include "qubof/reconstruction.hpp"
#include "qubof/rng.hpp"

namespace qubof::experiments {

std::string flags_to_string(unsigned flags) {
  std::string out;
  auto add = [&out](const char* name) {
    if (!out.empty()) out += '|';
    out += name;
  };
  if (flags & kDegenerate) add("degenerate");
  if (flags & kSignMismatch) add("sign_mismatch");
  if (flags & kApproxTruth) add("approx_truth");
  return out;
}

namespace {

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

bool ExperimentRecord::same_outcome(const ExperimentRecord& o) const {
  return cell == o.cell && trial == o.trial && seed == o.seed && same_double(obtained, o.obtained) &&
         same_double(truth, o.truth) && same_double(acc, o.acc) && same_double(err, o.err) && flags == o.flags;
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t n, std::size_t trial) {
  return derive_seed(base_seed, n, trial);
}

Truth true_optimum(const QuboMatrix& q, std::uint64_t seed, const RunSettings& settings) {
  if (q.order() <= settings.exact_cap) return {solve_exact(q, settings.exact_cap).value, false};
  return {solve_heuristic(q, settings.reference_budget, derive_seed(seed, 3)).value, true};
}

ExperimentRecord score(const Cell& cell, std::size_t trial, std::uint64_t seed, double obtained, const Truth& truth) {
  ExperimentRecord rec;
  rec.cell = cell;
  rec.trial = trial;
  rec.seed = seed;
  rec.obtained = obtained;
  rec.truth = truth.value;
  if (truth.approximate) rec.flags |= kApproxTruth;
  if (truth.value == 0.0) {
    rec.flags |= kDegenerate;
    rec.acc = std::numeric_limits<double>::quiet_NaN();
    rec.err = std::numeric_limits<double>::quiet_NaN();
    return rec;
  }
  rec.acc = obtained / truth.value;
  rec.err = std::abs(obtained - truth.value) / std::abs(truth.value);
  if (obtained * truth.value < 0.0) rec.flags |= kSignMismatch;
  return rec;
}

namespace {

std::unique_ptr<protocol::Transport> make_transport(const RunSettings& settings) {
  if (settings.transport) return settings.transport();
  return std::make_unique<protocol::LoopbackTransport>();
}

ExperimentRecord run_trial(const Cell& cell, std::size_t trial, const RunSettings& settings, const Truth* cached) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const std::uint64_t seed = trial_seed(settings.base_seed, cell.n, trial);
  const auto q = generate_matrix({cell.n, settings.mean, settings.stddev, derive_seed(seed, 1)});
  const Truth truth = cached ? *cached : true_optimum(q, seed, settings);

  ObfuscationParams params;
  params.radix = cell.radix;
  params.digits = cell.digits;
  params.decoys = settings.decoys;
  auto transport = make_transport(settings);
  const auto run = protocol::run_protocol(q, params, cell.samples, *transport, derive_seed(seed, 2));

  ExperimentRecord rec = score(cell, trial, seed, run.solution.value, truth);
  rec.ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
  return rec;
}

std::vector<ExperimentRecord> run_trials(const Cell& cell, std::size_t trials, const RunSettings& settings,
                                         const std::vector<Truth>* truths) {
  require(trials >= 1, "run_cell: trials must be at least 1");
  require(cell.n >= 1 && cell.samples >= 1, "run_cell: invalid cell");
  std::vector<ExperimentRecord> out(trials);
  const auto count = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto trial = static_cast<std::size_t>(i);
    out[trial] = run_trial(cell, trial, settings, truths ? &(*truths)[trial] : nullptr);
  }
  return out;
}

}  // namespace

std::vector<ExperimentRecord> run_cell(const Cell& cell, std::size_t trials, const RunSettings& settings) {
  return run_trials(cell, trials, settings, nullptr);
}

std::vector<Cell> Grid::cells() const {
  require(!n.empty() && !k.empty() && !r.empty() && !t.empty(), "grid: every axis needs at least one value");
  std::vector<Cell> out;
  for (auto nv : n)
    for (auto kv : k)
      for (auto rv : r)
        for (auto tv : t) out.push_back({nv, kv, rv, tv});
  return out;
}

void parse_axis(const std::string& spec, Grid& grid) {
  const auto eq = spec.find('=');
  require(eq != std::string::npos && eq > 0, "grid axis '" + spec + "': expected NAME=VALUES");
  const std::string name = spec.substr(0, eq);
  const std::string body = spec.substr(eq + 1);
  auto to_int = [&spec](const std::string& s) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == s.size() && v >= 1, "grid axis '" + spec + "': values must be positive integers");
    return v;
  };

  std::vector<long long> values;
  if (body.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(body);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    require(parts.size() == 2 || parts.size() == 3, "grid axis '" + spec + "': range is LO:HI[:STEP]");
    const long long lo = to_int(parts[0]), hi = to_int(parts[1]);
    const long long step = parts.size() == 3 ? to_int(parts[2]) : 1;
    require(lo <= hi, "grid axis '" + spec + "': empty range");
    for (long long v = lo; v <= hi; v += step) values.push_back(v);
  } else {
    std::stringstream ss(body);
    for (std::string p; std::getline(ss, p, ',');) values.push_back(to_int(p));
  }
  require(!values.empty(), "grid axis '" + spec + "': no values");

  if (name == "n") {
    grid.n.assign(values.begin(), values.end());
  } else if (name == "k") {
    grid.k.assign(values.begin(), values.end());
  } else if (name == "r") {
    for (auto v : values) require(v >= 2, "grid axis r: radix must be at least 2");
    grid.r.assign(values.begin(), values.end());
  } else if (name == "t") {
    grid.t.assign(values.begin(), values.end());
  } else {
    throw ContractViolation("grid axis '" + name + "': expected one of n, k, r, t");
  }
}

std::vector<ExperimentRecord> run_grid(const Grid& grid, std::size_t trials, const RunSettings& settings) {
  std::vector<ExperimentRecord> out;
  std::map<std::size_t, std::vector<Truth>> truth_by_order;
  for (const auto& cell : grid.cells()) {
    auto& truths = truth_by_order[cell.n];
    if (truths.size() < trials) {
      truths.resize(trials);
      const auto count = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic, 1)
      for (std::int64_t i = 0; i < count; ++i) {
        const std::uint64_t seed = trial_seed(settings.base_seed, cell.n, static_cast<std::size_t>(i));
        const auto q = generate_matrix({cell.n, settings.mean, settings.stddev, derive_seed(seed, 1)});
        truths[static_cast<std::size_t>(i)] = true_optimum(q, seed, settings);
      }
    }
    auto recs = run_trials(cell, trials, settings, &truths);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

Stats describe(std::vector<double> values) {
  Stats s;
  if (values.empty()) {
    s.mean = s.median = s.stddev = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

std::vector<CellSummary> aggregate(const std::vector<ExperimentRecord>& records) {
  require(!records.empty(), "aggregate: no records");
  std::vector<CellSummary> out;
  std::vector<std::vector<double>> acc, err, ms;
  for (const auto& rec : records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const CellSummary& s) { return s.cell == rec.cell; });
    std::size_t idx = static_cast<std::size_t>(it - out.begin());
    if (it == out.end()) {
      out.push_back({});
      out.back().cell = rec.cell;
      acc.emplace_back();
      err.emplace_back();
      ms.emplace_back();
    }
    auto& s = out[idx];
    ++s.records;
    if (rec.flags & kSignMismatch) ++s.sign_mismatch;
    if (rec.flags & kApproxTruth) ++s.approximate;
    ms[idx].push_back(rec.ms);
    if (rec.flags & kDegenerate) {
      ++s.degenerate;
      continue;
    }
    acc[idx].push_back(rec.acc);
    err[idx].push_back(rec.err);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].acc = describe(acc[i]);
    out[i].err = describe(err[i]);
    out[i].ms = describe(ms[i]);
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records, bool include_timing) {
  out << "n,k,r,t,trial,seed,obtained,true,acc,err,flags,ms\n";
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%zu,%d,%d,%zu,%zu,%llu,%.17g,%.17g,%.17g,%.17g,%s,%.3f\n", r.cell.n,
                  r.cell.digits, r.cell.radix, r.cell.samples, r.trial, static_cast<unsigned long long>(r.seed),
                  r.obtained, r.truth, r.acc, r.err, flags_to_string(r.flags).c_str(), include_timing ? r.ms : 0.0);
    out << buf;
  }
}

nlohmann::ordered_json summary_to_json(const std::vector<CellSummary>& summary) {
  auto stats = [](const Stats& s) {
    nlohmann::ordered_json j;
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
    j["mean"] = num(s.mean);
    j["median"] = num(s.median);
    j["stddev"] = num(s.stddev);
    return j;
  };
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : summary) {
    nlohmann::ordered_json j;
    j["n"] = s.cell.n;
    j["k"] = s.cell.digits;
    j["r"] = s.cell.radix;
    j["t"] = s.cell.samples;
    j["records"] = s.records;
    j["degenerate"] = s.degenerate;
    j["sign_mismatch"] = s.sign_mismatch;
    j["approximate_truth"] = s.approximate;
    j["acc"] = stats(s.acc);
    j["err"] = stats(s.err);
    j["ms"] = stats(s.ms);
    arr.push_back(std::move(j));
  }
  nlohmann::ordered_json root;
  root["cells"] = std::move(arr);
  return root;
}

namespace {

// Least squares for y = c + a x1 + b x2; returns {a, b}.
std::pair<double, double> fit_two(const std::vector<double>& x1, const std::vector<double>& x2,
                                  const std::vector<double>& y) {
  const double m = static_cast<double>(y.size());
  const double mx1 = std::accumulate(x1.begin(), x1.end(), 0.0) / m;
  const double mx2 = std::accumulate(x2.begin(), x2.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double s11 = 0, s22 = 0, s12 = 0, s1y = 0, s2y = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = x1[i] - mx1, b = x2[i] - mx2, c = y[i] - my;
    s11 += a * a;
    s22 += b * b;
    s12 += a * b;
    s1y += a * c;
    s2y += b * c;
  }
  const double det = s11 * s22 - s12 * s12;
  require(det > 0.0, "cost fit: need at least two distinct n and two distinct k");
  return {(s1y * s22 - s2y * s12) / det, (s2y * s11 - s1y * s12) / det};
}

}  // namespace

CostReport cost_scaling_check(const std::vector<std::size_t>& ns, const std::vector<std::size_t>& ks, int radix,
                              std::uint64_t seed) {
  protocol::SolverConfig cheap;
  cheap.exact_cap = 0;
  cheap.budget = 1;
  CostReport report;
  std::vector<double> ln_n, ln_k, ln_bytes;
  for (auto n : ns) {
    const auto q = generate_matrix({n, 0.0, 4.0, derive_seed(seed, n)});
    for (auto k : ks) {
      protocol::WireCapture capture;
      protocol::LoopbackTransport transport(cheap, &capture);
      ObfuscationParams params;
      params.radix = radix;
      params.digits = static_cast<int>(k);
      protocol::run_protocol(q, params, 1, transport, derive_seed(seed, n, k));
      CostPoint p{n, k, capture.bytes_sent(), capture.bytes_received(), capture.round_trips};
      report.points.push_back(p);
      ln_n.push_back(std::log(static_cast<double>(n)));
      ln_k.push_back(std::log(static_cast<double>(k)));
      ln_bytes.push_back(std::log(static_cast<double>(p.total())));
    }
  }
  std::tie(report.exponent_n, report.exponent_k) = fit_two(ln_n, ln_k, ln_bytes);
  return report;
}

double sampling_time_ratio(std::size_t n, std::size_t t, int reps, std::uint64_t seed) {
  require(n >= 1 && t >= 1 && reps >= 1, "sampling_time_ratio: invalid arguments");
  const auto q = generate_matrix({n, 0.0, 4.0, seed});
  const ProbabilityVector p{std::vector<double>(n, 0.5)};
  auto once = [&](std::size_t samples, int rep) {
    const auto start = std::chrono::steady_clock::now();
    const auto cands = sample_candidates(p, samples, derive_seed(seed, rep));
    const auto sol = select_best(cands, q);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    require(sol.bits.size() == n, "sampling_time_ratio: bad selection");
    return secs;
  };
  once(t, -1);  // warm-up
  // Interleaved so both sizes see the same machine state.
  double single = std::numeric_limits<double>::infinity();
  double doubled = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < reps; ++rep) {
    single = std::min(single, once(t, rep));
    doubled = std::min(doubled, once(2 * t, rep));
  }
  return doubled / single;
}

}  // namespace qubof::experiments
