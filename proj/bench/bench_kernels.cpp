// Serial reference vs OpenMP kernels. Prints one line per kernel and size:
// best-of-reps wall time for both and the speedup, and checks the outputs
// agree. Thread count follows OMP_NUM_THREADS.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>

#include "qubof/kernels.hpp"
#include "qubof/qubo.hpp"

namespace {

using qubof::kernels::SearchResult;

double best_ms(int reps, const std::function<void()>& fn) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* kernel, std::size_t size, double serial_ms, double parallel_ms, bool agree) {
  std::printf("%-18s %8zu  serial %10.3f ms  parallel %10.3f ms  speedup %5.2fx  %s\n", kernel, size, serial_ms,
              parallel_ms, serial_ms / parallel_ms, agree ? "agree" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
  std::printf("threads: %d, reps: %d\n", omp_get_max_threads(), reps);
  bool all_agree = true;

  for (std::size_t n : {14, 18, 20, 22}) {
    const auto q = qubof::generate_matrix({n, 0.0, 4.0, 100 + n});
    SearchResult s, p;
    const double ts = best_ms(reps, [&] { s = qubof::kernels::serial::exhaustive_search(q); });
    const double tp = best_ms(reps, [&] { p = qubof::kernels::exhaustive_search(q); });
    const bool agree = s.code == p.code;
    all_agree = all_agree && agree;
    report("exhaustive_search", n, ts, tp, agree);
  }

  for (std::size_t t : {1000, 10000, 100000}) {
    const std::size_t n = 40;
    const auto q = qubof::generate_matrix({n, 0.0, 4.0, 7});
    std::vector<double> probs(n, 0.5);
    const auto candidates = qubof::kernels::serial::sample_bernoulli(probs, t, 3);
    std::vector<double> vs, vp;
    const double ts = best_ms(reps, [&] { vs = qubof::kernels::serial::evaluate_all(q, candidates); });
    const double tp = best_ms(reps, [&] { vp = qubof::kernels::evaluate_all(q, candidates); });
    const bool agree = vs == vp;
    all_agree = all_agree && agree;
    report("evaluate_all", t, ts, tp, agree);

    std::vector<qubof::BinaryVector> bs, bp;
    const double ss = best_ms(reps, [&] { bs = qubof::kernels::serial::sample_bernoulli(probs, t, 9); });
    const double sp = best_ms(reps, [&] { bp = qubof::kernels::sample_bernoulli(probs, t, 9); });
    const bool same = bs == bp;
    all_agree = all_agree && same;
    report("sample_bernoulli", t, ss, sp, same);
  }
  return all_agree ? 0 : 1;
}
