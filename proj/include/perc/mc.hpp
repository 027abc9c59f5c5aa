#pragma once
// Deterministic parallel Monte Carlo plumbing. Samples are split into
// fixed-size chunks; workers pick chunks dynamically but partial results are
// merged in chunk order, so output bits never depend on the worker count.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace perc {

struct MeanAcc {
  double sum = 0.0;
  double sumsq = 0.0;
  uint64_t n = 0;

  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++n;
  }
  void merge(const MeanAcc& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    n += o.n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    double m = mean();
    double v = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }
  double std_error() const { return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;
  uint64_t n_samples = 0;
  uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> meta;

  static EstimateWithError from_acc(const MeanAcc& a, uint64_t seed) {
    EstimateWithError e;
    e.value = a.mean();
    e.std_error = a.std_error();
    e.n_samples = a.n;
    e.seed = seed;
    return e;
  }
};

struct CurvePoint {
  double abscissa = 0.0;
  EstimateWithError estimate;
};

// Runs fn(sample_index, acc) for sample_index in [base, base + n) split into
// chunks of `chunk` samples. Accumulation into Acc must be sequential within
// a chunk; chunk results are merged in index order. Result is bit-identical
// for any worker count.
//
// Acc needs: default construction, merge(const Acc&).
template <typename Acc, typename Fn>
Acc chunked_reduce(uint64_t n, uint64_t base, uint64_t chunk, int workers, Fn&& fn);

// Worker pool detail shared by the template; see mc.cpp.
void run_chunks(uint64_t n_chunks, int workers, const std::function<void(uint64_t)>& body);

template <typename Acc, typename Fn>
Acc chunked_reduce(uint64_t n, uint64_t base, uint64_t chunk, int workers, Fn&& fn) {
  if (chunk == 0) chunk = 1;
  uint64_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<Acc> partial(static_cast<size_t>(n_chunks));
  run_chunks(n_chunks, workers, [&](uint64_t c) {
    uint64_t lo = base + c * chunk;
    uint64_t hi = std::min(base + n, lo + chunk);
    Acc acc;
    for (uint64_t i = lo; i < hi; ++i) fn(i, acc);
    partial[static_cast<size_t>(c)] = std::move(acc);
  });
  Acc total;
  for (Acc& a : partial) total.merge(a);
  return total;
}

constexpr uint64_t kDefaultChunk = 256;

}  // namespace perc
