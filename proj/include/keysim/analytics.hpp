#pragma once

// Closed-form connectivity and resilience model.
//
// Two neighbors at distance x keep key locations within r' of themselves;
// the keys both could hold lie in the lens A(x) where their r'-disks
// overlap.  With N(x) pool keys and N'(x) ring keys expected in that lens,
// the chance of no shared key is the hypergeometric C(N-N', N') / C(N, N'),
// and averaging over neighbors uniform in the radio disk gives
//
//   p = 1 - 2 * integral_0^1 r * Q(r * d_r) dr,   Q = C(N-N',N')/C(N,N').
//
// Distances inside the integral are normalized by d_r; A(x) itself is
// evaluated in meters.

#include <cmath>
#include <cstdint>
#include <vector>

#include "keysim/domain.hpp"

namespace keysim {

struct AnalyticParams {
  double area = 1.0e6;  // A, m^2
  double d = 50.0;
  double d_r = 40.0;
  double pool_size = 100000;   // M
  double ring_size = 200;      // m
  double high_priority = 200;  // c
  bool use_floors = true;
  std::uint32_t simpson_intervals = 1000;

  static AnalyticParams from_config(const SimConfig& config);
  /// Throws InvalidConfig.
  void validate() const;
};

/// floor(A (d + 1) / (pi d_r^2))
std::uint64_t max_network_size(double area, double d, double d_r);

/// sqrt(A c / (pi m)): radius holding c of a node's m uniformly placed keys
/// on average.
double prioritization_radius(double area, double c, double m);

/// Lens area of two radius-r' disks whose centers are x apart; 0 once the
/// disks no longer overlap.
double overlap_area(double x, double r_prime);

struct KeyCounts {
  double pool = 0;  // N(x)
  double ring = 0;  // N'(x)
};

/// Expected pool and ring keys inside A(x); floored when params.use_floors.
KeyCounts key_counts(double x, const AnalyticParams& params);

/// Probability that no ring key lands in the shared lens:
/// prod_{i<N'} (N - N' - i) / (N - i).  Evaluated in log space.  Real-valued
/// counts use the Gamma-function continuation of the binomial ratio.
double no_share_probability(double pool_keys, double ring_keys);

/// p(x) = 1 - no_share_probability(N(x), N'(x)).
double share_probability_at(double x, const AnalyticParams& params);

/// Composite Simpson 1/3 rule on [a, b] with `intervals` (even) panels.
template <typename F>
double simpson(F&& f, double a, double b, std::uint32_t intervals) {
  if (intervals == 0 || intervals % 2 != 0) throw InvalidConfig("simpson_intervals must be positive and even");
  const double h = (b - a) / intervals;
  double odd = 0.0;
  double even = 0.0;
  for (std::uint32_t i = 1; i < intervals; ++i) {
    const double v = f(a + i * h);
    (i % 2 ? odd : even) += v;
  }
  return h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b));
}

/// Average direct-key probability between neighbors, integrated over the
/// normalized radius r in [0, 1].
double average_connectivity(const AnalyticParams& params);

/// Same quantity integrated in meters: 1 - (2 / d_r^2) * integral_0^{d_r} x Q(x) dx.
double average_connectivity_meters(const AnalyticParams& params);

/// 1 - prod_{i<m} (M - m - i) / (M - i): two full rings share a key.
double full_ring_share_probability(double ring_size, double pool_size);

/// P_e(N_c) = 1 - (1 - m/M)^N_c.
double resilience(double ring_size, double pool_size, double captured);

/// Ring size for an additional-memory percentage over c: round(c (1 + pct/100)).
std::uint32_t ring_size_for_memory(std::uint32_t high_priority, double memory_pct);

// Curve emitters.
struct NetSizePoint {
  double d_r;
  double d;
  std::uint64_t n;
};
struct ConnectivityPoint {
  double memory_pct;
  std::uint32_t ring_size;
  double p;
};
struct ResiliencePoint {
  double captured;
  double p_e;
};

std::vector<NetSizePoint> netsize_curve(double area, const std::vector<double>& ranges, const std::vector<double>& ds);
std::vector<ConnectivityPoint> connectivity_curve(const AnalyticParams& base, const std::vector<double>& pcts);
std::vector<ResiliencePoint> resilience_curve(double ring_size, double pool_size, const std::vector<double>& captured);

}  // namespace keysim
