#include "keysim/analytics.hpp"

#include <algorithm>
#include <numbers>

namespace keysim {

namespace {

// A(x)/A is computed as pi r'^2 / A = c/m at x = 0, which lands a few ulps
// below an integer often enough to matter for the floors.
constexpr double kFloorSlack = 1e-9;

double floor_count(double v) { return std::floor(v + kFloorSlack); }

bool is_integral(double v) { return std::floor(v) == v; }

}  // namespace

AnalyticParams AnalyticParams::from_config(const SimConfig& config) {
  AnalyticParams p;
  p.area = config.field.area();
  p.d = config.d;
  p.d_r = config.d_r;
  p.pool_size = config.pool_size;
  p.ring_size = config.ring_size;
  p.high_priority = config.high_priority;
  p.use_floors = config.use_floors;
  p.simpson_intervals = config.simpson_intervals;
  return p;
}

void AnalyticParams::validate() const {
  std::string problems;
  if (!(area > 0)) problems += " area>0";
  if (!(d_r > 0)) problems += " d_r>0";
  if (!(ring_size > 0)) problems += " m>0";
  if (!(high_priority >= 0 && high_priority <= ring_size)) problems += " c≤m";
  if (!(ring_size <= pool_size)) problems += " m≤M";
  if (simpson_intervals == 0 || simpson_intervals % 2 != 0) problems += " simpson_intervals even";
  if (!problems.empty()) throw InvalidConfig("analytic parameters violate:" + problems);
}

std::uint64_t max_network_size(double area, double d, double d_r) {
  return static_cast<std::uint64_t>(std::floor(area * (d + 1.0) / (std::numbers::pi * d_r * d_r)));
}

double prioritization_radius(double area, double c, double m) {
  if (c <= 0) return 0.0;
  return std::sqrt(area * c / (std::numbers::pi * m));
}

double overlap_area(double x, double r_prime) {
  if (r_prime <= 0 || x >= 2.0 * r_prime) return 0.0;
  x = std::max(x, 0.0);
  const double lens = 2.0 * r_prime * r_prime * std::acos(x / (2.0 * r_prime)) -
                      x * std::sqrt(r_prime * r_prime - x * x / 4.0);
  return std::max(lens, 0.0);
}

KeyCounts key_counts(double x, const AnalyticParams& params) {
  const double r_prime = prioritization_radius(params.area, params.high_priority, params.ring_size);
  const double fraction = overlap_area(x, r_prime) / params.area;
  KeyCounts k{params.pool_size * fraction, params.ring_size * fraction};
  if (params.use_floors) {
    k.pool = floor_count(k.pool);
    k.ring = floor_count(k.ring);
  }
  return k;
}

double no_share_probability(double pool_keys, double ring_keys) {
  if (ring_keys <= 0) return 1.0;
  const double rest = pool_keys - ring_keys;
  if (is_integral(pool_keys) && is_integral(ring_keys)) {
    // Empty binomial C(N - N', N') once N - N' < N'.
    if (rest < ring_keys) return 0.0;
    double log_q = 0.0;
    const auto count = static_cast<std::uint64_t>(ring_keys);
    for (std::uint64_t i = 0; i < count; ++i) {
      log_q += std::log1p(-ring_keys / (pool_keys - static_cast<double>(i)));
    }
    return std::exp(log_q);
  }
  // Gamma continuation: C(N-N',N')/C(N,N') = G(N-N'+1)^2 / (G(N-2N'+1) G(N+1)).
  const double tail = rest - ring_keys + 1.0;
  if (tail <= 0.0) return 0.0;
  const double log_q = 2.0 * std::lgamma(rest + 1.0) - std::lgamma(tail) - std::lgamma(pool_keys + 1.0);
  return std::clamp(std::exp(log_q), 0.0, 1.0);
}

double share_probability_at(double x, const AnalyticParams& params) {
  const auto k = key_counts(x, params);
  return std::clamp(1.0 - no_share_probability(k.pool, k.ring), 0.0, 1.0);
}

double average_connectivity(const AnalyticParams& params) {
  params.validate();
  auto integrand = [&](double r) {
    const auto k = key_counts(r * params.d_r, params);
    return r * no_share_probability(k.pool, k.ring);
  };
  const double integral = simpson(integrand, 0.0, 1.0, params.simpson_intervals);
  return std::clamp(1.0 - 2.0 * integral, 0.0, 1.0);
}

double average_connectivity_meters(const AnalyticParams& params) {
  params.validate();
  auto integrand = [&](double x) {
    const auto k = key_counts(x, params);
    return x * no_share_probability(k.pool, k.ring);
  };
  const double integral = simpson(integrand, 0.0, params.d_r, params.simpson_intervals);
  return std::clamp(1.0 - 2.0 * integral / (params.d_r * params.d_r), 0.0, 1.0);
}

double full_ring_share_probability(double ring_size, double pool_size) {
  return 1.0 - no_share_probability(pool_size, ring_size);
}

double resilience(double ring_size, double pool_size, double captured) {
  if (captured <= 0 || ring_size <= 0) return 0.0;
  if (ring_size >= pool_size) return 1.0;
  return std::clamp(-std::expm1(captured * std::log1p(-ring_size / pool_size)), 0.0, 1.0);
}

std::uint32_t ring_size_for_memory(std::uint32_t high_priority, double memory_pct) {
  return static_cast<std::uint32_t>(std::llround(high_priority * (1.0 + memory_pct / 100.0)));
}

std::vector<NetSizePoint> netsize_curve(double area, const std::vector<double>& ranges, const std::vector<double>& ds) {
  std::vector<NetSizePoint> out;
  for (double d_r : ranges) {
    for (double d : ds) out.push_back({d_r, d, max_network_size(area, d, d_r)});
  }
  return out;
}

std::vector<ConnectivityPoint> connectivity_curve(const AnalyticParams& base, const std::vector<double>& pcts) {
  std::vector<ConnectivityPoint> out;
  for (double pct : pcts) {
    AnalyticParams p = base;
    const auto m = ring_size_for_memory(static_cast<std::uint32_t>(base.high_priority), pct);
    p.ring_size = m;
    out.push_back({pct, m, average_connectivity(p)});
  }
  return out;
}

std::vector<ResiliencePoint> resilience_curve(double ring_size, double pool_size, const std::vector<double>& captured) {
  std::vector<ResiliencePoint> out;
  for (double nc : captured) out.push_back({nc, resilience(ring_size, pool_size, nc)});
  return out;
}

}  // namespace keysim
