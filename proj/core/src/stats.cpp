#include "nfsm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace nfsm {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0;
  const double m = mean(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0;
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + mid, xs.end());
  const double upper = xs[mid];
  if (xs.size() % 2 == 1) return upper;
  const double lower = *std::max_element(xs.begin(), xs.begin() + mid);
  return (lower + upper) / 2;
}

double upper_confidence_bound(std::span<const double> xs, double confidence) {
  if (xs.size() < 2) throw std::invalid_argument("confidence bound needs at least two samples");
  boost::math::students_t dist(static_cast<double>(xs.size() - 1));
  const double t = boost::math::quantile(dist, confidence);
  return mean(xs) + t * stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> samples, std::uint64_t support_min,
                               double (*pmf)(std::uint64_t), double min_expected) {
  ChiSquareResult r;
  const auto n = static_cast<double>(samples.size());
  if (samples.empty()) throw std::invalid_argument("chi-square test needs samples");
  // Bins support_min, support_min+1, ... until the remaining tail is too thin; the tail
  // from the last bin on is pooled.
  double tail = 1.0;
  std::uint64_t x = support_min;
  while (true) {
    const double p = pmf(x);
    if ((tail - p) * n < min_expected) break;
    r.expected.push_back(p * n);
    tail -= p;
    ++x;
  }
  r.expected.push_back(tail * n);
  const std::uint64_t last = x;
  r.observed.assign(r.expected.size(), 0.0);
  for (std::uint64_t s : samples) {
    if (s < support_min) throw std::invalid_argument("sample below the support");
    r.observed[std::min(s, last) - support_min] += 1;
  }
  for (std::size_t i = 0; i < r.expected.size(); ++i) {
    const double d = r.observed[i] - r.expected[i];
    r.statistic += d * d / r.expected[i];
  }
  r.degrees_of_freedom = r.expected.size() - 1;
  if (r.degrees_of_freedom == 0) {
    r.p_value = 1;
    return r;
  }
  boost::math::chi_squared dist(static_cast<double>(r.degrees_of_freedom));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

double shifted_geometric_half_pmf(std::uint64_t x) {
  if (x < 3) return 0;
  return std::ldexp(1.0, -static_cast<int>(std::min<std::uint64_t>(x - 2, 1074)));
}

}  // namespace nfsm
