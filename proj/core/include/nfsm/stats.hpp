#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nfsm {

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> xs);
double median(std::vector<double> xs);

/// mean + t_{confidence, n-1} * s / sqrt(n).
double upper_confidence_bound(std::span<const double> xs, double confidence);

struct ChiSquareResult {
  double statistic = 0;
  std::size_t degrees_of_freedom = 0;
  double p_value = 1;
  /// Expected counts after pooling bins below the minimum expected count.
  std::vector<double> expected;
  std::vector<double> observed;
};

/// Goodness of fit of integer samples to a distribution given by its pmf on
/// support_min, support_min+1, ...; the upper tail is pooled into the last bin so every
/// bin has an expected count of at least `min_expected`.
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> samples, std::uint64_t support_min,
                               double (*pmf)(std::uint64_t), double min_expected = 5.0);

/// P(Geom(1/2) + 2 = x) with Geom supported on 1, 2, ...: 2^-(x-2) for x >= 3.
double shifted_geometric_half_pmf(std::uint64_t x);

}  // namespace nfsm
