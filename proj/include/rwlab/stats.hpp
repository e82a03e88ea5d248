#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace rwlab {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  double sd = 0.0;
  std::size_t n = 0;
};

MeanSe mean_se(const std::vector<double>& xs);

/// sup |F_n - F| for the empirical distribution of `samples`.
double ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf);
/// sup |F_n - G_m| between two empirical distributions.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Ordinary least-squares slope and intercept of y on x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

/// Runs fn(i) for i in [0, n) on `workers` threads. Work is split into
/// contiguous blocks; callers write results by index so output does not
/// depend on the worker count.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace rwlab
