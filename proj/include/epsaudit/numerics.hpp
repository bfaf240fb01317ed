#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace epsaudit {

// Pairwise (cascade) summation. Deterministic for a fixed element order and
// keeps rounding growth at O(log n).
double pairwise_sum(std::span<const double> xs);

double mean(std::span<const double> xs);

// Sample standard deviation (n-1 denominator); returns 0 for n < 2.
double sample_std(std::span<const double> xs);

// log(mean(exp(xs))), max-shifted so large entries never overflow.
double log_mean_exp(std::span<const double> xs);

}  // namespace epsaudit
