#ifndef RECUR_STATS_HPP
#define RECUR_STATS_HPP

#include <cstddef>

#include "recur/common.hpp"

namespace recur {

// P(chi-square_df > x).  Exact closed form for even df; regularized
// incomplete gamma otherwise.
double chisq_upper_tail(double x, unsigned df);

double normal_cdf(double x);

// Two-sided normal p-value for a z statistic.
double normal_two_sided_p(double z);

// Inverse standard normal cdf (Acklam's rational approximation, refined by
// one Halley step; good to ~1e-15 over (0,1)).
double normal_quantile(double p);

// Sample median: mean of the two central order statistics for even counts.
// Input is copied and sorted.  Throws DataError on empty input.
double median(Vec values);

// Two-sided Kolmogorov-Smirnov distance between the sample and a cdf given
// as a callable already applied to the sorted sample: supplies sorted
// values of F(x_i).
double ks_statistic_from_cdf_values(const Vec& sorted_cdf_values);

} // namespace recur

#endif
