#ifndef RECUR_LWYY_HPP
#define RECUR_LWYY_HPP

#include "recur/dataset.hpp"
#include "recur/linalg.hpp"

namespace recur {

// Andersen-Gill proportional rates fit on (start, stop] counting-process
// intervals, Breslow tie handling, with the cluster-robust sandwich
// variance built from per-subject summed score residuals.
struct LwyyFit {
    Vec coef;
    Vec se_naive;
    Vec se_robust;
    Matrix naive_cov;      // inverse information
    Matrix robust_cov;     // A^{-1} B A^{-1}
    double loglik = 0.0;
    double score_norm = 0.0;  // sup norm of the score at coef
    std::size_t iterations = 0;

    std::string summary_text(const std::vector<std::string>& names) const;
};

LwyyFit fit_lwyy(const RecurrentDataset& dataset);

} // namespace recur

#endif
