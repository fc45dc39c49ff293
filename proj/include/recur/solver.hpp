#ifndef RECUR_SOLVER_HPP
#define RECUR_SOLVER_HPP

#include <functional>
#include <string>

#include "recur/common.hpp"

namespace recur {

using VectorFn = std::function<Vec(const Vec&)>;

enum class SolveMethod { spectral, spectral_multistart, norm_minimize };

std::string solve_method_name(SolveMethod m);

struct SolverConfig {
    double tol = 1e-7;            // absolute tolerance on the residual sup norm
    std::size_t max_iters = 500;
    SolveMethod method = SolveMethod::spectral;
    Vec init;
    std::size_t nonmonotone_memory = 10;
};

struct SolverResult {
    Vec solution;
    double residual_norm = 0.0;   // sup norm of f at solution
    bool converged = false;
    std::size_t iterations = 0;
    SolveMethod method_used = SolveMethod::spectral;
};

// Root finding for p-dimensional, possibly nonsmooth systems.
//
// spectral: derivative-free Barzilai-Borwein residual iteration with a
// nonmonotone line search.  spectral_multistart: the same, retried from the
// init perturbed by +-0.5 in each coordinate (up to 2p+1 starts).
// norm_minimize: Nelder-Mead simplex descent on |f|^2.
//
// Throws NumericError when f returns a non-finite value; non-convergence is
// reported through converged=false, never thrown.
SolverResult solve_root(const VectorFn& f, const SolverConfig& config);

// solve_root with the method forced to norm_minimize; converged means the
// minimizer also satisfies the residual tolerance.
SolverResult minimize_norm(const VectorFn& f, const SolverConfig& config);

} // namespace recur

#endif
