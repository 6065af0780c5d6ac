#pragma once

#include "fcs/types.hpp"

namespace fcs::numerics {

/// Residual and iteration tolerances used by the solvers. All defaults are the
/// contract values asserted by the test suites.
struct Tolerances {
    double lyapunov_rel_residual = 1e-10;
    double care_rel_residual = 1e-9;
    double resolvent_max_condition = 1e12;
    int care_max_iterations = 60;
};

/// Eigenvalues sorted by real part ascending, ties broken by imaginary part.
/// Conjugate-closed for real input.
struct Spectrum {
    CVec eigenvalues;

    double max_real() const { return eigenvalues.real().maxCoeff(); }
};

Spectrum spectrum(const Mat& m);

/// True iff max Re(lambda) < -margin.
bool is_hurwitz(const Mat& m, double margin = 0.0);

/// Solves A'P + PA + Q = 0 for symmetric P (A Hurwitz, Q symmetric).
/// Kronecker-vectorized dense solve; fine for the small systems handled here.
Mat lyapunov_solve(const Mat& a, const Mat& q, const Tolerances& tol = {});

struct CareSolution {
    Mat p;            // stabilizing solution, symmetric PSD
    Mat k;            // k = R^{-1} B' P
    double residual;  // relative residual of the Riccati equation
    int iterations;   // Kleinman-Newton steps taken
};

/// Solves A'P + PA - P B R^{-1} B' P + Q = 0 by Kleinman-Newton iteration.
/// The initial stabilizing gain comes from Bass's shifted-Lyapunov construction
/// when A itself is not Hurwitz.
CareSolution care_solve(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                        const Tolerances& tol = {});

/// Smallest singular value.
double min_singular_value(const CMat& m);

/// Solves (jw I - A) X = B. Throws when the resolvent is numerically singular
/// (condition above tol.resolvent_max_condition) so frequency sweeps can skip
/// or refine the grid point.
CMat freq_response_solve(const Mat& a, const Mat& b, double omega,
                         const Tolerances& tol = {});

} // namespace fcs::numerics
