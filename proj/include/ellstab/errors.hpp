#pragma once

#include <stdexcept>

namespace ellstab {

// Root of the failure hierarchy. Every deliberate throw in the library uses
// a subclass, so callers can tell "the computation refused" from a plain bug.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input fails a structural precondition: |q| outside (0,1), mismatched
// dimensions, a weight matrix with a forbidden minor, and the like.
class config_invalid : public error {
public:
    using error::error;
};

// A truncated infinite product or series cannot meet the requested tolerance
// at its current order.
class truncation_insufficient : public error {
public:
    using error::error;
};

// The annulus a contour integral needs has collapsed: poles from the two
// families meet or leave no room for the circle.
class contour_pinched : public error {
public:
    using error::error;
};

// A theta (or phi) denominator of a closed formula is being evaluated on or
// too near its zero locus; the formula is valid only generically.
class denominator_vanishes : public error {
public:
    using error::error;
};

// Eigenvalues of the leading q-difference matrix differ by an exact power of
// q, so the series ansatz for the fundamental solution degenerates.
class resonant : public error {
public:
    using error::error;
};

// Rejection sampling failed to find an admissible point within its budget.
class draw_exhausted : public error {
public:
    using error::error;
};

// A degeneration parameter sits on (or too near) a wall of the chamber
// structure, so the limit under study is not defined there.
class slope_on_wall : public error {
public:
    using error::error;
};

// An extrapolation or interpolation step received fewer usable samples than
// unknowns.
class fit_underdetermined : public error {
public:
    using error::error;
};

// A control quantity that must stay visibly nonzero (to certify that a
// cancellation is meaningful) degenerated instead.
class control_degenerate : public error {
public:
    using error::error;
};

// Linear algebra hit a numerically singular pivot.
class singular_matrix : public error {
public:
    using error::error;
};

// An iterative root or eigenvalue search did not converge.
class no_convergence : public error {
public:
    using error::error;
};

}  // namespace ellstab
