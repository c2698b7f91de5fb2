#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

namespace smpkit {

/// Closed interval with possibly infinite endpoints. The scalar carrier for
/// generalized gradients and per-coordinate cones, both of which are
/// intervals in the piecewise-C1 / box setting implemented here.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    static Interval point(double v) { return {v, v}; }
    static Interval whole() {
        return {-std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
    }
    static Interval lower_ray(double v) { return {-std::numeric_limits<double>::infinity(), v}; }
    static Interval upper_ray(double v) { return {v, std::numeric_limits<double>::infinity()}; }

    bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
    bool is_point() const { return lo == hi; }

    /// Distance from 0 to the interval (0 when the interval contains 0).
    double distance_to_zero() const {
        if (lo > 0.0) return lo;
        if (hi < 0.0) return -hi;
        return 0.0;
    }
};

/// Minkowski sum; exact endpoint arithmetic, infinities absorb.
inline Interval interval_sum(const Interval& a, const Interval& b) {
    return {a.lo + b.lo, a.hi + b.hi};
}

/// Scalar function of one coordinate that is smooth away from declared
/// breakpoints. `derivative(u, side)` returns the one-sided derivative from
/// side -1 (left) or +1 (right); away from breakpoints both sides agree.
struct PiecewiseSmoothFn {
    std::function<double(double)> value;
    std::function<double(double, int)> derivative;
    std::vector<double> breakpoints;                // sorted, may be empty
    Interval domain = Interval::whole();
};

/// Generalized gradient of a scalar piecewise-C1 function at u: the singleton
/// derivative at smooth points, and the closed interval spanned by the
/// one-sided derivatives at a breakpoint. `snap_tol` decides when u counts as
/// sitting on a breakpoint.
Interval generalized_gradient(const PiecewiseSmoothFn& fn, double u, double snap_tol = 1e-12);

/// Which feature of the constraint set (or of the gradient) is active at a
/// control value; reported per node by the stationarity checker.
enum class ActiveCase { interior, lower_bound, upper_bound, kink, degenerate };

const char* active_case_name(ActiveCase c);

/// Product of closed coordinate intervals [a_i, b_i]; either side may be
/// infinite. Tangent/normal cones factor per coordinate.
class ConvexBox {
public:
    ConvexBox() = default;
    explicit ConvexBox(std::vector<Interval> bounds);
    static ConvexBox scalar(double lo, double hi) { return ConvexBox({Interval{lo, hi}}); }

    int dim() const { return static_cast<int>(bounds_.size()); }
    const Interval& bound(int coord) const { return bounds_.at(coord); }

    bool contains(const Eigen::VectorXd& u, double tol = 1e-12) const;
    Eigen::VectorXd project(const Eigen::VectorXd& u) const;

    /// Per-coordinate normal cone at u_c: {0} in the interior, a ray at an
    /// endpoint, the whole line at a degenerate coordinate. `boundary_tol`
    /// decides endpoint activity. Throws MembershipError when u_c is outside.
    Interval normal_cone_coord(int coord, double u_c, double boundary_tol = 1e-12) const;
    std::vector<Interval> normal_cone(const Eigen::VectorXd& u, double boundary_tol = 1e-12) const;

    /// Per-coordinate tangent cone (polar of the normal cone).
    Interval tangent_cone_coord(int coord, double u_c, double boundary_tol = 1e-12) const;

    /// Constraint feature active at u_c.
    ActiveCase classify_coord(int coord, double u_c, double boundary_tol = 1e-12) const;

private:
    std::vector<Interval> bounds_;
};

struct StationarityOutcome {
    bool pass = false;
    double violation = 0.0;
};

/// Zero-membership test for the interval sum gradient + cone:
/// pass iff dist(0, gradient + cone) <= tol; the violation is that distance.
StationarityOutcome stationarity_test(const Interval& gradient, const Interval& cone, double tol);

/// Multi-coordinate variant; the violation is the worst coordinate's.
StationarityOutcome stationarity_test(const std::vector<Interval>& gradient,
                                      const std::vector<Interval>& cone, double tol);

} // namespace smpkit
