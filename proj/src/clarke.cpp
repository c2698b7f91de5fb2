#include "smpkit/clarke.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smpkit/errors.hpp"

namespace smpkit {

Interval generalized_gradient(const PiecewiseSmoothFn& fn, double u, double snap_tol) {
    if (!fn.domain.contains(u))
        throw DomainError("generalized_gradient: point " + std::to_string(u) +
                          " outside the function domain");
    bool at_breakpoint = false;
    for (double b : fn.breakpoints) {
        if (std::abs(u - b) <= snap_tol) {
            at_breakpoint = true;
            break;
        }
    }
    if (!at_breakpoint) {
        return Interval::point(fn.derivative(u, +1));
    }
    const double left = fn.derivative(u, -1);
    const double right = fn.derivative(u, +1);
    return {std::min(left, right), std::max(left, right)};
}

const char* active_case_name(ActiveCase c) {
    switch (c) {
        case ActiveCase::interior: return "interior";
        case ActiveCase::lower_bound: return "lower_bound";
        case ActiveCase::upper_bound: return "upper_bound";
        case ActiveCase::kink: return "kink";
        case ActiveCase::degenerate: return "degenerate";
    }
    return "unknown";
}

ConvexBox::ConvexBox(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {
    for (const auto& b : bounds_) {
        if (!(b.lo <= b.hi))
            throw ConfigError("box coordinate has lower bound above upper bound");
    }
}

bool ConvexBox::contains(const Eigen::VectorXd& u, double tol) const {
    if (u.size() != dim()) return false;
    for (int c = 0; c < dim(); ++c) {
        if (!bounds_[c].contains(u(c), tol)) return false;
    }
    return true;
}

Eigen::VectorXd ConvexBox::project(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out = u;
    for (int c = 0; c < dim(); ++c)
        out(c) = std::clamp(u(c), bounds_[c].lo, bounds_[c].hi);
    return out;
}

ActiveCase ConvexBox::classify_coord(int coord, double u_c, double boundary_tol) const {
    const Interval& b = bounds_[coord];
    const bool lower_finite = std::isfinite(b.lo);
    const bool upper_finite = std::isfinite(b.hi);
    if (lower_finite && upper_finite && b.hi - b.lo <= boundary_tol) return ActiveCase::degenerate;
    if (lower_finite && std::abs(u_c - b.lo) <= boundary_tol) return ActiveCase::lower_bound;
    if (upper_finite && std::abs(u_c - b.hi) <= boundary_tol) return ActiveCase::upper_bound;
    return ActiveCase::interior;
}

Interval ConvexBox::normal_cone_coord(int coord, double u_c, double boundary_tol) const {
    if (!bounds_[coord].contains(u_c, boundary_tol))
        throw MembershipError("normal cone queried at a point outside the box (coordinate " +
                              std::to_string(coord) + ", value " + std::to_string(u_c) + ")");
    switch (classify_coord(coord, u_c, boundary_tol)) {
        case ActiveCase::degenerate: return Interval::whole();
        case ActiveCase::lower_bound: return Interval::lower_ray(0.0);
        case ActiveCase::upper_bound: return Interval::upper_ray(0.0);
        default: return Interval::point(0.0);
    }
}

std::vector<Interval> ConvexBox::normal_cone(const Eigen::VectorXd& u, double boundary_tol) const {
    if (u.size() != dim()) throw ShapeError("normal cone point dimension mismatch");
    std::vector<Interval> cones(dim());
    for (int c = 0; c < dim(); ++c) cones[c] = normal_cone_coord(c, u(c), boundary_tol);
    return cones;
}

Interval ConvexBox::tangent_cone_coord(int coord, double u_c, double boundary_tol) const {
    if (!bounds_[coord].contains(u_c, boundary_tol))
        throw MembershipError("tangent cone queried at a point outside the box");
    switch (classify_coord(coord, u_c, boundary_tol)) {
        case ActiveCase::degenerate: return Interval::point(0.0);
        case ActiveCase::lower_bound: return Interval::upper_ray(0.0);
        case ActiveCase::upper_bound: return Interval::lower_ray(0.0);
        default: return Interval::whole();
    }
}

StationarityOutcome stationarity_test(const Interval& gradient, const Interval& cone,
                                      double tol) {
    const double violation = interval_sum(gradient, cone).distance_to_zero();
    return {violation <= tol, violation};
}

StationarityOutcome stationarity_test(const std::vector<Interval>& gradient,
                                      const std::vector<Interval>& cone, double tol) {
    if (gradient.size() != cone.size())
        throw ShapeError("stationarity_test: gradient/cone coordinate count mismatch");
    StationarityOutcome outcome{true, 0.0};
    for (std::size_t c = 0; c < gradient.size(); ++c) {
        const auto coord = stationarity_test(gradient[c], cone[c], tol);
        outcome.pass = outcome.pass && coord.pass;
        outcome.violation = std::max(outcome.violation, coord.violation);
    }
    return outcome;
}

} // namespace smpkit
