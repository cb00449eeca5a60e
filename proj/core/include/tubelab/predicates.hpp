#pragma once

// Exact orientation predicates: a floating-point filter with a GMP rational
// fallback when the filter cannot certify the sign.

#include "tubelab/vec3.hpp"

namespace tubelab {

/// Sign of ((b - a) x (c - a)) . (d - a): +1 when d lies on the side the
/// right-hand normal of (a, b, c) points to, 0 when coplanar.
int orient3d(const Point3& a, const Point3& b, const Point3& c, const Point3& d);

/// Sign of the 2D cross product (b - a) x (c - a); +1 for a left turn.
int orient2d(double ax, double ay, double bx, double by, double cx, double cy);

/// True iff a, b, c lie on one line (exact).
bool collinear(const Point3& a, const Point3& b, const Point3& c);

}  // namespace tubelab
