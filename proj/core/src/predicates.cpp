#include "tubelab/predicates.hpp"

#include <cmath>

#include <gmpxx.h>

namespace tubelab {

namespace {

constexpr double kO3dErrBound = 7.7715611723761027e-16;
constexpr double kCcwErrBound = 3.3306690738754716e-16;

int sign_of(const mpq_class& q) { return sgn(q); }

int orient3d_exact(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
    const mpq_class ax(a.x1), ay(a.x2), az(a.x3);
    const mpq_class bx = mpq_class(b.x1) - ax, by = mpq_class(b.x2) - ay, bz = mpq_class(b.x3) - az;
    const mpq_class cx = mpq_class(c.x1) - ax, cy = mpq_class(c.x2) - ay, cz = mpq_class(c.x3) - az;
    const mpq_class dx = mpq_class(d.x1) - ax, dy = mpq_class(d.x2) - ay, dz = mpq_class(d.x3) - az;
    const mpq_class det = dx * (by * cz - bz * cy) + dy * (bz * cx - bx * cz) + dz * (bx * cy - by * cx);
    return sign_of(det);
}

}  // namespace

int orient3d(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
    const double bx = b.x1 - a.x1, by = b.x2 - a.x2, bz = b.x3 - a.x3;
    const double cx = c.x1 - a.x1, cy = c.x2 - a.x2, cz = c.x3 - a.x3;
    const double dx = d.x1 - a.x1, dy = d.x2 - a.x2, dz = d.x3 - a.x3;
    const double m1 = by * cz - bz * cy;
    const double m2 = bz * cx - bx * cz;
    const double m3 = bx * cy - by * cx;
    const double det = dx * m1 + dy * m2 + dz * m3;
    const double perm = std::abs(dx) * (std::abs(by * cz) + std::abs(bz * cy)) +
                        std::abs(dy) * (std::abs(bz * cx) + std::abs(bx * cz)) +
                        std::abs(dz) * (std::abs(bx * cy) + std::abs(by * cx));
    const double bound = kO3dErrBound * perm;
    if (det > bound) return 1;
    if (det < -bound) return -1;
    return orient3d_exact(a, b, c, d);
}

int orient2d(double ax, double ay, double bx, double by, double cx, double cy) {
    const double l = (bx - ax) * (cy - ay);
    const double r = (by - ay) * (cx - ax);
    const double det = l - r;
    const double bound = kCcwErrBound * (std::abs(l) + std::abs(r));
    if (det > bound) return 1;
    if (det < -bound) return -1;
    const mpq_class qax(ax), qay(ay);
    const mpq_class e = (mpq_class(bx) - qax) * (mpq_class(cy) - qay) -
                        (mpq_class(by) - qay) * (mpq_class(cx) - qax);
    return sign_of(e);
}

bool collinear(const Point3& a, const Point3& b, const Point3& c) {
    return orient2d(a.x1, a.x2, b.x1, b.x2, c.x1, c.x2) == 0 &&
           orient2d(a.x2, a.x3, b.x2, b.x3, c.x2, c.x3) == 0 &&
           orient2d(a.x3, a.x1, b.x3, b.x1, c.x3, c.x1) == 0;
}

}  // namespace tubelab
