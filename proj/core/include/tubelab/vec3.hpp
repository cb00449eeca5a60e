#pragma once

#include <array>
#include <cmath>

namespace tubelab {

/// Point or direction in R^3, coordinates (x1, x2, x3).
struct Vec3 {
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;

    constexpr double operator[](int i) const { return i == 0 ? x1 : (i == 1 ? x2 : x3); }
    constexpr double& operator[](int i) { return i == 0 ? x1 : (i == 1 ? x2 : x3); }

    constexpr Vec3& operator+=(const Vec3& o) { x1 += o.x1; x2 += o.x2; x3 += o.x3; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x1 -= o.x1; x2 -= o.x2; x3 -= o.x3; return *this; }
    constexpr Vec3& operator*=(double s) { x1 *= s; x2 *= s; x3 *= s; return *this; }

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

using Point3 = Vec3;

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x1, -a.x2, -a.x3}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x1 * b.x1 + a.x2 * b.x2 + a.x3 * b.x3; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.x2 * b.x3 - a.x3 * b.x2, a.x3 * b.x1 - a.x1 * b.x3, a.x1 * b.x2 - a.x2 * b.x1};
}
constexpr double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline bool is_finite(const Vec3& a) {
    return std::isfinite(a.x1) && std::isfinite(a.x2) && std::isfinite(a.x3);
}

/// Reflection through the plane x2 = 0.
constexpr Vec3 mirror_x2(const Vec3& a) { return {a.x1, -a.x2, a.x3}; }

}  // namespace tubelab
