#pragma once

#include <algorithm>
#include <cmath>

namespace pvet {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
  constexpr explicit Vec3(double v) : x(v), y(v), z(v) {}

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    return n > 0.0 ? *this / n : Vec3{};
  }
  Vec3 cwise_min(const Vec3& o) const {
    return {std::min(x, o.x), std::min(y, o.y), std::min(z, o.z)};
  }
  Vec3 cwise_max(const Vec3& o) const {
    return {std::max(x, o.x), std::max(y, o.y), std::max(z, o.z)};
  }
  Vec3 cwise_mul(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
  Vec3 clamped(double lo, double hi) const {
    return {std::clamp(x, lo, hi), std::clamp(y, lo, hi), std::clamp(z, lo, hi)};
  }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 3x3 matrix.
struct Mat3 {
  double m[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};

  static Mat3 identity() {
    Mat3 r;
    r.m[0] = r.m[4] = r.m[8] = 1.0;
    return r;
  }
  static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
    return Mat3{{r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z}};
  }

  double& operator()(int r, int c) { return m[r * 3 + c]; }
  double operator()(int r, int c) const { return m[r * 3 + c]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }
  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }
  Vec3 row(int i) const { return {m[i * 3], m[i * 3 + 1], m[i * 3 + 2]}; }

  // Max absolute entry of R^T R - I.
  double orthonormality_error() const {
    Mat3 g = transposed() * (*this);
    double e = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) e = std::max(e, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return e;
  }
};

struct Box3 {
  Vec3 min{0, 0, 0};
  Vec3 max{0, 0, 0};

  Vec3 center() const { return (min + max) * 0.5; }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return extent().norm(); }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
  Box3 dilated(double d) const { return {min - Vec3(d), max + Vec3(d)}; }
  void extend(const Vec3& p) {
    min = min.cwise_min(p);
    max = max.cwise_max(p);
  }
  static Box3 empty() {
    constexpr double inf = 1e300;
    return {Vec3(inf), Vec3(-inf)};
  }
};

}  // namespace pvet
