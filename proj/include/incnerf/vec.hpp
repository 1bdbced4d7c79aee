// Copyright 2026 the incnerf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef INCNERF_VEC_HPP_
#define INCNERF_VEC_HPP_

#include <algorithm>
#include <cmath>

namespace incnerf {

// Minimal fixed-size vector/matrix types, templated so the same geometry
// code runs on plain doubles and on reverse-mode variables.

template <typename T>
struct Vec3 {
  T x{}, y{}, z{};
};

using Vec3d = Vec3<double>;

template <typename T>
Vec3<T> operator+(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}

template <typename T>
Vec3<T> operator-(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

template <typename T>
Vec3<T> operator-(const Vec3<T>& a) {
  return {-a.x, -a.y, -a.z};
}

template <typename T, typename S>
Vec3<T> operator*(const Vec3<T>& a, const S& s) {
  return {a.x * s, a.y * s, a.z * s};
}

template <typename T, typename S>
Vec3<T> operator*(const S& s, const Vec3<T>& a) {
  return a * s;
}

template <typename T>
T dot(const Vec3<T>& a, const Vec3<T>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <typename T>
Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
          a.x * b.y - a.y * b.x};
}

template <typename T>
T squared_norm(const Vec3<T>& a) {
  return dot(a, a);
}

template <typename T>
T norm(const Vec3<T>& a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}

template <typename T>
Vec3<T> normalized(const Vec3<T>& a) {
  T n = norm(a);
  return {a.x / n, a.y / n, a.z / n};
}

/// Row-major 3x3 matrix.
template <typename T>
struct Mat3 {
  T m[9]{};

  static Mat3 identity() {
    Mat3 r;
    r.m[0] = T(1.0);
    r.m[4] = T(1.0);
    r.m[8] = T(1.0);
    return r;
  }

  T& operator()(int r, int c) { return m[r * 3 + c]; }
  const T& operator()(int r, int c) const { return m[r * 3 + c]; }
};

using Mat3d = Mat3<double>;

template <typename T>
Vec3<T> operator*(const Mat3<T>& a, const Vec3<T>& v) {
  return {a.m[0] * v.x + a.m[1] * v.y + a.m[2] * v.z,
          a.m[3] * v.x + a.m[4] * v.y + a.m[5] * v.z,
          a.m[6] * v.x + a.m[7] * v.y + a.m[8] * v.z};
}

template <typename T>
Mat3<T> operator*(const Mat3<T>& a, const Mat3<T>& b) {
  Mat3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
  return r;
}

template <typename T>
Mat3<T> transpose(const Mat3<T>& a) {
  Mat3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = a(j, i);
  return r;
}

inline double trace(const Mat3d& a) { return a.m[0] + a.m[4] + a.m[8]; }

inline double determinant(const Mat3d& a) {
  return a.m[0] * (a.m[4] * a.m[8] - a.m[5] * a.m[7]) -
         a.m[1] * (a.m[3] * a.m[8] - a.m[5] * a.m[6]) +
         a.m[2] * (a.m[3] * a.m[7] - a.m[4] * a.m[6]);
}

inline double max_abs_diff(const Mat3d& a, const Mat3d& b) {
  double m = 0.0;
  for (int i = 0; i < 9; ++i) m = std::max(m, std::abs(a.m[i] - b.m[i]));
  return m;
}

}  // namespace incnerf

#endif  // INCNERF_VEC_HPP_
