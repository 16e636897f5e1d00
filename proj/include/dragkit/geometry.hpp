#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>

namespace dragkit {

/// Continuous position in pixels; x runs along the width, y along the height.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
};

/// Integer pixel; x is the column, y the row.
struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(Cell, Cell) = default;
  Vec2 to_vec() const { return {static_cast<double>(x), static_cast<double>(y)}; }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }
inline double distance(Cell a, Cell b) { return distance(a.to_vec(), b.to_vec()); }
inline int chebyshev(Cell a, Cell b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

inline Cell round_to_cell(Vec2 v) {
  return {static_cast<int>(std::lround(v.x)), static_cast<int>(std::lround(v.y))};
}

inline std::ostream& operator<<(std::ostream& os, Vec2 v) { return os << '(' << v.x << ", " << v.y << ')'; }
inline std::ostream& operator<<(std::ostream& os, Cell c) { return os << '(' << c.x << ", " << c.y << ')'; }

}  // namespace dragkit
