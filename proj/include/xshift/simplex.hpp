#pragma once

// State types for populations of particles with a finite number of types:
// points of the probability simplex and particle-count lattice states.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

namespace xshift {

/// Largest number of particle types supported by the fixed-capacity vectors.
inline constexpr std::size_t kMaxTypes = 8;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-capacity vector indexed by particle type. Never allocates.
template <class T>
class TypeVector {
 public:
  TypeVector() = default;

  explicit TypeVector(std::size_t n, T fill = T{}) : n_(n) {
    if (n > kMaxTypes) {
      throw Error("number of types " + std::to_string(n) + " exceeds capacity " +
                  std::to_string(kMaxTypes));
    }
    std::fill_n(v_.begin(), n, fill);
  }

  TypeVector(std::initializer_list<T> init) : TypeVector(init.size()) {
    std::copy(init.begin(), init.end(), v_.begin());
  }

  explicit TypeVector(std::span<const T> init) : TypeVector(init.size()) {
    std::copy(init.begin(), init.end(), v_.begin());
  }

  std::size_t size() const { return n_; }
  T& operator[](std::size_t i) { return v_[i]; }
  const T& operator[](std::size_t i) const { return v_[i]; }
  T* begin() { return v_.data(); }
  T* end() { return v_.data() + n_; }
  const T* begin() const { return v_.data(); }
  const T* end() const { return v_.data() + n_; }
  std::span<const T> span() const { return {v_.data(), n_}; }

  T sum() const { return std::accumulate(begin(), end(), T{}); }

  friend bool operator==(const TypeVector& a, const TypeVector& b) {
    return a.n_ == b.n_ && std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  std::array<T, kMaxTypes> v_{};
  std::size_t n_ = 0;
};

using Coords = TypeVector<double>;
using Counts = TypeVector<int>;

inline double dot(const Coords& a, const Coords& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Coords& a) { return std::sqrt(dot(a, a)); }

inline Coords operator+(Coords a, const Coords& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Coords operator-(Coords a, const Coords& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

inline Coords operator*(double s, Coords a) {
  for (auto& x : a) x *= s;
  return a;
}

/// a + s * b
inline Coords axpy(const Coords& a, double s, const Coords& b) {
  Coords r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += s * b[i];
  return r;
}

inline double distance(const Coords& a, const Coords& b) { return norm(a - b); }

class SimplexPoint;

/// Result of mapping an arbitrary vector back onto the simplex.
struct Projection;

/// A probability vector: nonnegative coordinates summing to one.
class SimplexPoint {
 public:
  /// Largest clip-and-renormalize displacement accepted by the constructor.
  static constexpr double kMaxDisplacement = 1e-6;

  SimplexPoint() = default;

  /// Clips tiny negatives and renormalizes; throws if that moves the point
  /// by more than kMaxDisplacement.
  explicit SimplexPoint(const Coords& c);
  SimplexPoint(std::initializer_list<double> c) : SimplexPoint(Coords(c)) {}

  /// Projects without the displacement guard.
  static Projection project(const Coords& c);

  /// Vertex e^i of the simplex.
  static SimplexPoint vertex(std::size_t d, std::size_t i) {
    Coords c(d, 0.0);
    c[i] = 1.0;
    SimplexPoint p;
    p.x_ = c;
    return p;
  }

  const Coords& coords() const { return x_; }
  std::size_t size() const { return x_.size(); }
  double operator[](std::size_t i) const { return x_[i]; }

  friend bool operator==(const SimplexPoint& a, const SimplexPoint& b) { return a.x_ == b.x_; }

 private:
  Coords x_;
};

struct Projection {
  SimplexPoint point;
  double displacement = 0.0;
};

inline Projection SimplexPoint::project(const Coords& c) {
  Coords y = c;
  for (auto& v : y) v = std::max(v, 0.0);
  const double total = y.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error("cannot project a vector with nonpositive or non-finite mass onto the simplex");
  }
  for (auto& v : y) v /= total;
  Projection p;
  p.point.x_ = y;
  p.displacement = distance(y, c);
  return p;
}

inline SimplexPoint::SimplexPoint(const Coords& c) {
  Projection p = project(c);
  if (p.displacement > kMaxDisplacement) {
    throw Error("point is not on the simplex (projection displacement " +
                std::to_string(p.displacement) + ")");
  }
  x_ = p.point.x_;
}

/// Particle counts N = (n_1, ..., n_d) with |N| = total; the normalized state
/// N/|N| lives on the lattice simplex with spacing h = 1/|N|.
class LatticeState {
 public:
  LatticeState() = default;

  explicit LatticeState(const Counts& counts) : counts_(counts), total_(counts.sum()) {
    for (int c : counts_) {
      if (c < 0) throw Error("negative particle count");
    }
    if (total_ <= 0) throw Error("lattice state needs at least one particle");
  }
  LatticeState(std::initializer_list<int> counts) : LatticeState(Counts(counts)) {}

  const Counts& counts() const { return counts_; }
  int count(std::size_t i) const { return counts_[i]; }
  int total() const { return total_; }
  std::size_t size() const { return counts_.size(); }
  double spacing() const { return 1.0 / total_; }

  Coords point() const {
    Coords x(counts_.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(counts_[i]) / total_;
    return x;
  }

  /// Moves one particle from type i to type j.
  void jump(std::size_t i, std::size_t j) {
    if (counts_[i] <= 0) throw Error("jump from an empty type");
    --counts_[i];
    ++counts_[j];
  }

  LatticeState jumped(std::size_t i, std::size_t j) const {
    LatticeState s = *this;
    s.jump(i, j);
    return s;
  }

  friend bool operator==(const LatticeState& a, const LatticeState& b) {
    return a.counts_ == b.counts_;
  }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(counts_[i]);
    }
    return s + ")";
  }

 private:
  Counts counts_;
  int total_ = 0;
};

/// Largest-remainder rounding of total * y to a lattice state with the given
/// total. Ties go to the lower type index.
inline LatticeState round_to_lattice(const SimplexPoint& y, int total) {
  if (total <= 0) throw Error("particle count must be positive");
  const std::size_t d = y.size();
  Counts c(d);
  std::array<double, kMaxTypes> rem{};
  int assigned = 0;
  for (std::size_t i = 0; i < d; ++i) {
    const double scaled = y[i] * total;
    c[i] = static_cast<int>(std::floor(scaled));
    rem[i] = scaled - c[i];
    assigned += c[i];
  }
  std::array<std::size_t, kMaxTypes> order{};
  std::iota(order.begin(), order.begin() + d, 0);
  std::stable_sort(order.begin(), order.begin() + d,
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++c[order[k % d]];
  return LatticeState(c);
}

}  // namespace xshift
