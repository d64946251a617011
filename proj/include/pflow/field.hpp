#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace pflow {

/// Grid-indexed scalar values, one per node.
using ScalarField = std::vector<double>;

/// Grid-indexed vectors in R^L, stored node-major.
class AmbientField {
 public:
  AmbientField() = default;
  AmbientField(std::size_t nodes, std::size_t dim, double fill = 0.0)
      : nodes_(nodes), dim_(dim), data_(nodes * dim, fill) {}

  std::size_t nodes() const { return nodes_; }
  std::size_t dim() const { return dim_; }

  std::span<double> operator[](std::size_t node) {
    return {data_.data() + node * dim_, dim_};
  }
  std::span<const double> operator[](std::size_t node) const {
    return {data_.data() + node * dim_, dim_};
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool same_shape(const AmbientField& other) const {
    return nodes_ == other.nodes_ && dim_ == other.dim_;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double x) { return std::isfinite(x); });
  }

  bool operator==(const AmbientField&) const = default;

 private:
  std::size_t nodes_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// One AmbientField per axis. For forward differences the entry at node x
/// lives on the face between x and x + e_axis.
using FaceField = std::vector<AmbientField>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm_sq(std::span<const double> a) { return dot(a, a); }

/// Max node-wise Euclidean distance between two maps.
inline double sup_distance(const AmbientField& u1, const AmbientField& u2) {
  if (!u1.same_shape(u2))
    throw std::invalid_argument("sup_distance: shape mismatch");
  double best = 0.0;
  for (std::size_t x = 0; x < u1.nodes(); ++x) {
    double d = 0.0;
    auto a = u1[x];
    auto b = u2[x];
    for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
    best = std::max(best, std::sqrt(d));
  }
  return best;
}

}  // namespace pflow
