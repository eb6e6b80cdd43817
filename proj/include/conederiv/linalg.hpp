#pragma once

#include <Eigen/Dense>
#include <span>

namespace conederiv {

using Vec = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Linear subspace V of R^m held by an orthonormal basis (m x k, k may be 0).
class Subspace {
 public:
  /// Validates orthonormality of `basis` columns to 1e-12.
  explicit Subspace(Matrix basis);

  static Subspace zero(Eigen::Index ambient_dim);
  static Subspace full(Eigen::Index ambient_dim);

  Eigen::Index ambient_dim() const noexcept { return basis_.rows(); }
  Eigen::Index dim() const noexcept { return basis_.cols(); }
  const Matrix& basis() const noexcept { return basis_; }

  /// Coordinates of u over the basis (basis^T u).
  Vec coords(const Vec& u) const;

  /// Orthogonal complement, built from the ambient unit vectors.
  Subspace complement() const;

 private:
  Matrix basis_;
};

/// Candidate derivative L in L(V, R^n), stored over V-coordinates.
class LinearMap {
 public:
  LinearMap(Subspace domain, Matrix matrix);

  /// The zero map V -> R^n.
  static LinearMap zero(Subspace domain, Eigen::Index out_dim);

  const Subspace& domain() const noexcept { return domain_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  Eigen::Index out_dim() const noexcept { return matrix_.rows(); }

  /// L[u] for an ambient u already lying in V.
  Vec apply(const Vec& u) const;
  /// L applied to V-coordinates.
  Vec apply_coords(const Vec& c) const { return matrix_ * c; }

 private:
  Subspace domain_;
  Matrix matrix_;
};

/// Span of the vectors, reduced to numerical rank at relative tolerance 1e-10.
/// Input order and sign are kept (Gram-Schmidt), so [(1,1),(2,2)] gives (1,1)/sqrt(2).
Subspace orthonormalize(std::span<const Vec> spanning_vectors, Eigen::Index ambient_dim);
Subspace orthonormalize(const Matrix& columns);

Vec project(const Subspace& v, const Vec& u);
double dist_to_subspace(const Subspace& v, const Vec& u);

/// Largest singular value.
double operator_norm(const LinearMap& l);
/// Smallest singular value over the k-dimensional domain; > 0 iff injective.
double min_gain(const LinearMap& l);

double spectral_norm(const Matrix& m);

}  // namespace conederiv
