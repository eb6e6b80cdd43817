#include "conederiv/linalg.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "conederiv/errors.hpp"

namespace conederiv {

namespace {

constexpr double kOrthonormalTol = 1e-12;
constexpr double kRankTol = 1e-10;

void require_dim(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(expected) +
                            ", got " + std::to_string(got));
  }
}

}  // namespace

Subspace::Subspace(Matrix basis) : basis_(std::move(basis)) {
  if (basis_.rows() < 1) throw DimensionMismatch("subspace: ambient dimension must be positive");
  if (basis_.cols() > basis_.rows()) throw DimensionMismatch("subspace: more basis vectors than ambient dimension");
  if (!basis_.allFinite()) throw std::invalid_argument("subspace: non-finite basis entry");
  if (basis_.cols() > 0) {
    const Matrix gram = basis_.transpose() * basis_;
    const Matrix eye = Matrix::Identity(basis_.cols(), basis_.cols());
    if ((gram - eye).cwiseAbs().maxCoeff() > kOrthonormalTol) {
      throw std::invalid_argument("subspace: basis columns are not orthonormal");
    }
  }
}

Subspace Subspace::zero(Eigen::Index ambient_dim) { return Subspace(Matrix(ambient_dim, 0)); }

Subspace Subspace::full(Eigen::Index ambient_dim) {
  return Subspace(Matrix::Identity(ambient_dim, ambient_dim));
}

Vec Subspace::coords(const Vec& u) const {
  require_dim(ambient_dim(), u.size(), "coords");
  return basis_.transpose() * u;
}

Subspace Subspace::complement() const {
  const Eigen::Index m = ambient_dim();
  Matrix cols(m, dim() + m);
  cols << basis_, Matrix::Identity(m, m);
  // Orthonormalize [basis | e_1..e_m] and keep the vectors past the first k.
  const Subspace all = orthonormalize(cols);
  return Subspace(all.basis().rightCols(m - dim()));
}

LinearMap::LinearMap(Subspace domain, Matrix matrix)
    : domain_(std::move(domain)), matrix_(std::move(matrix)) {
  require_dim(domain_.dim(), matrix_.cols(), "linear map columns");
  if (!matrix_.allFinite()) throw std::invalid_argument("linear map: non-finite entry");
}

LinearMap LinearMap::zero(Subspace domain, Eigen::Index out_dim) {
  const Eigen::Index k = domain.dim();
  return LinearMap(std::move(domain), Matrix::Zero(out_dim, k));
}

Vec LinearMap::apply(const Vec& u) const { return matrix_ * domain_.coords(u); }

Subspace orthonormalize(std::span<const Vec> spanning_vectors, Eigen::Index ambient_dim) {
  Matrix cols(ambient_dim, static_cast<Eigen::Index>(spanning_vectors.size()));
  for (Eigen::Index j = 0; j < cols.cols(); ++j) {
    require_dim(ambient_dim, spanning_vectors[static_cast<std::size_t>(j)].size(), "orthonormalize");
    cols.col(j) = spanning_vectors[static_cast<std::size_t>(j)];
  }
  return orthonormalize(cols);
}

Subspace orthonormalize(const Matrix& columns) {
  const Eigen::Index m = columns.rows();
  if (!columns.allFinite()) throw std::invalid_argument("orthonormalize: non-finite entry");
  double scale = 0.0;
  for (Eigen::Index j = 0; j < columns.cols(); ++j) scale = std::max(scale, columns.col(j).norm());

  std::vector<Vec> kept;
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Vec w = columns.col(j);
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vec& q : kept) w -= q.dot(w) * q;
    }
    const double norm = w.norm();
    if (norm <= kRankTol * std::max(scale, 1e-300) || norm == 0.0) continue;
    kept.push_back(w / norm);
    if (static_cast<Eigen::Index>(kept.size()) == m) break;
  }
  Matrix basis(m, static_cast<Eigen::Index>(kept.size()));
  for (Eigen::Index j = 0; j < basis.cols(); ++j) basis.col(j) = kept[static_cast<std::size_t>(j)];
  return Subspace(std::move(basis));
}

Vec project(const Subspace& v, const Vec& u) {
  require_dim(v.ambient_dim(), u.size(), "project");
  return v.basis() * (v.basis().transpose() * u);
}

double dist_to_subspace(const Subspace& v, const Vec& u) { return (u - project(v, u)).norm(); }

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double operator_norm(const LinearMap& l) { return spectral_norm(l.matrix()); }

double min_gain(const LinearMap& l) {
  const Matrix& a = l.matrix();
  // The empty map (k = 0) is reported as 0.
  if (a.cols() == 0 || a.rows() == 0) return 0.0;
  if (a.rows() < a.cols()) return 0.0;  // wide matrix: nontrivial kernel
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace conederiv
