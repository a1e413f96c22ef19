#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sqq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

/// n observations in d dimensions, stored row-major so each observation is a
/// contiguous block. Entries are always finite.
class DataMatrix {
 public:
  explicit DataMatrix(RowMatrix values, std::vector<std::string> names = {});

  static DataMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DataMatrix from_rows(const std::vector<std::vector<double>>& rows);

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }

  const RowMatrix& values() const noexcept { return values_; }
  double operator()(Index i, Index j) const { return values_(i, j); }

  const double* row_data(Index i) const { return values_.data() + i * values_.cols(); }
  Eigen::Map<const Vector> row(Index i) const { return {row_data(i), values_.cols()}; }

  /// Column labels; defaults to "x1".."xd".
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  RowMatrix values_;
  std::vector<std::string> names_;
};

/// Vertical concatenation of two samples of equal dimension.
DataMatrix pool(const DataMatrix& x, const DataMatrix& y);

Vector column_mean(const DataMatrix& x);

/// Maximum-likelihood dispersion: divisor n.
Matrix mle_dispersion(const DataMatrix& x);

/// x -> factor^{-1} (x - mean), where factor * factor^T = dispersion.
struct StandardizationTransform {
  Vector mean;
  Matrix dispersion;
  Matrix factor;

  static StandardizationTransform identity(Index d);
};

StandardizationTransform fit_standardization(const DataMatrix& x);
DataMatrix apply_standardization(const DataMatrix& x, const StandardizationTransform& t);

struct SymEigen {
  Vector values;   // descending
  Matrix vectors;  // column k pairs with values(k)
};

SymEigen sym_eigen(const Matrix& m);

struct CholeskyResult {
  Matrix factor;  // lower triangular
  double jitter = 0.0;
};

/// Lower Cholesky factor of a symmetric positive-semidefinite matrix. Walks
/// the jitter ladder {0, 1e-12, 1e-10, 1e-8, 1e-6} * trace/d and reports the
/// first diagonal shift that lets the factorization succeed.
CholeskyResult cholesky(const Matrix& m);

/// Reproducible random stream identified by (master_seed, stream_id). Streams
/// are cheap to derive; each parallel task should own one.
class RngStream {
 public:
  using Engine = std::mt19937_64;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Independent child stream keyed by tag.
  RngStream derive(std::uint64_t tag) const;

  double uniform();  // [0, 1)
  double normal();
  double gamma(double shape);
  double chi_square(double dof);
  std::uint64_t below(std::uint64_t bound);  // uniform on [0, bound)
  Vector normal_vector(Index d);

  Engine& engine() noexcept { return engine_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// Standard normal CDF and density.
double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace sqq
