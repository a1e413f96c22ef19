#include "spatialqq/numerics.hpp"

#include <cmath>
#include <limits>

#include "spatialqq/error.hpp"

namespace sqq {

namespace {

std::vector<std::string> default_names(Index d) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

}  // namespace

DataMatrix::DataMatrix(RowMatrix values, std::vector<std::string> names)
    : values_(std::move(values)), names_(std::move(names)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw Error(ErrorKind::InvalidArgument, "DataMatrix needs n >= 1 and d >= 1");
  }
  if (!values_.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "DataMatrix entries must be finite");
  }
  if (names_.empty()) {
    names_ = default_names(values_.cols());
  } else if (static_cast<Index>(names_.size()) != values_.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "column name count does not match d");
  }
}

DataMatrix DataMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> copy;
  for (const auto& r : rows) copy.emplace_back(r);
  return from_rows(copy);
}

DataMatrix DataMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw Error(ErrorKind::InvalidArgument, "DataMatrix needs n >= 1 and d >= 1");
  }
  const auto d = static_cast<Index>(rows.front().size());
  RowMatrix values(static_cast<Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Index>(rows[i].size()) != d) {
      throw Error(ErrorKind::ShapeMismatch, "ragged row " + std::to_string(i));
    }
    for (Index j = 0; j < d; ++j) values(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  return DataMatrix(std::move(values));
}

DataMatrix pool(const DataMatrix& x, const DataMatrix& y) {
  if (x.cols() != y.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "pooled samples must share dimension");
  }
  RowMatrix values(x.rows() + y.rows(), x.cols());
  values.topRows(x.rows()) = x.values();
  values.bottomRows(y.rows()) = y.values();
  return DataMatrix(std::move(values), x.names());
}

Vector column_mean(const DataMatrix& x) {
  return x.values().colwise().mean().transpose();
}

Matrix mle_dispersion(const DataMatrix& x) {
  const Vector mu = column_mean(x);
  const Matrix centered = x.values().rowwise() - mu.transpose();
  return (centered.transpose() * centered) / static_cast<double>(x.rows());
}

StandardizationTransform StandardizationTransform::identity(Index d) {
  return {Vector::Zero(d), Matrix::Identity(d, d), Matrix::Identity(d, d)};
}

StandardizationTransform fit_standardization(const DataMatrix& x) {
  const Index d = x.cols();
  StandardizationTransform t;
  t.mean = column_mean(x);
  t.dispersion = mle_dispersion(x);
  const double trace = t.dispersion.trace();
  Eigen::SelfAdjointEigenSolver<Matrix> es(t.dispersion, Eigen::EigenvaluesOnly);
  const double smallest = es.eigenvalues().minCoeff();
  if (!(trace > 0.0) || smallest < 1e-12 * trace / static_cast<double>(d)) {
    throw Error(ErrorKind::SingularDispersion,
                "sample dispersion is singular (n = " + std::to_string(x.rows()) +
                    ", d = " + std::to_string(d) + ")");
  }
  Eigen::LLT<Matrix> llt(t.dispersion);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularDispersion, "Cholesky of sample dispersion failed");
  }
  t.factor = llt.matrixL();
  return t;
}

DataMatrix apply_standardization(const DataMatrix& x, const StandardizationTransform& t) {
  const Index d = x.cols();
  if (t.mean.size() != d || t.factor.rows() != d || t.factor.cols() != d) {
    throw Error(ErrorKind::ShapeMismatch, "standardization dimension does not match data");
  }
  Matrix centered = (x.values().rowwise() - t.mean.transpose()).transpose();
  t.factor.triangularView<Eigen::Lower>().solveInPlace(centered);
  return DataMatrix(RowMatrix(centered.transpose()), x.names());
}

SymEigen sym_eigen(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::NotSymmetric, "matrix is not square");
  }
  const double scale = std::max(m.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw Error(ErrorKind::NotSymmetric, "relative asymmetry exceeds 1e-8");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::NotSymmetric, "eigen decomposition failed");
  }
  const Index k = m.rows();
  SymEigen out{Vector(k), Matrix(k, k)};
  for (Index i = 0; i < k; ++i) {
    out.values(i) = es.eigenvalues()(k - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(k - 1 - i);
  }
  return out;
}

namespace {

// Semidefinite-tolerant Cholesky: a non-positive pivot is accepted as a zero
// column only when the rest of the column vanishes too.
bool try_cholesky(const Matrix& a, double zero_tol, Matrix& l) {
  const Index k = a.rows();
  l.setZero(k, k);
  for (Index j = 0; j < k; ++j) {
    double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (pivot > zero_tol) {
      const double root = std::sqrt(pivot);
      l(j, j) = root;
      for (Index i = j + 1; i < k; ++i) {
        l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / root;
      }
      continue;
    }
    if (pivot < -zero_tol) return false;
    for (Index i = j + 1; i < k; ++i) {
      const double off = a(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
      if (std::abs(off) > zero_tol) return false;
    }
  }
  return true;
}

}  // namespace

CholeskyResult cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::NotFactorizable, "matrix is not square");
  }
  const Index k = m.rows();
  CholeskyResult out;
  if (k == 0) return out;
  const double scale = std::max(m.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw Error(ErrorKind::NotFactorizable, "matrix is not symmetric");
  }
  const double unit = std::abs(m.trace()) / static_cast<double>(k);
  // Pivots below this are treated as exact zeros (rounding noise).
  const double zero_tol = 64.0 * std::numeric_limits<double>::epsilon() * scale * static_cast<double>(k);
  constexpr double ladder[] = {0.0, 1e-12, 1e-10, 1e-8, 1e-6};
  Matrix shifted = m;
  for (double step : ladder) {
    const double eps = step * unit;
    shifted.diagonal() = m.diagonal().array() + eps;
    if (try_cholesky(shifted, step == 0.0 ? zero_tol : 0.0, out.factor)) {
      out.jitter = eps;
      return out;
    }
  }
  throw Error(ErrorKind::NotFactorizable, "jitter ladder exhausted");
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id) {
  const std::uint64_t a = mix64(master_seed);
  const std::uint64_t b = mix64(stream_id ^ 0x5851f42d4c957f2dULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  engine_.seed(seq);
}

RngStream RngStream::derive(std::uint64_t tag) const {
  return RngStream(master_seed_, mix64(stream_id_ * 0x2545f4914f6cdd1dULL + mix64(tag)));
}

double RngStream::uniform() {
  return std::generate_canonical<double, 53>(engine_);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

double RngStream::chi_square(double dof) {
  std::chi_squared_distribution<double> dist(dof);
  return dist(engine_);
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  std::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
  return dist(engine_);
}

Vector RngStream::normal_vector(Index d) {
  Vector v(d);
  for (Index i = 0; i < d; ++i) v(i) = normal();
  return v;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) {
  constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

}  // namespace sqq
