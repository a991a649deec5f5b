#include "oracles.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#include <unistd.h>

namespace rpft::testing {

Grid to_grid(const Matrix& m) {
  Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    }
  }
  return g;
}

Matrix from_grid(const Grid& g) {
  const auto rows = static_cast<Eigen::Index>(g.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(g[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

Grid gauss_jordan_inverse(Grid a) {
  const std::size_t n = a.size();
  Grid inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    if (std::fabs(a[pivot][col]) < 1e-300) throw std::runtime_error("singular matrix");
    std::swap(a[pivot], a[col]);
    std::swap(inv[pivot], inv[col]);
    const double p = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= p;
      inv[col][j] /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

Grid inverse_2x2(double a, double b, double c, double d) {
  const double det = a * d - b * c;
  return {{d / det, -b / det}, {-c / det, a / det}};
}

Grid multiply(const Grid& a, const Grid& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t p = m == 0 ? 0 : b[0].size();
  Grid out(n, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t j = 0; j < p; ++j) out[i][j] += a[i][k] * b[k][j];
    }
  }
  return out;
}

std::vector<long double> softmax_ld(const std::vector<long double>& z) {
  long double hi = z.front();
  for (long double v : z) hi = std::max(hi, v);
  long double total = 0.0L;
  std::vector<long double> p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - hi);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

long double kl_ld(const std::vector<long double>& p, const std::vector<long double>& q) {
  long double out = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double pi = std::max(p[i], 1e-12L);
    const long double qi = std::max(q[i], 1e-12L);
    out += pi * std::log(pi / qi);
  }
  return out;
}

double gaussian_distance_oracle(const std::vector<double>& x, const std::vector<double>& a,
                                double beta) {
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - a[i]) * (x[i] - a[i]);
  return std::exp(-beta * sq / 2.0);
}

double dot(const std::vector<double>& x, const std::vector<double>& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * a[i];
  return s;
}

std::vector<double> row(const Matrix& m, Eigen::Index i) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

Matrix random_unit_rows(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    m.row(i).normalize();
  }
  return m;
}

Matrix random_spd(Rng& rng, Eigen::Index n, double shift) {
  Matrix b(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) b(i, j) = rng.normal();
  }
  Matrix s = b * b.transpose();
  s.diagonal().array() += shift;
  return 0.5 * (s + s.transpose());
}

FeatureBundle labeled_bundle(const Matrix& data, int classes, std::vector<int> labels,
                             bool normalized) {
  BundleParts p;
  p.data = data;
  p.kind = FeatureKind::Image;
  p.class_count = classes;
  p.labels = std::move(labels);
  p.l2_normalized = normalized;
  return FeatureBundle(std::move(p));
}

FeatureBundle text_bundle(const Matrix& data, bool normalized) {
  BundleParts p;
  p.data = data;
  p.kind = FeatureKind::Text;
  p.class_count = static_cast<int>(data.rows());
  p.l2_normalized = normalized;
  return FeatureBundle(std::move(p));
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("rpft-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace rpft::testing
