#include "oatdcc/grid1d.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oatdcc {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Multiply every n_grid block of every column by mult(k) in Fourier space.
template <typename Multiplier>
void fourier_multiply(const GridSpec& grid, MatrixXc& psi, Multiplier&& mult) {
  const int n = grid.n_grid;
  if (psi.rows() % n != 0) throw std::invalid_argument("grid function length mismatch");
  Eigen::FFT<double> fft;
  std::vector<cplx> in(n), out(n);
  for (Eigen::Index col = 0; col < psi.cols(); ++col) {
    for (Eigen::Index block = 0; block < psi.rows() / n; ++block) {
      for (int j = 0; j < n; ++j) in[j] = psi(block * n + j, col);
      fft.fwd(out, in);
      for (int j = 0; j < n; ++j) out[j] *= mult(grid.k[j]);
      fft.inv(in, out);
      for (int j = 0; j < n; ++j) psi(block * n + j, col) = in[j];
    }
  }
}

}  // namespace

GridSpec build_grid(double half_width, int n_grid) {
  if (!(half_width > 0.0)) throw std::invalid_argument("grid half width must be positive");
  if (n_grid < 4 || !is_power_of_two(n_grid))
    throw std::invalid_argument("grid point count must be a power of two >= 4");
  GridSpec g;
  g.half_width = half_width;
  g.n_grid = n_grid;
  g.dx = 2.0 * half_width / n_grid;
  g.x.resize(n_grid);
  g.k.resize(n_grid);
  const double dk = std::numbers::pi / half_width;
  for (int j = 0; j < n_grid; ++j) {
    g.x[j] = -half_width + j * g.dx;
    g.k[j] = dk * (j < n_grid / 2 ? j : j - n_grid);
  }
  return g;
}

MatrixXc apply_kinetic(const GridSpec& grid, const MatrixXc& psi) {
  MatrixXc out = psi;
  fourier_multiply(grid, out, [](double k) { return cplx(0.5 * k * k, 0.0); });
  return out;
}

VectorXc apply_kinetic(const GridSpec& grid, const VectorXc& psi) {
  MatrixXc m = psi;
  return apply_kinetic(grid, m).col(0);
}

void kinetic_propagate(const GridSpec& grid, MatrixXc& psi, double t) {
  fourier_multiply(grid, psi, [t](double k) { return std::exp(-I * (0.5 * k * k * t)); });
}

double gaussian_well(const ModelParams& p, double x) {
  return -p.well_depth * std::exp(-x * x / (2.0 * p.well_width * p.well_width));
}

double soft_coulomb(const ModelParams& p, double x1, double x2) {
  const double d = p.squared_distance ? (x1 - x2) * (x1 - x2) : std::abs(x1 - x2);
  return p.interaction_strength / std::sqrt(d + p.softening * p.softening);
}

Eigen::VectorXd sample_potential(const GridSpec& grid, const ModelParams& p) {
  Eigen::VectorXd v(grid.n_grid);
  for (int j = 0; j < grid.n_grid; ++j) v[j] = gaussian_well(p, grid.x[j]);
  return v;
}

Eigen::MatrixXd sample_interaction(const GridSpec& grid, const ModelParams& p) {
  Eigen::MatrixXd v(grid.n_grid, grid.n_grid);
  for (int i = 0; i < grid.n_grid; ++i)
    for (int j = 0; j < grid.n_grid; ++j) v(i, j) = soft_coulomb(p, grid.x[i], grid.x[j]);
  return v;
}

Eigen::MatrixXd InteractionLowRank::reconstruct() const {
  return vectors * eigenvalues.asDiagonal() * vectors.transpose();
}

namespace {

struct SortedSpectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

SortedSpectrum sorted_spectrum(const Eigen::MatrixXd& kernel) {
  if (kernel.rows() != kernel.cols()) throw std::invalid_argument("kernel must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (kernel + kernel.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("interaction eigendecomposition failed");
  const Eigen::Index n = kernel.rows();
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]);
  });
  SortedSpectrum s{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    s.values[i] = es.eigenvalues()[order[i]];
    s.vectors.col(i) = es.eigenvectors().col(order[i]);
  }
  return s;
}

}  // namespace

InteractionLowRank decompose_interaction(const Eigen::MatrixXd& kernel, int rank) {
  if (rank < 1 || rank > kernel.rows()) throw std::invalid_argument("interaction rank out of range");
  auto s = sorted_spectrum(kernel);
  return {s.values.head(rank), s.vectors.leftCols(rank)};
}

int select_rank(const Eigen::MatrixXd& kernel, double rel_tol) {
  auto s = sorted_spectrum(kernel);
  const Eigen::Index n = s.values.size();
  if (n == 0 || s.values[0] == 0.0) return 0;
  for (Eigen::Index m = 1; m < n; ++m)
    if (std::abs(s.values[m]) / std::abs(s.values[0]) < rel_tol) return static_cast<int>(m);
  return static_cast<int>(n);
}

}  // namespace oatdcc
