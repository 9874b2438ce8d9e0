#pragma once

// Data-parallel inner loops shared by the estimators: dot products,
// weighted Gram matrices and column sums. Each primitive has a scalar
// reference implementation and, on x86-64, an AVX2/FMA variant selected at
// runtime. The two variants sum in a different order, so they agree to
// rounding, not bitwise; a given process always uses one table.

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace raest::kernels {

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*weighted_dot)(const double* a, const double* b, const double* w, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

/// AVX2 table, or nullptr when it was not compiled in or the CPU lacks
/// AVX2/FMA.
const KernelTable* avx2_table() noexcept;

/// Table used by the library. Picks AVX2 when available unless the
/// environment variable RAEST_KERNELS=scalar is set at first use.
const KernelTable& active() noexcept;

/// Contiguous view of a vector's storage.
inline std::span<const double> view(const Eigen::VectorXd& v) noexcept {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

double dot(std::span<const double> a, std::span<const double> b);
double weighted_dot(std::span<const double> a, std::span<const double> b,
                    std::span<const double> w);
double sum(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Z' diag(w) Z. Upper triangle computed, lower mirrored, so the result is
/// exactly symmetric.
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& z, std::span<const double> w,
                              const KernelTable& table = active());
/// Z' Z.
Eigen::MatrixXd gram(const Eigen::MatrixXd& z, const KernelTable& table = active());
/// Z' r.
Eigen::VectorXd cross(const Eigen::MatrixXd& z, const Eigen::VectorXd& r,
                      const KernelTable& table = active());
/// Column means.
Eigen::VectorXd column_means(const Eigen::MatrixXd& z, const KernelTable& table = active());

}  // namespace raest::kernels
