#include "raest/kernels.hpp"

#include "kernels_impl.hpp"
#include "raest/errors.hpp"

#include <cstdlib>
#include <cstring>

namespace raest::kernels {
namespace {

constexpr KernelTable kScalar{"scalar", detail::dot_scalar, detail::weighted_dot_scalar,
                              detail::sum_scalar, detail::axpy_scalar};

#if defined(RAEST_HAVE_AVX2)
constexpr KernelTable kAvx2{"avx2", detail::dot_avx2, detail::weighted_dot_avx2,
                            detail::sum_avx2, detail::axpy_avx2};
#endif

const KernelTable& select() noexcept {
  if (const char* forced = std::getenv("RAEST_KERNELS");
      forced != nullptr && std::strcmp(forced, "scalar") == 0) {
    return kScalar;
  }
  if (const KernelTable* t = avx2_table()) return *t;
  return kScalar;
}

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::DimensionMismatch, "kernel operands differ in length");
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(RAEST_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kAvx2;
#endif
  return nullptr;
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size());
  return active().dot(a.data(), b.data(), a.size());
}

double weighted_dot(std::span<const double> a, std::span<const double> b,
                    std::span<const double> w) {
  require_same_size(a.size(), b.size());
  require_same_size(a.size(), w.size());
  return active().weighted_dot(a.data(), b.data(), w.data(), a.size());
}

double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& z, std::span<const double> w,
                              const KernelTable& table) {
  const auto m = static_cast<std::size_t>(z.rows());
  require_same_size(m, w.size());
  const Eigen::Index p = z.cols();
  Eigen::MatrixXd out(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = j; k < p; ++k) {
      out(j, k) = table.weighted_dot(z.col(j).data(), z.col(k).data(), w.data(), m);
      out(k, j) = out(j, k);
    }
  }
  return out;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& z, const KernelTable& table) {
  const auto m = static_cast<std::size_t>(z.rows());
  const Eigen::Index p = z.cols();
  Eigen::MatrixXd out(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = j; k < p; ++k) {
      out(j, k) = table.dot(z.col(j).data(), z.col(k).data(), m);
      out(k, j) = out(j, k);
    }
  }
  return out;
}

Eigen::VectorXd cross(const Eigen::MatrixXd& z, const Eigen::VectorXd& r,
                      const KernelTable& table) {
  const auto m = static_cast<std::size_t>(z.rows());
  require_same_size(m, static_cast<std::size_t>(r.size()));
  Eigen::VectorXd out(z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) out(j) = table.dot(z.col(j).data(), r.data(), m);
  return out;
}

Eigen::VectorXd column_means(const Eigen::MatrixXd& z, const KernelTable& table) {
  Eigen::VectorXd out(z.cols());
  const auto m = static_cast<std::size_t>(z.rows());
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    out(j) = table.sum(z.col(j).data(), m) / static_cast<double>(m);
  return out;
}

}  // namespace raest::kernels
