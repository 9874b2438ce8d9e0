#pragma once

#include <cstddef>

namespace raest::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
double weighted_dot_scalar(const double* a, const double* b, const double* w, std::size_t n);
double sum_scalar(const double* a, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);

#if defined(RAEST_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
double weighted_dot_avx2(const double* a, const double* b, const double* w, std::size_t n);
double sum_avx2(const double* a, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
#endif

}  // namespace raest::kernels::detail
