#pragma once

#include <cstddef>

// Dense kernels behind the tensor ops. The scorelab::kernels variants are
// OpenMP-parallel over output rows; every output element is written by exactly
// one iteration and its inner accumulation order is fixed, so results are
// bit-identical for any thread count. scorelab::reference holds the serial
// twins used by the parity tests and the benchmark.

namespace scorelab::kernels {

// Parallelize above this many multiply-adds.
inline constexpr std::size_t kParallelMacThreshold = 1u << 15;

// c[m,n] (+)= a[m,k] * b[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);

// c[m,n] (+)= a[m,k] * b[n,k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);

// c[m,n] (+)= a[k,m]^T * b[k,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t k,
             std::size_t m, std::size_t n, bool accumulate);

}  // namespace scorelab::kernels

namespace scorelab::reference {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, std::size_t k,
             std::size_t m, std::size_t n, bool accumulate);

}  // namespace scorelab::reference
