#pragma once

// Dense double-precision inner loops shared by the encoder and the task heads.
//
// Every kernel has a scalar reference implementation. Vector variants (AVX2+FMA
// on x86-64, NEON on aarch64) are compiled into separate translation units and
// picked at runtime from the CPU feature set. PHILOKIT_KERNELS=scalar|avx2|neon
// forces a backend; select() does the same programmatically.

#include <cstddef>
#include <span>
#include <string_view>

namespace philokit::kernels {

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend b);

/// Function table for one backend. Matrices are row-major.
struct KernelTable {
  Backend backend;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x, A is rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += A^T x, A is rows x cols, x has rows entries, y has cols entries
  void (*gemv_t_acc)(const double* a, std::size_t rows, std::size_t cols, const double* x,
                     double* y);
  // A += alpha * x y^T, x has rows entries, y has cols entries
  void (*ger)(double alpha, const double* x, std::size_t rows, const double* y, std::size_t cols,
              double* a);
};

const KernelTable& scalar_table();
#if defined(PHILOKIT_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(PHILOKIT_HAVE_NEON)
const KernelTable& neon_table();
#endif

/// True when the backend was compiled in and the running CPU supports it.
bool available(Backend b);

/// Table for a specific backend; throws philokit::Error when unavailable.
const KernelTable& table(Backend b);

/// Currently selected table.
const KernelTable& active();

/// Override the runtime choice. Not thread-safe; call before starting work.
void select(Backend b);

/// Best available backend for this CPU.
Backend detect();

// Span front-ends over the active table. Sizes are checked.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y);
void gemv_t_acc(std::span<const double> a, std::size_t rows, std::size_t cols,
                std::span<const double> x, std::span<double> y);
void ger(double alpha, std::span<const double> x, std::span<const double> y, std::span<double> a);

}  // namespace philokit::kernels
