#include <cstdlib>
#include <string>

#include "philokit/error.hpp"
#include "philokit/kernels.hpp"

namespace philokit::kernels {
namespace {

Backend from_env(Backend fallback) {
  const char* v = std::getenv("PHILOKIT_KERNELS");
  if (v == nullptr) return fallback;
  const std::string s(v);
  if (s == "scalar") return Backend::scalar;
  if (s == "avx2" && available(Backend::avx2)) return Backend::avx2;
  if (s == "neon" && available(Backend::neon)) return Backend::neon;
  return fallback;
}

const KernelTable*& current() {
  static const KernelTable* t = &table(from_env(detect()));
  return t;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

bool available(Backend b) {
  switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2:
#if defined(PHILOKIT_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(PHILOKIT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Backend b) {
  if (!available(b)) throw Error("kernel backend not available: " + std::string(backend_name(b)));
  switch (b) {
#if defined(PHILOKIT_HAVE_AVX2)
    case Backend::avx2: return avx2_table();
#endif
#if defined(PHILOKIT_HAVE_NEON)
    case Backend::neon: return neon_table();
#endif
    default: return scalar_table();
  }
}

Backend detect() {
  if (available(Backend::avx2)) return Backend::avx2;
  if (available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

const KernelTable& active() { return *current(); }

void select(Backend b) { current() = &table(b); }

namespace {
void check(bool ok, const char* what) {
  if (!ok) throw Error(std::string("kernel size mismatch: ") + what);
}
}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  check(a.size() == b.size(), "dot");
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check(x.size() == y.size(), "axpy");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y) {
  check(a.size() == rows * cols && x.size() == cols && y.size() == rows, "gemv");
  active().gemv(a.data(), rows, cols, x.data(), y.data());
}

void gemv_t_acc(std::span<const double> a, std::size_t rows, std::size_t cols,
                std::span<const double> x, std::span<double> y) {
  check(a.size() == rows * cols && x.size() == rows && y.size() == cols, "gemv_t_acc");
  active().gemv_t_acc(a.data(), rows, cols, x.data(), y.data());
}

void ger(double alpha, std::span<const double> x, std::span<const double> y, std::span<double> a) {
  check(a.size() == x.size() * y.size(), "ger");
  active().ger(alpha, x.data(), x.size(), y.data(), y.size(), a.data());
}

}  // namespace philokit::kernels
