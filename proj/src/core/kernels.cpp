#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"
#include "mkv/error.hpp"

namespace mkv::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(MKV_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& pick() {
  const char* env = std::getenv("MKV_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return detail::kScalarTable;
  if (const KernelTable* t = avx2_table()) return *t;
  return detail::kScalarTable;
}

void require_same(std::size_t a, std::size_t b) {
  if (a != b) throw DimensionError("kernel operands differ in length");
}

}  // namespace

const KernelTable& scalar_table() { return detail::kScalarTable; }

const KernelTable* avx2_table() {
#if defined(MKV_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = pick();
  return table;
}

double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

double dot(std::span<const double> x, std::span<const double> y) {
  require_same(x.size(), y.size());
  return active().dot(x.data(), y.data(), x.size());
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size());
  return active().sum_sq_diff(a.data(), b.data(), a.size());
}

void euler_step(std::span<double> out, std::span<const double> x, std::span<const double> drift,
                std::span<const double> dw, double dt, double sigma) {
  require_same(out.size(), x.size());
  require_same(out.size(), drift.size());
  require_same(out.size(), dw.size());
  active().euler_step(out.data(), x.data(), drift.data(), dw.data(), dt, sigma, out.size());
}

void blend(std::span<double> out, std::span<const double> a, std::span<const double> b, double wa,
           double wb) {
  require_same(out.size(), a.size());
  require_same(out.size(), b.size());
  active().blend(out.data(), a.data(), b.data(), wa, wb, out.size());
}

void standardize(std::span<double> out, std::span<const double> x, double shift, double scale) {
  require_same(out.size(), x.size());
  active().standardize(out.data(), x.data(), shift, scale, out.size());
}

JointMoments joint_moments(std::span<const double> u, std::span<const double> w,
                           std::span<const double> v, std::size_t degree) {
  require_same(u.size(), w.size());
  require_same(u.size(), v.size());
  if (degree > kMaxDegree) throw CapabilityError("regression degree above 5 is not supported");
  JointMoments m{};
  active().joint_moments(u.data(), w.data(), v.data(), u.size(), degree, m);
  return m;
}

void polyval(std::span<double> out, std::span<const double> coeffs, std::span<const double> u) {
  require_same(out.size(), u.size());
  active().polyval(out.data(), coeffs.data(), coeffs.size(), u.data(), u.size());
}

}  // namespace mkv::kernels
