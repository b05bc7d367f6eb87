#include "timewalk/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "kernel_elements.hpp"

namespace tw::kernels {

namespace {

bool avx2_supported() {
#if defined(TW_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect_backend() {
  if (const char* env = std::getenv("TW_KERNEL")) {
    Backend b = parse_backend(env);
    if (b != Backend::Auto) {
      if (b == Backend::Avx2 && !avx2_supported()) return Backend::Scalar;
      return b;
    }
  }
  return avx2_supported() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend> g_backend{detect_backend()};

} // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::Auto) {
    g_backend.store(avx2_supported() ? Backend::Avx2 : Backend::Scalar,
                    std::memory_order_relaxed);
    return;
  }
  if (b == Backend::Avx2 && !avx2_supported())
    throw ConfigError("AVX2 kernels are not available on this CPU/build");
  g_backend.store(b, std::memory_order_relaxed);
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::Auto: return "auto";
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "?";
}

Backend parse_backend(const std::string& name) {
  if (name == "auto") return Backend::Auto;
  if (name == "scalar") return Backend::Scalar;
  if (name == "avx2") return Backend::Avx2;
  throw ConfigError("unknown kernel backend '" + name +
                    "' (expected auto|scalar|avx2)");
}

void correct_tags(const int64_t* t, size_t n, const DelayLut& lut,
                  int64_t* out) {
  if (!lut.valid()) throw ConfigError("delay lookup table needs >= 2 nodes");
#if defined(TW_HAVE_AVX2)
  if (active_backend() == Backend::Avx2) {
    detail::correct_tags_avx2(t, n, lut, out);
    return;
  }
#endif
  detail::correct_tags_scalar(t, n, lut, out);
}

int64_t correct_one(int64_t t, int64_t prev_t, const DelayLut& lut) {
  detail::LutView lv(lut);
  return detail::correct_element(t, prev_t, lv);
}

void clock_residuals(const int64_t* t, size_t n, double phase_ps,
                     double period_ps, int64_t* tick, double* resid) {
  if (!(period_ps > 0)) throw ConfigError("clock period must be > 0");
#if defined(TW_HAVE_AVX2)
  if (active_backend() == Backend::Avx2) {
    detail::clock_residuals_avx2(t, n, phase_ps, period_ps, tick, resid);
    return;
  }
#endif
  detail::clock_residuals_scalar(t, n, phase_ps, period_ps, tick, resid);
}

void bin_indices(const double* x, size_t n, double origin, double width,
                 int32_t nbins, int32_t* idx) {
  if (!(width > 0) || nbins <= 0)
    throw ConfigError("bin_indices: width must be > 0 and nbins >= 1");
#if defined(TW_HAVE_AVX2)
  if (active_backend() == Backend::Avx2) {
    detail::bin_indices_avx2(x, n, origin, width, nbins, idx);
    return;
  }
#endif
  detail::bin_indices_scalar(x, n, origin, width, nbins, idx);
}

} // namespace tw::kernels
