#include "timewalk/kernels.hpp"

#include "kernel_elements.hpp"

namespace tw::kernels::detail {

void correct_tags_scalar(const int64_t* t, size_t n, const DelayLut& lut,
                         int64_t* out) {
  if (n == 0) return;
  LutView lv(lut);
  out[0] = t[0];
  for (size_t i = 1; i < n; ++i) {
    out[i] = correct_element(t[i], t[i - 1], lv);
  }
}

void clock_residuals_scalar(const int64_t* t, size_t n, double phase_ps,
                            double period_ps, int64_t* tick, double* resid) {
  double inv_period = 1.0 / period_ps;
  for (size_t i = 0; i < n; ++i) {
    residual_element(t[i], phase_ps, inv_period, period_ps, &tick[i], &resid[i]);
  }
}

void bin_indices_scalar(const double* x, size_t n, double origin, double width,
                        int32_t nbins, int32_t* idx) {
  double inv_width = 1.0 / width;
  double nb1 = static_cast<double>(nbins - 1);
  for (size_t i = 0; i < n; ++i) {
    idx[i] = bin_index_element(x[i], origin, inv_width, nb1);
  }
}

} // namespace tw::kernels::detail
