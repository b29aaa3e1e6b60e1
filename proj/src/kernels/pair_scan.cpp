#include <limits>

#include "xorflow/common.hpp"
#include "xorflow/kernels.hpp"

namespace xorflow {

ScanBest scan_best_scalar(const PairScanView& v) {
  ScanBest best;
  double bw = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.n; ++i) {
    if (!(v.metric[v.o1[i]] > 0.0) || !(v.metric[v.o2[i]] > 0.0) ||
        !(v.metric[v.d1[i]] > 0.0) || !(v.metric[v.d2[i]] > 0.0))
      continue;
    const double w = (v.phi[v.o1[i]] + v.phi[v.o2[i]]) - (v.phi[v.d1[i]] + v.phi[v.d2[i]]);
    if (w > bw) {
      bw = w;
      best.idx = (std::int32_t)i;
    }
  }
  if (best.idx >= 0) best.w = bw;
  return best;
}

#if !defined(__x86_64__)
bool avx2_available() { return false; }
ScanBest scan_best_avx2(const PairScanView& v) { return scan_best_scalar(v); }
#endif

ScanKernelFn select_scan_kernel(const std::string& name) {
  if (name == "scalar") return &scan_best_scalar;
  if (name == "avx2") {
    if (!avx2_available()) throw ConfigError("avx2 kernel requested but not supported here");
    return &scan_best_avx2;
  }
  if (name == "auto" || name.empty())
    return avx2_available() ? &scan_best_avx2 : &scan_best_scalar;
  throw ConfigError("unknown kernel '" + name + "' (expected auto|scalar|avx2)");
}

const char* scan_kernel_name(ScanKernelFn fn) {
  return fn == &scan_best_avx2 && avx2_available() ? "avx2" : "scalar";
}

}  // namespace xorflow
