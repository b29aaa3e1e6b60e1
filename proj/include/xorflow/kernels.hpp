#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace xorflow {

// SoA view over one link's pair slots. o*/d* hold track indices (0 = unused
// slot; the sentinel track has phi 0 and metric 1). A pair is eligible when
// all four slot metrics are positive; its weight is
// (phi[o1]+phi[o2]) - (phi[d1]+phi[d2]) evaluated in exactly that order, so
// every kernel reproduces the same doubles bit for bit.
struct PairScanView {
  const std::int32_t* o1 = nullptr;
  const std::int32_t* o2 = nullptr;
  const std::int32_t* d1 = nullptr;
  const std::int32_t* d2 = nullptr;
  std::size_t n = 0;
  const double* phi = nullptr;
  const double* metric = nullptr;
};

struct ScanBest {
  std::int32_t idx = -1;  // lowest index among maxima; -1 when nothing eligible
  double w = 0.0;
};

using ScanKernelFn = ScanBest (*)(const PairScanView&);

ScanBest scan_best_scalar(const PairScanView& v);

bool avx2_available();
// Defined on x86-64 builds; elsewhere it aliases the scalar kernel.
ScanBest scan_best_avx2(const PairScanView& v);

// name: "auto" | "scalar" | "avx2". Throws ConfigError for an unsupported
// explicit request.
ScanKernelFn select_scan_kernel(const std::string& name);
const char* scan_kernel_name(ScanKernelFn fn);

}  // namespace xorflow
