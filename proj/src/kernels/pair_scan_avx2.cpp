// AVX2 variant of the pair scan. Four pairs per iteration: gather the four
// slot metrics and phis, mask ineligible lanes to -inf, keep a running
// lane-wise maximum, then reduce with the same lowest-index tie-break the
// scalar kernel uses. All lane arithmetic matches the scalar operation order,
// so results are bit-identical.

#if defined(__x86_64__)

#include <immintrin.h>

#include <limits>

#include "xorflow/kernels.hpp"

namespace xorflow {

bool avx2_available() {
#if defined(__GNUC__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

ScanBest scan_best_avx2(const PairScanView& v) {
  const double ninf = -std::numeric_limits<double>::infinity();
  ScanBest best;
  double bw = ninf;

  std::size_t i = 0;
  if (v.n >= 4 && avx2_available()) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d vninf = _mm256_set1_pd(ninf);
    __m256d lane_w = vninf;
    __m256d lane_idx = _mm256_setzero_pd();  // pair indices fit doubles exactly
    __m256d cur_idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
    const __m256d four = _mm256_set1_pd(4.0);

    for (; i + 4 <= v.n; i += 4) {
      __m128i io1 = _mm_loadu_si128((const __m128i*)(v.o1 + i));
      __m128i io2 = _mm_loadu_si128((const __m128i*)(v.o2 + i));
      __m128i id1 = _mm_loadu_si128((const __m128i*)(v.d1 + i));
      __m128i id2 = _mm_loadu_si128((const __m128i*)(v.d2 + i));

      __m256d m = _mm256_cmp_pd(_mm256_i32gather_pd(v.metric, io1, 8), zero, _CMP_GT_OQ);
      m = _mm256_and_pd(m, _mm256_cmp_pd(_mm256_i32gather_pd(v.metric, io2, 8), zero, _CMP_GT_OQ));
      m = _mm256_and_pd(m, _mm256_cmp_pd(_mm256_i32gather_pd(v.metric, id1, 8), zero, _CMP_GT_OQ));
      m = _mm256_and_pd(m, _mm256_cmp_pd(_mm256_i32gather_pd(v.metric, id2, 8), zero, _CMP_GT_OQ));

      __m256d w = _mm256_sub_pd(
          _mm256_add_pd(_mm256_i32gather_pd(v.phi, io1, 8), _mm256_i32gather_pd(v.phi, io2, 8)),
          _mm256_add_pd(_mm256_i32gather_pd(v.phi, id1, 8), _mm256_i32gather_pd(v.phi, id2, 8)));
      w = _mm256_blendv_pd(vninf, w, m);

      // Strict > keeps the earliest index within each lane stream.
      __m256d gt = _mm256_cmp_pd(w, lane_w, _CMP_GT_OQ);
      lane_w = _mm256_blendv_pd(lane_w, w, gt);
      lane_idx = _mm256_blendv_pd(lane_idx, cur_idx, gt);
      cur_idx = _mm256_add_pd(cur_idx, four);
    }

    alignas(32) double ws[4], idxs[4];
    _mm256_store_pd(ws, lane_w);
    _mm256_store_pd(idxs, lane_idx);
    for (int lane = 0; lane < 4; ++lane) {
      if (ws[lane] == ninf) continue;
      std::int32_t idx = (std::int32_t)idxs[lane];
      if (ws[lane] > bw || (ws[lane] == bw && idx < best.idx)) {
        bw = ws[lane];
        best.idx = idx;
      }
    }
  }

  for (; i < v.n; ++i) {
    if (!(v.metric[v.o1[i]] > 0.0) || !(v.metric[v.o2[i]] > 0.0) ||
        !(v.metric[v.d1[i]] > 0.0) || !(v.metric[v.d2[i]] > 0.0))
      continue;
    const double w = (v.phi[v.o1[i]] + v.phi[v.o2[i]]) - (v.phi[v.d1[i]] + v.phi[v.d2[i]]);
    if (w > bw || (w == bw && (std::int32_t)i < best.idx)) {
      bw = w;
      best.idx = (std::int32_t)i;
    }
  }

  if (best.idx >= 0) best.w = bw;
  return best;
}

}  // namespace xorflow

#endif  // __x86_64__
