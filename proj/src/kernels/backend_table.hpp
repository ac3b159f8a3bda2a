#pragma once

#include <cstddef>

// Internal kernel backend table. Each backend fills every slot; the
// dispatcher in dispatch.cpp picks one table at startup.

namespace adaseg::kern::detail {

struct Table {
  void (*gemm_nn_f32)(int, int, int, const float*, const float*, float*, bool);
  void (*gemm_nn_f64)(int, int, int, const double*, const double*, double*,
                      bool);
  void (*gemm_nt_f32)(int, int, int, const float*, const float*, float*, bool);
  void (*gemm_nt_f64)(int, int, int, const double*, const double*, double*,
                      bool);
  void (*gemm_tn_f32)(int, int, int, const float*, const float*, float*, bool);
  void (*gemm_tn_f64)(int, int, int, const double*, const double*, double*,
                      bool);

  void (*leaky_fwd_f32)(const float*, float*, std::size_t, float);
  void (*leaky_fwd_f64)(const double*, double*, std::size_t, double);
  void (*leaky_bwd_f32)(const float*, const float*, float*, std::size_t,
                        float);
  void (*leaky_bwd_f64)(const double*, const double*, double*, std::size_t,
                        double);

  void (*clamp_f32)(float*, std::size_t, float, float);
  void (*clamp_f64)(double*, std::size_t, double, double);

  void (*axpy_f32)(std::size_t, float, const float*, float*);
  void (*axpy_f64)(std::size_t, double, const double*, double*);

  void (*scale_f32)(float*, std::size_t, float);
  void (*scale_f64)(double*, std::size_t, double);

  void (*add_f32)(const float*, const float*, float*, std::size_t);
  void (*add_f64)(const double*, const double*, double*, std::size_t);

  void (*mul_f32)(const float*, const float*, float*, std::size_t);
  void (*mul_f64)(const double*, const double*, double*, std::size_t);
};

const Table& scalar_table();
// Null when the binary or the CPU lacks AVX2.
const Table* avx2_table();

// Column-block width shared by both backends so task shapes line up.
inline constexpr int kColBlock = 256;

}  // namespace adaseg::kern::detail
