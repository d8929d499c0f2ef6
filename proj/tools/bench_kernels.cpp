// Times the OpenMP kernels against the serial reference implementations on a
// synthetic pair, and prints max deviation so a speedup never hides a drift.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "editforge/diffmask.hpp"
#include "editforge/image.hpp"
#include "editforge/reference.hpp"
#include "editforge/synthoracle.hpp"

using namespace editforge;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  using clock = std::chrono::steady_clock;
  fn();  // warm-up
  auto t0 = clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

double max_abs_diff(const GridF& a, const GridF& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i)
    worst = std::max(worst, std::abs(a.v[i] - b.v[i]));
  return worst;
}

void print_row(const char* name, double serial_ms, double parallel_ms,
               double deviation) {
  std::printf("%-22s %10.2f %10.2f %8.2fx   %.3g\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms, deviation);
}

}  // namespace

int main(int argc, char** argv) {
  int side = argc > 1 ? std::atoi(argv[1]) : 512;
  int reps = argc > 2 ? std::atoi(argv[2]) : 5;

  synth::SyntheticEditSpec spec;
  spec.id = "bench";
  spec.kind = synth::SyntheticKind::paste_patch;
  spec.seed = 20260817;
  spec.magnitude = 0.8;
  spec.img_w = side;
  spec.img_h = side;
  spec.x = side / 8;
  spec.y = side / 8;
  spec.w = side / 3;
  spec.h = side / 4;
  synth::SyntheticTriplet trip = synth::apply_edit(spec);

  std::printf("pair: %dx%d, %d reps, omp_max_threads=%d\n\n", side, side, reps,
              omp_get_max_threads());
  std::printf("%-22s %10s %10s %9s   %s\n", "kernel", "serial ms", "omp ms",
              "speedup", "max |diff|");

  // LAB delta-E map
  GridF lab_omp, lab_ref;
  double t_lab_ref =
      time_ms([&] { lab_ref = ref::lab_distance_map(trip.base, trip.edited); },
              reps);
  double t_lab_omp = time_ms(
      [&] { lab_omp = diffmask::lab_distance_map(trip.base, trip.edited); },
      reps);
  print_row("lab_distance_map", t_lab_ref, t_lab_omp,
            max_abs_diff(lab_ref, lab_omp));

  // SSIM map (separable vs direct 2-D window)
  GridF ya = luma(trip.base), yb = luma(trip.edited);
  GridF ssim_omp, ssim_ref;
  double t_ssim_ref =
      time_ms([&] { ssim_ref = ref::ssim_map(ya, yb); }, std::max(1, reps / 5));
  double t_ssim_omp =
      time_ms([&] { ssim_omp = diffmask::ssim_map_local(ya, yb); }, reps);
  print_row("ssim_map", t_ssim_ref, t_ssim_omp,
            max_abs_diff(ssim_ref, ssim_omp));

  // mean reduction
  double mean_omp = 0.0, mean_ref = 0.0;
  double t_mean_ref = time_ms([&] { mean_ref = ref::grid_mean(lab_ref); }, reps);
  double t_mean_omp =
      time_ms([&] { mean_omp = diffmask::grid_mean(lab_ref); }, reps);
  print_row("grid_mean", t_mean_ref, t_mean_omp, std::abs(mean_ref - mean_omp));

  // morphological opening on the thresholded map
  auto norm = diffmask::normalize_p99(lab_ref);
  auto otsu = diffmask::otsu_threshold(norm.map);
  MaskGrid mask =
      diffmask::binarize(norm.map, otsu.threshold ? *otsu.threshold : 0.5);
  MaskGrid open_omp, open_ref;
  double t_open_ref =
      time_ms([&] { open_ref = ref::open(mask, 1); }, std::max(1, reps / 5));
  double t_open_omp =
      time_ms([&] { open_omp = diffmask::morphological_open(mask, 1); }, reps);
  print_row("morphological_open", t_open_ref, t_open_omp,
            open_ref == open_omp ? 0.0 : 1.0);

  // end-to-end stage-B treatment
  diffmask::MaskConfig mc;
  double t_full = time_ms(
      [&] {
        (void)diffmask::generate_mask("bench", trip.base, trip.edited, mc);
      },
      std::max(1, reps / 5));
  std::printf("\ngenerate_mask (lab+ssim): %.2f ms/pair\n", t_full);
  return 0;
}
