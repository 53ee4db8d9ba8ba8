#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "danet/fiducials.hpp"

namespace danet {

// All windows and thresholds of the fiducial search, fixed defaults.
// Thresholds are relative to signal statistics, never absolute amplitudes,
// so delineation is invariant under positive rescaling of the input.
struct DelineatorConfig {
  // R detection (derivative -> square -> moving-window integration)
  double integrate_ms = 150.0;
  double refractory_ms = 200.0;
  double init_window_s = 2.0;          // threshold bootstrap span
  double threshold_frac = 0.25;        // npk + frac * (spk - npk)
  double rpeak_refine_ms = 100.0;      // |x| argmax window around integ peak

  // QRS boundaries
  double qrs_search_ms = 100.0;        // max distance from R
  double qrs_slope_frac = 0.10;        // of peak |dx/dt| near the QRS
  double quiet_run_ms = 20.0;          // below-threshold run ending the search

  // P and T bump search
  double p_win_before_ms = 280.0;      // window start, before qrs_onset
  double p_win_gap_ms = 40.0;          // window end, before qrs_onset
  double t_win_gap_ms = 60.0;          // window start, after qrs_offset
  double t_win_after_ms = 450.0;       // window end, after qrs_offset
  double t_next_guard_ms = 40.0;       // stay clear of the next qrs_onset
  double smooth_ms = 20.0;             // moving-average width for bump shape
  double bump_edge_frac = 0.05;        // onset/offset at this fraction of peak
  double bump_mad_mult = 2.0;          // report only if amp > mult * noise MAD
  double bump_min_rel_amp = 0.02;      // ... and amp > frac * |x[r_peak]|
};

// Pan-Tompkins-style R peak detector: adaptive threshold on the
// moving-window-integrated squared derivative, refractory 200 ms, peaks
// refined to local maxima of |x|. Indices strictly increasing.
std::vector<long> detect_r_peaks(std::span<const double> x, double fs,
                                 const DelineatorConfig& cfg = {});

// Full P-QRS-T delineation of a single-lead signal. Best-effort by design:
// downstream fine-tuning is the corrective mechanism for imperfect spans.
FiducialSet delineate(std::span<const double> x, double fs,
                      const DelineatorConfig& cfg = {});

// Boundary-level match report against ground truth.
enum class BoundaryKind { p_onset, p_offset, qrs_onset, qrs_offset, t_onset, t_offset };
constexpr std::array<BoundaryKind, 6> kAllBoundaryKinds = {
    BoundaryKind::p_onset,  BoundaryKind::p_offset, BoundaryKind::qrs_onset,
    BoundaryKind::qrs_offset, BoundaryKind::t_onset, BoundaryKind::t_offset};

const char* boundary_name(BoundaryKind k);

struct BoundaryStats {
  std::size_t matched = 0;
  std::size_t truth_count = 0;
  std::size_t pred_count = 0;
  double sensitivity() const {
    return truth_count == 0 ? 0.0 : double(matched) / double(truth_count);
  }
  double precision() const {
    return pred_count == 0 ? 0.0 : double(matched) / double(pred_count);
  }
};

struct MatchReport {
  std::array<BoundaryStats, 6> per_kind;
  BoundaryStats overall;
  const BoundaryStats& kind(BoundaryKind k) const {
    return per_kind[static_cast<std::size_t>(k)];
  }
};

// Greedy nearest matching within tol_ms, per boundary kind.
MatchReport fiducial_stats(const FiducialSet& pred, const FiducialSet& truth, double tol_ms);

}  // namespace danet
