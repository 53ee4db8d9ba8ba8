#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "danet/errors.hpp"

namespace danet {

// Per-beat fiducial points, zero-based sample indices. P and T spans are
// optional: low-amplitude or absent waves are a valid outcome.
struct Beat {
  long r_peak = -1;
  long qrs_onset = -1;
  long qrs_offset = -1;
  std::optional<long> p_onset;
  std::optional<long> p_offset;
  std::optional<long> t_onset;
  std::optional<long> t_offset;
};

// Ordered beats on one sample grid. Used both for generator ground truth
// and for delineator output (same truth.json schema on disk).
struct FiducialSet {
  double fs = 0.0;
  std::vector<Beat> beats;

  void validate(long frame_count) const {
    long prev_qrs_offset = -1;
    for (const Beat& b : beats) {
      if (b.qrs_onset < 0 || b.qrs_offset >= frame_count || b.qrs_onset >= b.qrs_offset) {
        throw BoundsError("invalid QRS span");
      }
      if (b.r_peak < b.qrs_onset || b.r_peak > b.qrs_offset) {
        throw BoundsError("r_peak outside QRS span");
      }
      if (b.qrs_onset <= prev_qrs_offset) throw BoundsError("overlapping QRS spans");
      prev_qrs_offset = b.qrs_offset;
      if (b.p_onset || b.p_offset) {
        if (!b.p_onset || !b.p_offset || *b.p_onset >= *b.p_offset ||
            *b.p_onset < 0 || *b.p_offset >= b.qrs_onset) {
          throw BoundsError("invalid P span");
        }
      }
      if (b.t_onset || b.t_offset) {
        if (!b.t_onset || !b.t_offset || *b.t_onset >= *b.t_offset ||
            *b.t_onset <= b.qrs_offset || *b.t_offset >= frame_count) {
          throw BoundsError("invalid T span");
        }
      }
    }
  }
};

}  // namespace danet
