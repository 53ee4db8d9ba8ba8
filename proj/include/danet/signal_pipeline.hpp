#pragma once

#include <string>
#include <vector>

#include "danet/record.hpp"

namespace danet {

struct PreprocessConfig {
  double target_fs = 150.0;
  double band_low_hz = 0.5;
  double band_high_hz = 50.0;
  int filter_order = 6;  // bandpass order (pole count); one of {2,4,6,8}
  std::vector<std::string> leads_keep = {"II"};
  enum class Normalize { none, zscore };
  Normalize normalize = Normalize::none;

  void validate() const;
};

// Windowed-sinc resampler (Kaiser beta=8, 64 taps per output sample,
// anti-alias cutoff 0.45*min(fs_in, fs_out)). Output length is
// round(frames_in * target_fs / fs_in); per-lead independent.
EcgRecord resample(const EcgRecord& rec, double target_fs);

// Butterworth bandpass of the given pole count, realized as a biquad
// cascade and applied forward-backward (zero phase). Length unchanged.
EcgRecord bandpass(const EcgRecord& rec, double low_hz, double high_hz, int order);

EcgRecord select_leads(const EcgRecord& rec, const std::vector<std::string>& names);

// Per-lead (x - mean) / max(std, 1e-6).
EcgRecord zscore(const EcgRecord& rec);

// resample -> bandpass -> select_leads -> optional normalize.
EcgRecord preprocess(const EcgRecord& rec, const PreprocessConfig& cfg);

namespace detail {
// Normalized biquad (a0 == 1); per-section gain is folded into b.
struct Biquad {
  double b0, b1, b2, a1, a2;
};
// Exposed for response tests: the designed cascade for a single pass.
std::vector<Biquad> butter_bandpass_sections(int order, double low_hz, double high_hz,
                                             double fs);
}  // namespace detail

}  // namespace danet
