// P-QRS-T delineation on a single preprocessed lead. R peaks come from a
// Pan-Tompkins-style detector; QRS boundaries from a relative slope
// threshold; P and T from a baseline-corrected bump search in fixed
// physiologic windows. Every threshold is relative (slope fractions, noise
// MAD, fractions of the R amplitude), so output is invariant under
// positive rescaling of the signal.

#include "danet/delineator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace danet {

namespace {

long ms_to_samples(double ms, double fs) {
  return std::max<long>(1, std::lround(ms * fs / 1000.0));
}

std::vector<double> derivative(std::span<const double> x) {
  const long n = static_cast<long>(x.size());
  std::vector<double> d(n, 0.0);
  for (long t = 1; t + 1 < n; ++t) d[t] = 0.5 * (x[t + 1] - x[t - 1]);
  return d;
}

// centered moving average, window w samples (clamped at the edges)
std::vector<double> moving_average(std::span<const double> x, long w) {
  const long n = static_cast<long>(x.size());
  const long half = std::max<long>(1, w / 2);
  std::vector<double> out(n);
  double acc = 0.0;
  long lo = 0, hi = -1;  // current inclusive window
  for (long t = 0; t < n; ++t) {
    const long want_lo = std::max<long>(0, t - half);
    const long want_hi = std::min<long>(n - 1, t + half);
    while (hi < want_hi) acc += x[++hi];
    while (lo < want_lo) acc -= x[lo++];
    out[t] = acc / double(want_hi - want_lo + 1);
  }
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

struct QrsBounds {
  long r;
  long onset;
  long offset;
};

// largest-|deviation| bump between lo..hi (inclusive) of the smoothed,
// baseline-corrected signal; edges at edge_frac of the bump amplitude
struct BumpResult {
  bool found = false;
  long onset = 0, offset = 0;
  double amplitude = 0.0;
};

BumpResult find_bump(const std::vector<double>& smooth, long lo, long hi, double edge_frac) {
  BumpResult r;
  if (hi - lo < 4) return r;
  const double v0 = smooth[lo];
  const double v1 = smooth[hi];
  const double span = double(hi - lo);

  auto dev = [&](long t) { return smooth[t] - (v0 + (v1 - v0) * double(t - lo) / span); };

  long peak = lo;
  double amp = 0.0;
  for (long t = lo; t <= hi; ++t) {
    const double a = std::abs(dev(t));
    if (a > amp) {
      amp = a;
      peak = t;
    }
  }
  if (amp <= 0.0) return r;

  const double edge = edge_frac * amp;
  long on = peak;
  while (on > lo && std::abs(dev(on - 1)) >= edge) --on;
  long off = peak;
  while (off < hi && std::abs(dev(off + 1)) >= edge) ++off;
  if (on >= off) return r;

  r.found = true;
  r.onset = on;
  r.offset = off;
  r.amplitude = amp;
  return r;
}

}  // namespace

const char* boundary_name(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::p_onset: return "p_onset";
    case BoundaryKind::p_offset: return "p_offset";
    case BoundaryKind::qrs_onset: return "qrs_onset";
    case BoundaryKind::qrs_offset: return "qrs_offset";
    case BoundaryKind::t_onset: return "t_onset";
    case BoundaryKind::t_offset: return "t_offset";
  }
  return "?";
}

std::vector<long> detect_r_peaks(std::span<const double> x, double fs,
                                 const DelineatorConfig& cfg) {
  const long n = static_cast<long>(x.size());
  if (!(fs > 0.0)) throw ParameterError("detect_r_peaks: fs must be positive");
  if (double(n) < fs) throw LengthError("detect_r_peaks: signal shorter than 1 s");

  const std::vector<double> d = derivative(x);
  std::vector<double> sq(n);
  for (long t = 0; t < n; ++t) sq[t] = d[t] * d[t];
  const std::vector<double> integ = moving_average(sq, ms_to_samples(cfg.integrate_ms, fs));

  // threshold bootstrap from the leading window
  const long init = std::min<long>(n, std::lround(cfg.init_window_s * fs));
  double init_max = 0.0, init_mean = 0.0;
  for (long t = 0; t < init; ++t) {
    init_max = std::max(init_max, integ[t]);
    init_mean += integ[t];
  }
  init_mean /= double(std::max<long>(1, init));
  double spk = 0.5 * init_max;
  double npk = 0.5 * init_mean;

  const long refractory = ms_to_samples(cfg.refractory_ms, fs);
  const long refine = ms_to_samples(cfg.rpeak_refine_ms, fs);

  std::vector<long> peaks;
  for (long t = 1; t + 1 < n; ++t) {
    if (!(integ[t] > integ[t - 1] && integ[t] >= integ[t + 1])) continue;
    const double v = integ[t];
    const double thr = npk + cfg.threshold_frac * (spk - npk);
    if (v >= thr && v > 0.0) {
      // local maximum of |x| near the integration peak
      long r = std::max<long>(0, t - refine);
      const long hi = std::min<long>(n - 1, t + refine);
      for (long u = r; u <= hi; ++u) {
        if (std::abs(x[u]) > std::abs(x[r])) r = u;
      }
      if (!peaks.empty() && r - peaks.back() < refractory) {
        if (std::abs(x[r]) > std::abs(x[peaks.back()])) peaks.back() = r;
      } else if (peaks.empty() || r > peaks.back()) {
        peaks.push_back(r);
      }
      spk = 0.125 * v + 0.875 * spk;
    } else {
      npk = 0.125 * v + 0.875 * npk;
    }
  }

  // drop detections far below the typical beat amplitude; a silent lead-in
  // bootstraps the threshold to zero, which otherwise promotes any activity
  // onset to a beat
  if (peaks.size() > 1) {
    std::vector<double> amps;
    amps.reserve(peaks.size());
    for (long r : peaks) amps.push_back(std::abs(x[r]));
    const double med = median_of(amps);
    std::vector<long> kept;
    for (long r : peaks) {
      if (std::abs(x[r]) >= 0.1 * med) kept.push_back(r);
    }
    peaks = std::move(kept);
  }
  return peaks;
}

FiducialSet delineate(std::span<const double> x, double fs, const DelineatorConfig& cfg) {
  const std::vector<long> rpeaks = detect_r_peaks(x, fs, cfg);
  const long n = static_cast<long>(x.size());

  FiducialSet out;
  out.fs = fs;
  if (rpeaks.empty()) return out;

  const std::vector<double> d = derivative(x);
  const std::vector<double> smooth = moving_average(x, ms_to_samples(cfg.smooth_ms, fs));
  // residual after smoothing, used for the local noise estimate
  std::vector<double> resid(n);
  for (long t = 0; t < n; ++t) resid[t] = x[t] - smooth[t];

  const long search = ms_to_samples(cfg.qrs_search_ms, fs);
  const long quiet = ms_to_samples(cfg.quiet_run_ms, fs);

  // pass 1: QRS bounds per R peak
  std::vector<QrsBounds> qrs;
  for (long r : rpeaks) {
    const long wlo = std::max<long>(0, r - search);
    const long whi = std::min<long>(n - 1, r + search);

    long pos_l = wlo, pos_r = whi;
    double smax = 0.0;
    for (long t = wlo; t <= whi; ++t) smax = std::max(smax, std::abs(d[t]));
    if (smax <= 0.0) {
      qrs.push_back({r, std::max<long>(0, r - 1), std::min<long>(n - 1, r + 1)});
      continue;
    }
    for (long t = wlo; t <= r; ++t) {
      if (std::abs(d[t]) > std::abs(d[pos_l])) pos_l = t;
    }
    for (long t = r; t <= whi; ++t) {
      if (std::abs(d[t]) > std::abs(d[pos_r])) pos_r = t;
    }
    const double thr = cfg.qrs_slope_frac * smax;

    // onset: first index left of the max-slope point whose trailing
    // quiet_run window stays below the slope threshold
    long onset = wlo;
    for (long t = pos_l; t >= wlo; --t) {
      bool is_quiet = true;
      for (long u = std::max<long>(0, t - quiet); u <= t; ++u) {
        if (std::abs(d[u]) >= thr) {
          is_quiet = false;
          break;
        }
      }
      if (is_quiet) {
        onset = t;
        break;
      }
    }
    long offset = whi;
    for (long t = pos_r; t <= whi; ++t) {
      bool is_quiet = true;
      for (long u = t; u <= std::min<long>(n - 1, t + quiet); ++u) {
        if (std::abs(d[u]) >= thr) {
          is_quiet = false;
          break;
        }
      }
      if (is_quiet) {
        offset = t;
        break;
      }
    }
    if (onset >= r) onset = std::max<long>(0, r - 1);
    if (offset <= r) offset = std::min<long>(n - 1, r + 1);
    // close peaks (noise-driven) may have touching search windows
    if (!qrs.empty() && onset <= qrs.back().offset) onset = qrs.back().offset + 1;
    qrs.push_back({r, onset, offset});
  }

  const long p_lo = ms_to_samples(cfg.p_win_before_ms, fs);
  const long p_hi = ms_to_samples(cfg.p_win_gap_ms, fs);
  const long t_lo = ms_to_samples(cfg.t_win_gap_ms, fs);
  const long t_hi = ms_to_samples(cfg.t_win_after_ms, fs);
  const long t_guard = ms_to_samples(cfg.t_next_guard_ms, fs);

  // pass 2: P and T bumps relative to the QRS bounds
  for (std::size_t i = 0; i < qrs.size(); ++i) {
    const QrsBounds& q = qrs[i];
    Beat beat;
    beat.r_peak = q.r;
    beat.qrs_onset = q.onset;
    beat.qrs_offset = q.offset;

    const double r_amp = std::abs(x[q.r]);

    auto try_bump = [&](long lo, long hi, std::optional<long>& on, std::optional<long>& off) {
      lo = std::max<long>(0, lo);
      hi = std::min<long>(n - 1, hi);
      if (hi - lo < 4) return;
      const BumpResult b = find_bump(smooth, lo, hi, cfg.bump_edge_frac);
      if (!b.found) return;
      std::vector<double> win(resid.begin() + lo, resid.begin() + hi + 1);
      const double med = median_of(win);
      for (double& v : win) v = std::abs(v - med);
      const double mad = median_of(win);
      if (b.amplitude <= cfg.bump_mad_mult * mad) return;
      if (b.amplitude <= cfg.bump_min_rel_amp * r_amp) return;
      on = b.onset;
      off = b.offset;
    };

    try_bump(q.onset - p_lo, q.onset - p_hi, beat.p_onset, beat.p_offset);

    long t_end = q.offset + t_hi;
    if (i + 1 < qrs.size()) t_end = std::min(t_end, qrs[i + 1].onset - t_guard);
    try_bump(q.offset + t_lo, t_end, beat.t_onset, beat.t_offset);

    // keep the ordering invariant even in degenerate windows
    if (beat.p_onset && (*beat.p_offset >= q.onset || *beat.p_onset >= *beat.p_offset)) {
      beat.p_onset.reset();
      beat.p_offset.reset();
    }
    if (beat.t_onset && (*beat.t_onset <= q.offset || *beat.t_onset >= *beat.t_offset)) {
      beat.t_onset.reset();
      beat.t_offset.reset();
    }
    out.beats.push_back(beat);
  }
  return out;
}

MatchReport fiducial_stats(const FiducialSet& pred, const FiducialSet& truth, double tol_ms) {
  if (pred.fs != truth.fs) {
    throw ConfigError("fiducial_stats: prediction and truth sampling rates differ");
  }
  const double tol = tol_ms * truth.fs / 1000.0;

  auto collect = [](const FiducialSet& f, BoundaryKind k) {
    std::vector<long> v;
    for (const Beat& b : f.beats) {
      switch (k) {
        case BoundaryKind::p_onset:
          if (b.p_onset) v.push_back(*b.p_onset);
          break;
        case BoundaryKind::p_offset:
          if (b.p_offset) v.push_back(*b.p_offset);
          break;
        case BoundaryKind::qrs_onset: v.push_back(b.qrs_onset); break;
        case BoundaryKind::qrs_offset: v.push_back(b.qrs_offset); break;
        case BoundaryKind::t_onset:
          if (b.t_onset) v.push_back(*b.t_onset);
          break;
        case BoundaryKind::t_offset:
          if (b.t_offset) v.push_back(*b.t_offset);
          break;
      }
    }
    std::sort(v.begin(), v.end());
    return v;
  };

  MatchReport rep;
  for (BoundaryKind k : kAllBoundaryKinds) {
    const auto tv = collect(truth, k);
    const auto pv = collect(pred, k);
    BoundaryStats& st = rep.per_kind[static_cast<std::size_t>(k)];
    st.truth_count = tv.size();
    st.pred_count = pv.size();
    // greedy sweep over the two sorted lists
    std::size_t i = 0, j = 0;
    while (i < tv.size() && j < pv.size()) {
      const double diff = double(pv[j] - tv[i]);
      if (std::abs(diff) <= tol) {
        ++st.matched;
        ++i;
        ++j;
      } else if (diff < 0) {
        ++j;
      } else {
        ++i;
      }
    }
    rep.overall.matched += st.matched;
    rep.overall.truth_count += st.truth_count;
    rep.overall.pred_count += st.pred_count;
  }
  return rep;
}

}  // namespace danet
