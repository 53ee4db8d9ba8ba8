// Synthetic ECG generator. Each beat is a sum of Gaussian bumps: P, a
// triphasic QRS (Q/R/S), and T, placed on a jittered RR schedule. Bump
// widths are quoted at the 10%-of-peak level, so the recorded ground-truth
// spans are exactly center +- width/2.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "danet/ecg_io.hpp"
#include "danet/rng.hpp"

namespace danet {

namespace {

// full width at 10% of peak = 2 * sqrt(2 ln 10) * sigma
constexpr double kTenPercentHalfWidths = 2.1460265926392464;  // sqrt(2 ln 10)

struct Bump {
  double center_s;
  double amp_mv;
  double sigma_s;
};

// Accumulate amp * exp(-(t-c)^2 / (2 sigma^2)) over +-5 sigma.
void add_bump(std::vector<double>& x, double fs, const Bump& b) {
  if (b.amp_mv == 0.0) return;
  const long n = static_cast<long>(x.size());
  const long lo = std::max<long>(0, std::lround((b.center_s - 5.0 * b.sigma_s) * fs));
  const long hi = std::min<long>(n - 1, std::lround((b.center_s + 5.0 * b.sigma_s) * fs));
  for (long t = lo; t <= hi; ++t) {
    const double dt = t / fs - b.center_s;
    x[t] += b.amp_mv * std::exp(-0.5 * dt * dt / (b.sigma_s * b.sigma_s));
  }
}

double lead_scale(const std::string& name, std::size_t index) {
  // lead II carries the reference waveform; other leads are fixed
  // attenuated copies (no realistic inter-lead projection)
  if (name == "II") return 1.0;
  return 0.45 + 0.1 * static_cast<double>(index % 4);
}

}  // namespace

void SynthParams::validate() const {
  if (!(fs > 0.0)) throw ParameterError("synth: fs must be positive");
  if (!(duration_s > 0.0)) throw ParameterError("synth: duration must be positive");
  const double frames = duration_s * fs;
  if (std::abs(frames - std::round(frames)) > 1e-9) {
    throw ParameterError("synth: duration * fs must be integral");
  }
  const double widths_s = (p_width_ms + qrs_span_ms + t_width_ms) / 1000.0;
  if (!(rr_mean_s > widths_s)) {
    throw ParameterError("synth: rr_mean must exceed the summed wave widths");
  }
  if (!(apc_prematurity > 0.0 && apc_prematurity < 1.0)) {
    throw ParameterError("synth: prematurity ratio must lie in (0,1)");
  }
  if (rr_jitter_s < 0.0 || noise_sigma_mv < 0.0) {
    throw ParameterError("synth: jitter and noise must be non-negative");
  }
  if (leads.empty()) throw ParameterError("synth: at least one lead");
}

SynthResult synth_record(const SynthParams& params, const std::string& id) {
  params.validate();
  Rng rng(params.seed);

  const double fs = params.fs;
  const long frames = std::lround(params.duration_s * fs);
  const double head = params.pr_interval_s + params.apc_p_shift_ms / 1000.0 +
                      params.p_width_ms / 2000.0 + 0.05;
  const double tail = params.t_delay_s + params.t_width_ms / 2000.0 + 0.05;

  // RR schedule in whole samples (avoids cumulative rounding drift); the
  // premature beat (if any) gets an exact ratio * rr_mean interval followed
  // by a compensatory pause
  const long head_smp = std::lround(head * fs);
  const long tail_smp = std::lround(tail * fs);
  std::vector<long> rr;
  {
    long t = head_smp;
    while (t + tail_smp < frames) {
      const double rr_s =
          params.rr_mean_s + rng.uniform(-params.rr_jitter_s, params.rr_jitter_s);
      rr.push_back(std::lround(rr_s * fs));
      t += rr.back();
    }
  }
  std::size_t n_beats = rr.size();  // beat i sits after sum(rr[0..i-1])
  if (n_beats < 2) throw ParameterError("synth: duration too short for >= 2 beats");

  std::size_t premature = n_beats;  // sentinel: none
  if (params.apc) {
    premature = 1 + static_cast<std::size_t>(rng.bounded(std::max<std::size_t>(1, n_beats - 2)));
    rr[premature - 1] = std::lround(params.apc_prematurity * params.rr_mean_s * fs);
    if (premature < n_beats - 1) {
      rr[premature] = std::lround((2.0 - params.apc_prematurity) * params.rr_mean_s * fs);
    }
  }

  std::vector<double> r_times;
  {
    long t = head_smp;
    r_times.push_back(double(t) / fs);
    for (std::size_t i = 0; i + 1 < n_beats; ++i) {
      t += rr[i];
      if (t + tail_smp >= frames) break;
      r_times.push_back(double(t) / fs);
    }
  }
  n_beats = r_times.size();
  if (n_beats < 2) throw ParameterError("synth: duration too short for >= 2 beats");

  const double sig_p = params.p_width_ms / 1000.0 / (2.0 * kTenPercentHalfWidths);
  const double sig_t = params.t_width_ms / 1000.0 / (2.0 * kTenPercentHalfWidths);
  const double span = params.qrs_span_ms / 1000.0;

  std::vector<double> base(frames, 0.0);
  FiducialSet truth;
  truth.fs = fs;

  for (std::size_t i = 0; i < n_beats; ++i) {
    const double r = r_times[i];
    const bool early = (i == premature);

    double p_amp = params.p_amp_mv;
    double p_center = r - params.pr_interval_s;
    if (early) {
      p_amp *= params.apc_p_amp_scale;
      p_center -= params.apc_p_shift_ms / 1000.0;
    }
    add_bump(base, fs, {p_center, p_amp, sig_p});

    // triphasic QRS inside +-span/2 of R
    add_bump(base, fs, {r - 0.25 * span, -0.18 * params.qrs_amp_mv, span / 14.0});
    add_bump(base, fs, {r, params.qrs_amp_mv, span / 9.0});
    add_bump(base, fs, {r + 0.25 * span, -0.22 * params.qrs_amp_mv, span / 14.0});

    const double t_center = r + params.t_delay_s;
    add_bump(base, fs, {t_center, params.t_amp_mv, sig_t});

    Beat b;
    b.r_peak = std::lround(r * fs);
    b.qrs_onset = std::lround((r - span / 2.0) * fs);
    b.qrs_offset = std::lround((r + span / 2.0) * fs);
    if (p_amp != 0.0) {
      b.p_onset = std::lround((p_center - params.p_width_ms / 2000.0) * fs);
      b.p_offset = std::lround((p_center + params.p_width_ms / 2000.0) * fs);
    }
    if (params.t_amp_mv != 0.0) {
      b.t_onset = std::lround((t_center - params.t_width_ms / 2000.0) * fs);
      b.t_offset = std::lround((t_center + params.t_width_ms / 2000.0) * fs);
    }
    truth.beats.push_back(b);
  }

  EcgRecord rec;
  rec.id = id;
  rec.fs = fs;
  rec.leads = params.leads;
  rec.frames = static_cast<std::size_t>(frames);
  rec.samples.resize(rec.channels() * rec.frames);
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    const double scale = lead_scale(params.leads[c], c);
    double* row = rec.lead(c);
    for (long t = 0; t < frames; ++t) row[t] = scale * base[t];
    if (params.noise_sigma_mv > 0.0) {
      for (long t = 0; t < frames; ++t) row[t] += params.noise_sigma_mv * rng.gaussian();
    }
  }
  rec.validate();
  truth.validate(frames);

  return {std::move(rec), std::move(truth), LabelEntry{id, params.apc ? Label::APC : Label::NonAPC}};
}

SynthDatasetPaths synth_dataset(std::size_t n, double apc_fraction, const SynthParams& base,
                                std::uint64_t master_seed,
                                const std::filesystem::path& out_dir) {
  if (n < 1) throw ParameterError("synth_dataset: n must be >= 1");
  if (apc_fraction < 0.0 || apc_fraction > 1.0) {
    throw ParameterError("synth_dataset: apc_fraction must be in [0,1]");
  }

  std::error_code ec;
  const auto records_dir = out_dir / "records";
  std::filesystem::create_directories(records_dir, ec);
  if (ec || !std::filesystem::is_directory(records_dir)) {
    throw IoError("cannot create dataset directory: " + records_dir.string());
  }

  const std::size_t n_apc = static_cast<std::size_t>(std::lround(apc_fraction * double(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng assign_rng(derive_seed(master_seed, 0));
  assign_rng.shuffle(order);
  std::vector<bool> is_apc(n, false);
  for (std::size_t i = 0; i < n_apc; ++i) is_apc[order[i]] = true;

  std::vector<LabelEntry> labels;
  std::map<std::string, FiducialSet> truth;
  int width = 1;
  for (std::size_t v = n - 1; v >= 10; v /= 10) ++width;

  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream name;
    name << "rec" << std::setw(width) << std::setfill('0') << i;
    SynthParams p = base;
    p.apc = is_apc[i];
    p.seed = derive_seed(master_seed, i + 1);
    SynthResult r = synth_record(p, name.str());
    save_record(r.record, records_dir / (name.str() + ".csv"));
    labels.push_back(r.label);
    truth[name.str()] = std::move(r.truth);
  }

  SynthDatasetPaths paths{records_dir, out_dir / "labels.csv", out_dir / "truth.json"};
  save_labels(labels, paths.labels_file);
  save_truth(truth, paths.truth_file);
  return paths;
}

}  // namespace danet
