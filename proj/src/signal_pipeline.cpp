// Deterministic preprocessing: Kaiser windowed-sinc resampling, Butterworth
// bandpass as a forward-backward biquad cascade, lead selection, z-score.

#include "danet/signal_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "danet/kernels.hpp"

namespace danet {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kHalfTaps = 32;  // 64 taps per output sample

double bessel_i0(double x) {
  // power series; converges fast for the beta range used here
  double term = 1.0, sum = 1.0;
  const double q = 0.25 * x * x;
  for (int k = 1; k < 64; ++k) {
    term *= q / (double(k) * double(k));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

// Kernel at offset u (input samples): 2 fc sinc(2 fc u) * kaiser(u / half)
struct SincKernel {
  double fc;      // cycles per input sample
  double beta = 8.0;
  double i0beta;

  explicit SincKernel(double cutoff) : fc(cutoff), i0beta(bessel_i0(8.0)) {}

  double operator()(double u) const {
    const double r = u / double(kHalfTaps);
    if (r <= -1.0 || r >= 1.0) return 0.0;
    const double w = bessel_i0(beta * std::sqrt(1.0 - r * r)) / i0beta;
    return 2.0 * fc * sinc(2.0 * fc * u) * w;
  }
};

// taps for a fractional phase in [0,1): offsets k-frac, k = -31..32,
// normalized to unit DC gain
std::vector<double> phase_taps(const SincKernel& kernel, double frac) {
  std::vector<double> taps(2 * kHalfTaps);
  double s = 0.0;
  for (int k = -kHalfTaps + 1; k <= kHalfTaps; ++k) {
    const double w = kernel(double(k) - frac);
    taps[k + kHalfTaps - 1] = w;
    s += w;
  }
  for (double& w : taps) w /= s;
  return taps;
}

// smallest L with |target/fs - L/M| tiny, via continued fractions
bool rational_ratio(double ratio, long max_den, long& num, long& den) {
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double x = ratio;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(x);
    if (a > double(max_den)) break;
    const long ai = static_cast<long>(a);
    const long p2 = ai * p1 + p0;
    const long q2 = ai * q1 + q0;
    if (q2 > max_den || p2 > max_den) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = x - a;
    if (frac < 1e-12) break;
    x = 1.0 / frac;
  }
  if (q1 == 0 || p1 == 0) return false;
  if (std::abs(ratio - double(p1) / double(q1)) > 1e-12 * ratio) return false;
  num = p1;
  den = q1;
  return true;
}

void resample_lead(const double* x, long n_in, double* y, long n_out, double step,
                   const SincKernel& kernel, const std::vector<std::vector<double>>* phases,
                   long phase_mod) {
  for (long m = 0; m < n_out; ++m) {
    const double t = double(m) * step;
    const long n0 = static_cast<long>(std::floor(t));
    const double frac = t - double(n0);

    std::vector<double> scratch;
    const std::vector<double>* taps;
    if (phases) {
      taps = &(*phases)[static_cast<std::size_t>((m % phase_mod + phase_mod) % phase_mod)];
    } else {
      scratch = phase_taps(kernel, frac);
      taps = &scratch;
    }

    const long first = n0 - kHalfTaps + 1;
    if (first >= 0 && first + 2 * kHalfTaps <= n_in) {
      y[m] = kernels::dot(taps->data(), x + first, 2 * kHalfTaps);
    } else {
      double acc = 0.0;
      for (long k = 0; k < 2 * kHalfTaps; ++k) {
        const long idx = first + k;
        if (idx >= 0 && idx < n_in) acc += (*taps)[k] * x[idx];
      }
      y[m] = acc;
    }
  }
}

void biquad_forward(const detail::Biquad& s, double* x, long n) {
  // direct form II transposed
  double z1 = 0.0, z2 = 0.0;
  for (long t = 0; t < n; ++t) {
    const double in = x[t];
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    x[t] = out;
  }
}

}  // namespace

void PreprocessConfig::validate() const {
  if (!(target_fs > 0.0)) throw ConfigError("preprocess: target_fs must be positive");
  if (!(band_low_hz > 0.0 && band_low_hz < band_high_hz && band_high_hz < target_fs / 2.0)) {
    throw ConfigError("preprocess: require 0 < low < high < target_fs/2");
  }
  if (filter_order != 2 && filter_order != 4 && filter_order != 6 && filter_order != 8) {
    throw ConfigError("preprocess: filter_order must be one of {2,4,6,8}");
  }
  if (leads_keep.empty()) throw ConfigError("preprocess: leads_keep must not be empty");
}

EcgRecord resample(const EcgRecord& rec, double target_fs) {
  if (!(target_fs > 0.0)) throw ParameterError("resample: target_fs must be positive");
  rec.validate();
  if (target_fs == rec.fs) return rec;

  const long n_in = static_cast<long>(rec.frames);
  const long n_out = std::lround(double(n_in) * target_fs / rec.fs);
  if (n_out < 1) throw DataError("resample: output would be empty");

  const double step = rec.fs / target_fs;  // input samples per output sample
  const double cutoff = 0.45 * std::min(rec.fs, target_fs) / rec.fs;
  const SincKernel kernel(cutoff);

  // cache per-phase taps when the rate ratio is rational with a small
  // denominator (500 -> 150 is 3/10)
  std::vector<std::vector<double>> phases;
  long num = 0, den = 0;
  bool cached = rational_ratio(target_fs / rec.fs, 4096, num, den);
  if (cached) {
    phases.resize(static_cast<std::size_t>(num));
    for (long p = 0; p < num; ++p) {
      const double t = double(p) * double(den) / double(num);
      phases[p] = phase_taps(kernel, t - std::floor(t));
    }
  }

  EcgRecord out;
  out.id = rec.id;
  out.fs = target_fs;
  out.leads = rec.leads;
  out.frames = static_cast<std::size_t>(n_out);
  out.samples.resize(out.channels() * out.frames);
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    resample_lead(rec.lead(c), n_in, out.lead(c), n_out, step, kernel,
                  cached ? &phases : nullptr, num);
  }
  return out;
}

namespace detail {

std::vector<Biquad> butter_bandpass_sections(int order, double low_hz, double high_hz,
                                             double fs) {
  if (order != 2 && order != 4 && order != 6 && order != 8) {
    throw ConfigError("bandpass: order must be one of {2,4,6,8}");
  }
  if (!(low_hz > 0.0 && low_hz < high_hz)) {
    throw ParameterError("bandpass: require 0 < low < high");
  }
  if (!(high_hz < fs / 2.0)) {
    throw ParameterError("bandpass: high cutoff must be below Nyquist");
  }

  using cplx = std::complex<double>;
  const int nlp = order / 2;

  // analog Butterworth lowpass prototype poles (unit cutoff, LHP)
  std::vector<cplx> proto;
  for (int k = 0; k < nlp; ++k) {
    const double theta = kPi * double(2 * k + nlp + 1) / double(2 * nlp);
    proto.emplace_back(std::cos(theta), std::sin(theta));
  }

  // prewarp and lowpass->bandpass: s -> (s^2 + w0^2) / (bw s)
  const double w1 = 2.0 * fs * std::tan(kPi * low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(kPi * high_hz / fs);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  std::vector<cplx> apoles;
  for (const cplx& p : proto) {
    const cplx b = bw * p * 0.5;
    const cplx d = std::sqrt(b * b - w0 * w0);
    apoles.push_back(b + d);
    apoles.push_back(b - d);
  }

  // bilinear transform; zeros land at z = +1 (nlp of them) and z = -1 (nlp)
  const double k2 = 2.0 * fs;
  std::vector<cplx> zpoles;
  for (const cplx& s : apoles) zpoles.push_back((k2 + s) / (k2 - s));

  // group into biquads: conjugate pairs first, leftover real poles paired up
  std::vector<Biquad> sos;
  std::vector<double> reals;
  for (const cplx& p : zpoles) {
    if (p.imag() > 1e-10) {
      sos.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
    } else if (p.imag() < -1e-10) {
      continue;  // conjugate of one already taken
    } else {
      reals.push_back(p.real());
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    sos.push_back({1.0, 0.0, -1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});
  }
  if (static_cast<int>(sos.size()) != nlp) {
    throw NumericError("bandpass design: pole pairing failed");
  }

  // normalize |H| to 1 at the (warped) center frequency, gain split evenly
  const double wc = 2.0 * std::atan(w0 / k2);
  const cplx z = std::polar(1.0, wc);
  const cplx zi = 1.0 / z;
  cplx h(1.0, 0.0);
  for (const Biquad& s : sos) {
    h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
  }
  const double gain = std::pow(1.0 / std::abs(h), 1.0 / double(nlp));
  for (Biquad& s : sos) {
    s.b0 *= gain;
    s.b1 *= gain;
    s.b2 *= gain;
  }
  return sos;
}

}  // namespace detail

EcgRecord bandpass(const EcgRecord& rec, double low_hz, double high_hz, int order) {
  rec.validate();
  const auto sos = detail::butter_bandpass_sections(order, low_hz, high_hz, rec.fs);

  EcgRecord out = rec;
  const long n = static_cast<long>(rec.frames);
  for (std::size_t c = 0; c < out.channels(); ++c) {
    double* x = out.lead(c);
    for (const auto& s : sos) biquad_forward(s, x, n);
    std::reverse(x, x + n);
    for (const auto& s : sos) biquad_forward(s, x, n);
    std::reverse(x, x + n);
  }
  return out;
}

EcgRecord select_leads(const EcgRecord& rec, const std::vector<std::string>& names) {
  rec.validate();
  if (names.empty()) throw NameError("select_leads: empty lead list");
  EcgRecord out;
  out.id = rec.id;
  out.fs = rec.fs;
  out.leads = names;
  out.frames = rec.frames;
  out.samples.resize(names.size() * rec.frames);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::size_t src = rec.lead_index(names[i]);
    std::copy(rec.lead(src), rec.lead(src) + rec.frames, out.lead(i));
  }
  return out;
}

EcgRecord zscore(const EcgRecord& rec) {
  rec.validate();
  EcgRecord out = rec;
  const double n = double(rec.frames);
  for (std::size_t c = 0; c < out.channels(); ++c) {
    double* x = out.lead(c);
    const double mean = kernels::sum(x, rec.frames) / n;
    double var = 0.0;
    for (std::size_t t = 0; t < rec.frames; ++t) var += (x[t] - mean) * (x[t] - mean);
    var /= n;
    const double inv = 1.0 / std::max(std::sqrt(var), 1e-6);
    for (std::size_t t = 0; t < rec.frames; ++t) x[t] = (x[t] - mean) * inv;
  }
  return out;
}

EcgRecord preprocess(const EcgRecord& rec, const PreprocessConfig& cfg) {
  cfg.validate();
  EcgRecord out = resample(rec, cfg.target_fs);
  out = bandpass(out, cfg.band_low_hz, cfg.band_high_hz, cfg.filter_order);
  out = select_leads(out, cfg.leads_keep);
  if (cfg.normalize == PreprocessConfig::Normalize::zscore) out = zscore(out);
  return out;
}

}  // namespace danet
