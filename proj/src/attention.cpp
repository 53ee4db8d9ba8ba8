// Manual attention weights from fiducials under a disease rule, plus the
// two standard augmentations (random segment, additive noise).

#include "danet/attention.hpp"

#include <fstream>

#include <json.hpp>

#include "danet/kernels.hpp"

namespace danet {

namespace {

using nlohmann::json;

WaveRegion region_from_string(const std::string& s) {
  if (s == "P") return WaveRegion::P;
  if (s == "QRS") return WaveRegion::QRS;
  if (s == "T") return WaveRegion::T;
  if (s == "ST") return WaveRegion::ST;
  throw ConfigError("unknown wave region '" + s + "'");
}

}  // namespace

const DiseaseRule& rule_registry(const std::string& name) {
  static const DiseaseRule apc{"apc", WaveRegion::P, 1.0, 0.3};
  static const DiseaseRule stt{"stt", WaveRegion::ST, 1.0, 0.3};
  if (name == "apc") return apc;
  if (name == "stt") return stt;
  throw NameError("unknown rule '" + name + "' (built-ins: apc, stt)");
}

DiseaseRule rule_from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rule file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("bad rule JSON: " + std::string(e.what()));
  }
  DiseaseRule rule;
  rule.name = j.at("name").get<std::string>();
  rule.region = region_from_string(j.at("region").get<std::string>());
  rule.in_weight = j.at("in_weight").get<double>();
  rule.base_weight = j.at("base_weight").get<double>();
  rule.validate();
  return rule;
}

AttentionWeights manual_weights(const FiducialSet& fid, const DiseaseRule& rule,
                                std::size_t frame_count) {
  rule.validate();
  AttentionWeights w(frame_count, rule.base_weight);

  auto mark = [&](long on, long off) {
    if (on < 0 || off < on) throw BoundsError("manual_weights: bad span");
    if (off >= static_cast<long>(frame_count)) {
      throw BoundsError("manual_weights: fiducial index beyond frame count");
    }
    for (long k = on; k <= off; ++k) w[k] = rule.in_weight;
  };

  for (const Beat& b : fid.beats) {
    switch (rule.region) {
      case WaveRegion::P:
        if (b.p_onset && b.p_offset) mark(*b.p_onset, *b.p_offset);
        break;
      case WaveRegion::QRS:
        mark(b.qrs_onset, b.qrs_offset);
        break;
      case WaveRegion::T:
        if (b.t_onset && b.t_offset) mark(*b.t_onset, *b.t_offset);
        break;
      case WaveRegion::ST:
        if (b.t_offset) mark(b.qrs_offset, *b.t_offset);
        break;
    }
  }
  return w;
}

EcgRecord apply_weights(const EcgRecord& rec, const AttentionWeights& w) {
  if (w.size() != rec.frames) {
    throw ShapeError("apply_weights: weight length " + std::to_string(w.size()) +
                     " != frame count " + std::to_string(rec.frames));
  }
  EcgRecord out = rec;
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    kernels::mul(rec.lead(c), w.data(), out.lead(c), rec.frames);
  }
  return out;
}

std::pair<EcgRecord, AttentionWeights> augment_segment(const EcgRecord& rec,
                                                       const AttentionWeights& w,
                                                       std::size_t out_len, Rng& rng) {
  if (w.size() != rec.frames) throw ShapeError("augment_segment: weight/record length mismatch");
  if (out_len > rec.frames) throw LengthError("augment_segment: out_len exceeds frame count");
  if (out_len == 0) throw LengthError("augment_segment: out_len must be positive");

  const std::size_t start =
      out_len == rec.frames ? 0 : static_cast<std::size_t>(rng.bounded(rec.frames - out_len + 1));

  EcgRecord out;
  out.id = rec.id;
  out.fs = rec.fs;
  out.leads = rec.leads;
  out.frames = out_len;
  out.samples.resize(rec.channels() * out_len);
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    std::copy(rec.lead(c) + start, rec.lead(c) + start + out_len, out.lead(c));
  }
  AttentionWeights wo(w.begin() + start, w.begin() + start + out_len);
  return {std::move(out), std::move(wo)};
}

EcgRecord augment_noise(const EcgRecord& rec, double sigma_mv, Rng& rng) {
  if (sigma_mv < 0.0) throw ParameterError("augment_noise: sigma must be non-negative");
  EcgRecord out = rec;
  if (sigma_mv == 0.0) return out;
  for (double& s : out.samples) s += sigma_mv * rng.gaussian();
  return out;
}

}  // namespace danet
