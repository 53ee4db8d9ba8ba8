#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "danet/fiducials.hpp"
#include "danet/record.hpp"
#include "danet/rng.hpp"

namespace danet {

// Per-sample weight vector, one value per frame, shared across leads.
using AttentionWeights = std::vector<double>;

enum class WaveRegion { P, QRS, T, ST };  // ST = qrs_offset..t_offset

struct DiseaseRule {
  std::string name;
  WaveRegion region = WaveRegion::P;
  double in_weight = 1.0;
  double base_weight = 0.3;

  void validate() const {
    if (!(base_weight > 0.0 && base_weight <= in_weight && in_weight <= 1.0)) {
      throw ConfigError("rule '" + name + "': require 0 < base_weight <= in_weight <= 1");
    }
  }
};

// Built-in rules: "apc" = {P, 1.0, 0.3}, "stt" = {ST, 1.0, 0.3}.
const DiseaseRule& rule_registry(const std::string& name);
DiseaseRule rule_from_file(const std::filesystem::path& path);

// w[k] = in_weight inside any rule-region span, base_weight elsewhere.
// Beats with the region absent contribute nothing.
AttentionWeights manual_weights(const FiducialSet& fid, const DiseaseRule& rule,
                                std::size_t frame_count);

// out[lead][k] = rec[lead][k] * w[k]; same w for every lead.
EcgRecord apply_weights(const EcgRecord& rec, const AttentionWeights& w);

// Random contiguous window, applied jointly to samples and weights.
std::pair<EcgRecord, AttentionWeights> augment_segment(const EcgRecord& rec,
                                                       const AttentionWeights& w,
                                                       std::size_t out_len, Rng& rng);

// i.i.d. Gaussian noise per sample; weights untouched.
EcgRecord augment_noise(const EcgRecord& rec, double sigma_mv, Rng& rng);

}  // namespace danet
