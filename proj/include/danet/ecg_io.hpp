#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "danet/fiducials.hpp"
#include "danet/record.hpp"

namespace danet {

enum class RecordFormat { csv, tianchi_txt };

// CSV record layout: line 1 = comma-separated lead names, one sample per
// row; a sidecar <stem>.meta.json holds {"id", "fs"}.
// tianchi_txt: delimiter-separated columns with a header line, fixed 500 Hz.
EcgRecord load_record(const std::filesystem::path& path, RecordFormat format,
                      const std::string& tianchi_delims = " \t");
void save_record(const EcgRecord& rec, const std::filesystem::path& path);

std::vector<LabelEntry> load_labels(const std::filesystem::path& path);
void save_labels(const std::vector<LabelEntry>& labels, const std::filesystem::path& path);

// truth.json: {"records": {id: {"fs": f, "beats": [...]}}}, indices zero-based.
void save_truth(const std::map<std::string, FiducialSet>& truth,
                const std::filesystem::path& path);
std::map<std::string, FiducialSet> load_truth(const std::filesystem::path& path);

// Synthetic APC / Non-APC generator. Beats are sums of Gaussian bumps
// (P, triphasic QRS, T) on a jittered RR schedule; onset/offset ground
// truth is taken from the generated schedule, at the 10%-of-peak width
// of each bump.
struct SynthParams {
  double fs = 150.0;
  double duration_s = 10.0;
  double rr_mean_s = 0.8;
  double rr_jitter_s = 0.02;  // uniform +-jitter per RR interval

  double p_amp_mv = 0.15;
  double p_width_ms = 40.0;
  double qrs_amp_mv = 1.0;
  double qrs_span_ms = 80.0;
  double t_amp_mv = 0.3;
  double t_width_ms = 120.0;
  double pr_interval_s = 0.16;  // R minus P center
  double t_delay_s = 0.30;      // T center minus R

  bool apc = false;
  double apc_prematurity = 0.6;    // premature RR = ratio * rr_mean
  double apc_p_shift_ms = 60.0;    // ectopic P arrives this much earlier still
  double apc_p_amp_scale = -0.8;   // ectopic P morphology; negative = inverted

  double noise_sigma_mv = 0.0;
  std::vector<std::string> leads = {"II"};
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthResult {
  EcgRecord record;
  FiducialSet truth;
  LabelEntry label;
};

SynthResult synth_record(const SynthParams& params, const std::string& id = "synth");

struct SynthDatasetPaths {
  std::filesystem::path records_dir;
  std::filesystem::path labels_file;
  std::filesystem::path truth_file;
};

// Writes n records under out_dir/records plus labels.csv and truth.json.
// round(n * apc_fraction) records are APC; per-record seeds derive from
// the master seed, so reruns are byte-identical.
SynthDatasetPaths synth_dataset(std::size_t n, double apc_fraction, const SynthParams& base,
                                std::uint64_t master_seed,
                                const std::filesystem::path& out_dir);

}  // namespace danet
