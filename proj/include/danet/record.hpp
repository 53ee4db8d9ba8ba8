#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "danet/errors.hpp"

namespace danet {

// Multi-lead sampled ECG signal, row-major leads x frames, millivolts.
struct EcgRecord {
  std::string id;
  double fs = 0.0;
  std::vector<std::string> leads;
  std::size_t frames = 0;
  std::vector<double> samples;  // leads.size() * frames

  std::size_t channels() const { return leads.size(); }

  double* lead(std::size_t i) { return samples.data() + i * frames; }
  const double* lead(std::size_t i) const { return samples.data() + i * frames; }

  double& at(std::size_t ch, std::size_t t) { return samples[ch * frames + t]; }
  double at(std::size_t ch, std::size_t t) const { return samples[ch * frames + t]; }

  std::size_t lead_index(const std::string& name) const {
    for (std::size_t i = 0; i < leads.size(); ++i) {
      if (leads[i] == name) return i;
    }
    throw NameError("unknown lead '" + name + "' in record '" + id + "'");
  }

  void validate() const {
    if (leads.empty()) throw ShapeError("record '" + id + "': no leads");
    if (frames == 0) throw ShapeError("record '" + id + "': no frames");
    if (samples.size() != leads.size() * frames) {
      throw ShapeError("record '" + id + "': sample count does not match leads x frames");
    }
    if (!(fs > 0.0) || !std::isfinite(fs)) {
      throw ParameterError("record '" + id + "': sampling rate must be positive");
    }
    for (double s : samples) {
      if (!std::isfinite(s)) throw NumericError("record '" + id + "': non-finite sample");
    }
  }
};

enum class Label { APC, NonAPC };

inline const char* label_name(Label l) { return l == Label::APC ? "APC" : "NonAPC"; }

inline Label label_from_string(const std::string& s) {
  if (s == "APC") return Label::APC;
  if (s == "NonAPC") return Label::NonAPC;
  throw DataError("unknown label '" + s + "' (expected APC or NonAPC)");
}

struct LabelEntry {
  std::string record_id;
  Label label = Label::NonAPC;
};

}  // namespace danet
