// Record / label / truth file I/O. CSV records carry a <stem>.meta.json
// sidecar with id and sampling rate; tianchi-style dumps are header +
// delimiter-separated columns at a fixed 500 Hz.

#include "danet/ecg_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace danet {

namespace {

using nlohmann::json;

std::filesystem::path sidecar_path(const std::filesystem::path& record_path) {
  std::filesystem::path p = record_path;
  p.replace_extension(".meta.json");
  return p;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> tokenize(const std::string& line, const std::string& delims) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (delims.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string strip_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                     ", column " + std::to_string(col));
  }
  return value;
}

EcgRecord load_table(const std::filesystem::path& path, bool csv,
                     const std::string& delims) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open record file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file: " + path.string());
  line = strip_cr(line);

  std::vector<std::string> header = csv ? split(line, ',') : tokenize(line, delims);
  if (header.empty()) throw FormatError("missing header line: " + path.string());
  for (auto& name : header) {
    if (name.empty()) throw FormatError("empty lead name in header: " + path.string());
    // a numeric header almost always means the header line is missing
    double dummy;
    auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), dummy);
    if (ec == std::errc() && ptr == name.data() + name.size()) {
      throw FormatError("header line looks numeric (missing lead names): " + path.string());
    }
  }

  const std::size_t channels = header.size();
  std::vector<double> columns;  // sample-major while reading
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> cells = csv ? split(line, ',') : tokenize(line, delims);
    ++rows;
    if (cells.size() != channels) {
      throw FormatError("row " + std::to_string(rows) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(channels) + ": " + path.string());
    }
    for (std::size_t c = 0; c < channels; ++c) {
      columns.push_back(parse_cell(cells[c], rows, c + 1));
    }
  }
  if (rows == 0) throw DataError("empty record (zero rows): " + path.string());

  EcgRecord rec;
  rec.leads = header;
  rec.frames = rows;
  rec.samples.resize(channels * rows);
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      rec.samples[c * rows + t] = columns[t * channels + c];
    }
  }
  return rec;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

json beat_to_json(const Beat& b) {
  json j;
  j["r_peak"] = b.r_peak;
  j["qrs_onset"] = b.qrs_onset;
  j["qrs_offset"] = b.qrs_offset;
  j["p_onset"] = b.p_onset ? json(*b.p_onset) : json(nullptr);
  j["p_offset"] = b.p_offset ? json(*b.p_offset) : json(nullptr);
  j["t_onset"] = b.t_onset ? json(*b.t_onset) : json(nullptr);
  j["t_offset"] = b.t_offset ? json(*b.t_offset) : json(nullptr);
  return j;
}

Beat beat_from_json(const json& j) {
  Beat b;
  b.r_peak = j.at("r_peak").get<long>();
  b.qrs_onset = j.at("qrs_onset").get<long>();
  b.qrs_offset = j.at("qrs_offset").get<long>();
  auto opt = [&](const char* key) -> std::optional<long> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<long>();
  };
  b.p_onset = opt("p_onset");
  b.p_offset = opt("p_offset");
  b.t_onset = opt("t_onset");
  b.t_offset = opt("t_offset");
  return b;
}

}  // namespace

EcgRecord load_record(const std::filesystem::path& path, RecordFormat format,
                      const std::string& tianchi_delims) {
  if (!std::filesystem::exists(path)) throw IoError("no such record file: " + path.string());
  if (format == RecordFormat::csv) {
    EcgRecord rec = load_table(path, /*csv=*/true, ",");
    const json meta = load_json_file(sidecar_path(path));
    if (!meta.contains("fs") || !meta.contains("id")) {
      throw FormatError("sidecar missing fs/id: " + sidecar_path(path).string());
    }
    rec.fs = meta.at("fs").get<double>();
    rec.id = meta.at("id").get<std::string>();
    rec.validate();
    return rec;
  }
  EcgRecord rec = load_table(path, /*csv=*/false, tianchi_delims);
  rec.fs = 500.0;  // competition dumps are digitized at 500 Hz
  rec.id = path.stem().string();
  rec.validate();
  return rec;
}

void save_record(const EcgRecord& rec, const std::filesystem::path& path) {
  rec.validate();
  std::string body;
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    if (c) body += ',';
    body += rec.leads[c];
  }
  body += '\n';
  char buf[64];
  for (std::size_t t = 0; t < rec.frames; ++t) {
    for (std::size_t c = 0; c < rec.channels(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", rec.at(c, t));
      if (c) body += ',';
      body += buf;
    }
    body += '\n';
  }
  write_text_file(path, body);

  json meta;
  meta["id"] = rec.id;
  meta["fs"] = rec.fs;
  write_text_file(sidecar_path(path), meta.dump(2) + "\n");
}

std::vector<LabelEntry> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "record_id,label") {
    throw FormatError("labels file must start with 'record_id,label': " + path.string());
  }
  std::vector<LabelEntry> out;
  std::set<std::string> seen;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    ++row;
    auto cells = split(line, ',');
    if (cells.size() != 2 || cells[0].empty()) {
      throw FormatError("labels row " + std::to_string(row) + " malformed: " + path.string());
    }
    if (!seen.insert(cells[0]).second) {
      throw DataError("duplicate record_id '" + cells[0] + "' in " + path.string());
    }
    out.push_back({cells[0], label_from_string(cells[1])});
  }
  return out;
}

void save_labels(const std::vector<LabelEntry>& labels, const std::filesystem::path& path) {
  std::string body = "record_id,label\n";
  for (const auto& e : labels) {
    body += e.record_id;
    body += ',';
    body += label_name(e.label);
    body += '\n';
  }
  write_text_file(path, body);
}

void save_truth(const std::map<std::string, FiducialSet>& truth,
                const std::filesystem::path& path) {
  json records = json::object();
  for (const auto& [id, fid] : truth) {
    json beats = json::array();
    for (const Beat& b : fid.beats) beats.push_back(beat_to_json(b));
    records[id] = {{"fs", fid.fs}, {"beats", beats}};
  }
  json root;
  root["records"] = records;
  write_text_file(path, root.dump(2) + "\n");
}

std::map<std::string, FiducialSet> load_truth(const std::filesystem::path& path) {
  const json root = load_json_file(path);
  if (!root.contains("records")) throw FormatError("truth file missing 'records': " + path.string());
  std::map<std::string, FiducialSet> out;
  for (const auto& [id, entry] : root.at("records").items()) {
    FiducialSet fid;
    fid.fs = entry.at("fs").get<double>();
    for (const json& jb : entry.at("beats")) fid.beats.push_back(beat_from_json(jb));
    out[id] = std::move(fid);
  }
  return out;
}

}  // namespace danet
