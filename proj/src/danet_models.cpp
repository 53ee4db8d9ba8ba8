// DANet composition: waveform enhanced module (dilated residual conv stack),
// classification module (conv/pool stages + MLP), the soft- and hard-coding
// forwards, and the checkpoint format.

#include "danet/danet_models.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "danet/kernels.hpp"

namespace danet {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'D', 'A', 'N', 'T'};
constexpr std::uint32_t kVersion = 1;

json enhancer_cfg_json(const EnhancerConfig& c) {
  return json{{"in_channels", c.in_channels}, {"n_dilated_layers", c.n_dilated_layers},
              {"filters", c.filters},         {"kernel", c.kernel},
              {"dilation", c.dilation},       {"head_kernel", c.head_kernel}};
}

EnhancerConfig enhancer_cfg_from_json(const json& j) {
  EnhancerConfig c;
  c.in_channels = j.at("in_channels").get<std::size_t>();
  c.n_dilated_layers = j.at("n_dilated_layers").get<std::size_t>();
  c.filters = j.at("filters").get<std::size_t>();
  c.kernel = j.at("kernel").get<std::size_t>();
  c.dilation = j.at("dilation").get<std::size_t>();
  c.head_kernel = j.at("head_kernel").get<std::size_t>();
  c.validate();
  return c;
}

json classifier_cfg_json(const ClassifierConfig& c) {
  json stages = json::array();
  for (const auto& s : c.stages) stages.push_back({s.kernel, s.filters, s.pool});
  return json{{"in_channels", c.in_channels},
              {"in_frames", c.in_frames},
              {"stages", stages},
              {"hidden", c.hidden}};
}

ClassifierConfig classifier_cfg_from_json(const json& j) {
  ClassifierConfig c;
  c.in_channels = j.at("in_channels").get<std::size_t>();
  c.in_frames = j.at("in_frames").get<std::size_t>();
  c.stages.clear();
  for (const auto& s : j.at("stages")) {
    c.stages.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(),
                        s.at(2).get<std::size_t>()});
  }
  c.hidden = j.at("hidden").get<std::size_t>();
  c.validate();
  return c;
}

void append_f64_le(std::string& out, double x) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xff);
}

void append_u32_le(std::string& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((x >> (8 * i)) & 0xff);
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

double read_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

std::vector<double> gather_values(std::vector<Parameter*> params) {
  std::vector<double> out;
  for (const Parameter* p : params) {
    out.insert(out.end(), p->value.v.begin(), p->value.v.end());
  }
  return out;
}

void scatter_values(std::vector<Parameter*> params, const std::vector<double>& values) {
  std::size_t pos = 0;
  for (Parameter* p : params) {
    if (pos + p->value.v.size() > values.size()) {
      throw ConfigError("checkpoint: parameter count does not match architecture");
    }
    std::copy(values.begin() + pos, values.begin() + pos + p->value.v.size(),
              p->value.v.begin());
    pos += p->value.v.size();
  }
  if (pos != values.size()) {
    throw ConfigError("checkpoint: parameter count does not match architecture");
  }
}

void write_checkpoint_file(const std::filesystem::path& path, const json& header,
                           const std::vector<double>& values) {
  std::string blob(kMagic, 4);
  append_u32_le(blob, kVersion);
  const std::string head = header.dump();
  append_u32_le(blob, static_cast<std::uint32_t>(head.size()));
  blob += head;
  for (double v : values) append_f64_le(blob, v);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("checkpoint write failed: " + path.string());
}

}  // namespace

// ---------------------------------------------------------------- configs

void EnhancerConfig::validate() const {
  if (in_channels < 1 || filters < 1) throw ConfigError("enhancer: channels must be >= 1");
  if (n_dilated_layers < 2 || n_dilated_layers % 2 != 0) {
    throw ConfigError("enhancer: dilated layers must come in residual pairs");
  }
  if (kernel % 2 == 0 || head_kernel % 2 == 0) {
    throw ConfigError("enhancer: kernel sizes must be odd");
  }
  if (dilation < 1) throw ConfigError("enhancer: dilation must be >= 1");
}

void ClassifierConfig::validate() const {
  if (in_channels < 1 || in_frames < 1) throw ConfigError("classifier: bad input shape");
  if (stages.empty()) throw ConfigError("classifier: needs at least one conv/pool stage");
  for (const auto& s : stages) {
    if (s.kernel % 2 == 0) throw ConfigError("classifier: kernel sizes must be odd");
    if (s.filters < 1 || s.pool < 1) throw ConfigError("classifier: bad stage");
  }
  if (hidden < 1) throw ConfigError("classifier: hidden width must be >= 1");
  if (flatten_features() < 1) throw ConfigError("classifier: input too short for pooling chain");
}

std::vector<std::size_t> ClassifierConfig::frame_chain() const {
  std::vector<std::size_t> chain;
  std::size_t frames = in_frames;
  for (const auto& s : stages) {
    frames = frames / s.pool;
    chain.push_back(frames);
  }
  return chain;
}

std::size_t ClassifierConfig::flatten_features() const {
  const auto chain = frame_chain();
  return chain.back() * stages.back().filters;
}

// --------------------------------------------------------------- Enhancer

Enhancer::Enhancer(const EnhancerConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);

  const std::size_t pairs = cfg.n_dilated_layers / 2;
  std::size_t in_ch = cfg.in_channels;
  std::vector<Conv1d*> body_convs;
  for (std::size_t p = 0; p < pairs; ++p) {
    auto body = std::make_unique<Sequential>();
    body_convs.push_back(&body->add<Conv1d>(in_ch, cfg.filters, cfg.kernel, cfg.dilation, rng));
    body->add<ReLU>();
    body_convs.push_back(&body->add<Conv1d>(cfg.filters, cfg.filters, cfg.kernel, cfg.dilation, rng));
    std::unique_ptr<Conv1d> proj;
    if (in_ch != cfg.filters) {
      proj = std::make_unique<Conv1d>(in_ch, cfg.filters, std::size_t{1}, std::size_t{1}, rng);
    }
    net_.push(std::make_unique<ResidualBlock>(std::move(body), std::move(proj)));
    in_ch = cfg.filters;
  }
  net_.add<Conv1d>(cfg.filters, std::size_t{1}, cfg.head_kernel, std::size_t{1}, rng);
  net_.add<Sigmoid>();

  if (cfg.zero_init_residual) {
    for (Conv1d* c : body_convs) c->zero_weights();
  }
}

Tensor Enhancer::forward(const Tensor& x) { return net_.forward(x); }
Tensor Enhancer::backward(const Tensor& d_out) { return net_.backward(d_out); }

// ------------------------------------------------------------- Classifier

Classifier::Classifier(const ClassifierConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);

  std::size_t in_ch = cfg.in_channels;
  for (const auto& s : cfg.stages) {
    net_.add<Conv1d>(in_ch, s.filters, s.kernel, std::size_t{1}, rng);
    if (!cfg.linear_debug) net_.add<ReLU>();
    net_.add<MaxPool1d>(s.pool);
    in_ch = s.filters;
  }
  net_.add<Flatten>();
  net_.add<Dense>(cfg.flatten_features(), cfg.hidden, rng);
  if (!cfg.linear_debug) net_.add<ReLU>();
  net_.add<Dense>(cfg.hidden, std::size_t{1}, rng);
  if (!cfg.linear_debug) net_.add<Sigmoid>();
}

double Classifier::forward_prob(const Tensor& x) {
  if (x.rank() != 2 || x.channels() != cfg_.in_channels || x.frames() != cfg_.in_frames) {
    throw ShapeError("classifier: expected (" + std::to_string(cfg_.in_channels) + ", " +
                     std::to_string(cfg_.in_frames) + ") input");
  }
  return net_.forward(x).v[0];
}

void Classifier::backward_prob(double d_prob) {
  net_.backward(Tensor::vec({d_prob}));
}

Tensor Classifier::backward_input(double d_prob) {
  return net_.backward(Tensor::vec({d_prob}));
}

// ------------------------------------------------------------- DanetModel

DanetModel::DanetModel(const EnhancerConfig& e, const ClassifierConfig& c, std::uint64_t seed,
                       LeadStrategy strat)
    : enhancer(e, derive_seed(seed, 1)),
      classifier(c, derive_seed(seed, 2)),
      strategy(strat) {
  if (e.in_channels != c.in_channels) {
    throw ConfigError("danet: enhancer and classifier input channels differ");
  }
}

std::vector<Parameter*> DanetModel::params() {
  std::vector<Parameter*> all = enhancer.params();
  const auto cp = classifier.params();
  all.insert(all.end(), cp.begin(), cp.end());
  return all;
}

Tensor enhancer_forward(Enhancer& model, const Tensor& x) { return model.forward(x); }

AttentionWeights enhancer_weights(Enhancer& model, const EcgRecord& rec) {
  const Tensor w2 = model.forward(tensor_from_record(rec));
  return AttentionWeights(w2.v.begin(), w2.v.end());
}

double danet_forward(DanetModel& model, const Tensor& x) {
  const Tensor w2 = model.enhancer.forward(x);
  if (w2.frames() != x.frames()) throw ShapeError("danet: enhancer output length mismatch");

  Tensor z = Tensor::zeros(x.shape);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    kernels::mul(x.row(c), w2.row(0), z.row(c), x.frames());
  }
  model.last_x = x;
  model.last_w2 = w2;
  model.has_forward = true;
  return model.classifier.forward_prob(z);
}

void danet_backward(DanetModel& model, double d_prob, bool into_enhancer) {
  if (!model.has_forward) throw StateError("danet: backward without forward");
  const Tensor dz = model.classifier.backward_input(d_prob);
  if (!into_enhancer) return;

  // d loss / d w2[k] = sum over leads of x[c][k] * dz[c][k]
  Tensor dw2 = Tensor::zeros({std::size_t{1}, model.last_x.frames()});
  for (std::size_t c = 0; c < model.last_x.channels(); ++c) {
    kernels::madd(model.last_x.row(c), dz.row(c), dw2.row(0), model.last_x.frames());
  }
  model.enhancer.backward(dw2);
}

double danet_h_forward(Classifier& clf, const Tensor& x, const AttentionWeights& w1) {
  if (w1.size() != x.frames()) throw ShapeError("danet-h: weight length mismatch");
  Tensor z = Tensor::zeros(x.shape);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    kernels::mul(x.row(c), w1.data(), z.row(c), x.frames());
  }
  return clf.forward_prob(z);
}

// ------------------------------------------------------------ checkpoints

void save_checkpoint(const std::filesystem::path& path, const DanetModel& model) {
  auto& m = const_cast<DanetModel&>(model);
  json header;
  header["kind"] = "danet";
  header["stage"] = model.stage;
  header["enhancer"] = enhancer_cfg_json(model.enhancer.config());
  header["classifier"] = classifier_cfg_json(model.classifier.config());
  header["strategy"] = model.strategy == LeadStrategy::single_lead ? "single" : "all_leads";
  write_checkpoint_file(path, header, gather_values(m.params()));
}

void save_checkpoint(const std::filesystem::path& path, const Enhancer& model) {
  auto& m = const_cast<Enhancer&>(model);
  json header;
  header["kind"] = "enhancer";
  header["stage"] = model.stage;
  header["enhancer"] = enhancer_cfg_json(model.config());
  write_checkpoint_file(path, header, gather_values(m.params()));
}

void save_checkpoint(const std::filesystem::path& path, const Classifier& model,
                     const std::string& stage) {
  auto& m = const_cast<Classifier&>(model);
  json header;
  header["kind"] = "classifier";
  header["stage"] = stage;
  header["classifier"] = classifier_cfg_json(model.config());
  write_checkpoint_file(path, header, gather_values(m.params()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(blob.data());

  if (blob.size() < 12) throw CorruptError("checkpoint truncated: " + path.string());
  if (std::memcmp(blob.data(), kMagic, 4) != 0) {
    throw FormatError("not a DANT checkpoint: " + path.string());
  }
  const std::uint32_t version = read_u32_le(p + 4);
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t header_len = read_u32_le(p + 8);
  if (blob.size() < 12 + std::size_t(header_len)) {
    throw CorruptError("checkpoint truncated in header: " + path.string());
  }

  json header;
  try {
    header = json::parse(blob.substr(12, header_len));
  } catch (const json::exception& e) {
    throw CorruptError("checkpoint header unreadable: " + std::string(e.what()));
  }

  Checkpoint ck;
  ck.kind = header.at("kind").get<std::string>();
  ck.stage = header.at("stage").get<std::string>();
  if (header.contains("enhancer")) ck.enhancer_cfg = enhancer_cfg_from_json(header.at("enhancer"));
  if (header.contains("classifier")) {
    ck.classifier_cfg = classifier_cfg_from_json(header.at("classifier"));
  }

  const std::size_t body = blob.size() - 12 - header_len;
  if (body % 8 != 0) throw CorruptError("checkpoint payload truncated: " + path.string());
  const std::size_t count = body / 8;
  ck.values.resize(count);
  const unsigned char* q = p + 12 + header_len;
  for (std::size_t i = 0; i < count; ++i) ck.values[i] = read_f64_le(q + 8 * i);
  return ck;
}

std::string checkpoint_stage(const std::filesystem::path& path) {
  return read_checkpoint(path).stage;
}

DanetModel load_danet(const std::filesystem::path& path) {
  Checkpoint ck = read_checkpoint(path);
  if (ck.kind != "danet") throw ConfigError("expected a danet checkpoint, got " + ck.kind);
  if (!ck.enhancer_cfg || !ck.classifier_cfg) throw CorruptError("danet checkpoint missing configs");
  DanetModel model(*ck.enhancer_cfg, *ck.classifier_cfg, 0);
  scatter_values(model.params(), ck.values);
  model.stage = ck.stage;
  // any staged danet embeds a pre-trained enhancer
  if (!ck.stage.empty()) model.enhancer.stage = "stage-1";
  return model;
}

std::unique_ptr<Enhancer> load_enhancer(const std::filesystem::path& path) {
  Checkpoint ck = read_checkpoint(path);
  if (ck.kind != "enhancer") throw ConfigError("expected an enhancer checkpoint, got " + ck.kind);
  if (!ck.enhancer_cfg) throw CorruptError("enhancer checkpoint missing config");
  auto model = std::make_unique<Enhancer>(*ck.enhancer_cfg, 0);
  scatter_values(model->params(), ck.values);
  model->stage = ck.stage;
  return model;
}

std::unique_ptr<Classifier> load_classifier(const std::filesystem::path& path,
                                            std::string* stage_out) {
  Checkpoint ck = read_checkpoint(path);
  if (ck.kind != "classifier") {
    throw ConfigError("expected a classifier checkpoint, got " + ck.kind);
  }
  if (!ck.classifier_cfg) throw CorruptError("classifier checkpoint missing config");
  auto model = std::make_unique<Classifier>(*ck.classifier_cfg, 0);
  scatter_values(model->params(), ck.values);
  if (stage_out) *stage_out = ck.stage;
  return model;
}

}  // namespace danet
