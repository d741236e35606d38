#include "moco/network.hpp"

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "moco/tensor.hpp"

namespace moco {

namespace fs = std::filesystem;

std::vector<GLayout::ConvSpec> GLayout::convs() const {
  const int io = 2 * coils;
  return {{io, features}, {features, features}, {features, features}, {features, io}};
}

Eigen::Index GLayout::param_count() const {
  Eigen::Index n = 0;
  for (const auto& c : convs()) n += static_cast<Eigen::Index>(c.out_ch) * c.in_ch * 9 + c.out_ch;
  return n;
}

std::pair<Eigen::Index, Eigen::Index> GLayout::layer_span(int l) const {
  Eigen::Index off = 0;
  const auto specs = convs();
  for (int i = 0; i < l; ++i)
    off += static_cast<Eigen::Index>(specs[static_cast<std::size_t>(i)].out_ch) *
               specs[static_cast<std::size_t>(i)].in_ch * 9 +
           specs[static_cast<std::size_t>(i)].out_ch;
  const auto& s = specs[static_cast<std::size_t>(l)];
  return {off, off + static_cast<Eigen::Index>(s.out_ch) * s.in_ch * 9};
}

std::vector<std::pair<int, int>> HLayout::dense_dims() const {
  std::vector<std::pair<int, int>> dims;
  int in = 3 * num_shots;
  for (int l = 0; l < layers; ++l) {
    dims.push_back({in, hidden});
    in = hidden;
  }
  dims.push_back({in, static_cast<int>(out_dim)});
  return dims;
}

Eigen::Index HLayout::param_count() const {
  Eigen::Index n = 0;
  for (const auto& [in, out] : dense_dims())
    n += static_cast<Eigen::Index>(in) * out + out;
  return n;
}

std::pair<Eigen::Index, Eigen::Index> HLayout::layer_span(int l) const {
  Eigen::Index off = 0;
  const auto dims = dense_dims();
  for (int i = 0; i < l; ++i)
    off += static_cast<Eigen::Index>(dims[static_cast<std::size_t>(i)].first) *
               dims[static_cast<std::size_t>(i)].second +
           dims[static_cast<std::size_t>(i)].second;
  const auto& [in, out] = dims[static_cast<std::size_t>(l)];
  return {off, off + static_cast<Eigen::Index>(in) * out};
}

namespace {

std::string act_name(ad::Act a) {
  switch (a) {
    case ad::Act::Relu: return "relu";
    case ad::Act::Tanh: return "tanh";
    case ad::Act::Gelu: return "gelu";
  }
  return "gelu";
}

ad::Act act_from_name(const std::string& s) {
  if (s == "relu") return ad::Act::Relu;
  if (s == "tanh") return ad::Act::Tanh;
  if (s == "gelu") return ad::Act::Gelu;
  throw FormatError("unknown activation: " + s);
}

}  // namespace

nlohmann::json ModelConfig::to_json() const {
  return {{"g",
           {{"coils", g.coils},
            {"features", g.features},
            {"act", act_name(g.act)},
            {"image_first", g.image_first}}},
          {"h",
           {{"num_shots", h.num_shots},
            {"hidden", h.hidden},
            {"layers", h.layers},
            {"out_dim", h.out_dim},
            {"act", act_name(h.act)}}},
          {"max_trans_mm", max_trans_mm},
          {"max_rot_deg", max_rot_deg}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.g.coils = j.at("g").at("coils").get<int>();
  c.g.features = j.at("g").at("features").get<int>();
  c.g.act = act_from_name(j.at("g").at("act").get<std::string>());
  c.g.image_first = j.at("g").value("image_first", false);
  c.h.num_shots = j.at("h").at("num_shots").get<int>();
  c.h.hidden = j.at("h").at("hidden").get<int>();
  c.h.layers = j.at("h").at("layers").get<int>();
  c.h.out_dim = j.at("h").at("out_dim").get<Eigen::Index>();
  c.h.act = act_from_name(j.at("h").at("act").get<std::string>());
  c.max_trans_mm = j.at("max_trans_mm").get<double>();
  c.max_rot_deg = j.at("max_rot_deg").get<double>();
  if (c.h.out_dim != c.g.param_count())
    throw FormatError("model config: hypernetwork output dim != |theta_g|");
  return c;
}

namespace {

// He-style uniform init, limit sqrt(6 / fan_in): preserves activation scale
// through the stacked layers (a plain 1/sqrt(fan_in) limit shrinks
// activations roughly 3x per layer and starves the hypernetwork output).
void fill_fan_in(RngStream& rng, Eigen::VectorXd& v, Eigen::Index w_off, Eigen::Index w_len,
                 Eigen::Index b_len, int fan_in, double scale) {
  const double limit = scale * std::sqrt(6.0 / static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < w_len; ++i) v[w_off + i] = rng.uniform(-limit, limit);
  for (Eigen::Index i = 0; i < b_len; ++i) v[w_off + w_len + i] = 0.1 * rng.uniform(-limit, limit);
}

}  // namespace

Eigen::VectorXd init_g_weights(RngStream& rng, const GLayout& layout, double last_scale) {
  Eigen::VectorXd v(layout.param_count());
  const auto specs = layout.convs();
  for (int l = 0; l < static_cast<int>(specs.size()); ++l) {
    const auto [w_off, b_off] = layout.layer_span(l);
    const auto& s = specs[static_cast<std::size_t>(l)];
    const bool last = l + 1 == static_cast<int>(specs.size());
    fill_fan_in(rng, v, w_off, b_off - w_off, s.out_ch, s.in_ch * 9,
                last ? last_scale : 1.0);
  }
  return v;
}

Eigen::VectorXd init_h_weights(RngStream& rng, const HLayout& layout, double last_scale) {
  Eigen::VectorXd v(layout.param_count());
  const auto dims = layout.dense_dims();
  for (int l = 0; l < static_cast<int>(dims.size()); ++l) {
    const auto [w_off, b_off] = layout.layer_span(l);
    const auto& [in, out] = dims[static_cast<std::size_t>(l)];
    const bool last = l + 1 == static_cast<int>(dims.size());
    fill_fan_in(rng, v, w_off, b_off - w_off, out, in, last ? last_scale : 1.0);
  }
  return v;
}

Eigen::VectorXd normalize_motion(const MotionParams& m, double max_trans_mm,
                                 double max_rot_deg) {
  Eigen::VectorXd v = m.to_vector();
  for (int s = 0; s < m.num_shots(); ++s) {
    v[3 * s] /= max_trans_mm;
    v[3 * s + 1] /= max_trans_mm;
    v[3 * s + 2] /= max_rot_deg;
  }
  return v;
}

Eigen::VectorXd h_forward(const HLayout& layout, const Eigen::VectorXd& theta_h,
                          const Eigen::VectorXd& m_norm) {
  if (theta_h.size() != layout.param_count())
    throw DimensionError("h_forward: theta_h length mismatch");
  if (m_norm.size() != 3 * layout.num_shots)
    throw DimensionError("h_forward: motion vector must have 3S entries");
  const auto dims = layout.dense_dims();
  Eigen::VectorXd x = m_norm;
  for (int l = 0; l < static_cast<int>(dims.size()); ++l) {
    const auto [w_off, b_off] = layout.layer_span(l);
    const auto& [in, out] = dims[static_cast<std::size_t>(l)];
    const Eigen::VectorXd w = theta_h.segment(w_off, static_cast<Eigen::Index>(in) * out);
    const Eigen::VectorXd b = theta_h.segment(b_off, out);
    x = ad::dense_fwd(w, b, x);
    if (l + 1 < static_cast<int>(dims.size()))
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = ad::act_fwd(layout.act, x[i]);
  }
  return x;
}

std::vector<RealArray> g_forward_channels(const GLayout& layout,
                                          const Eigen::VectorXd& theta_g,
                                          const std::vector<RealArray>& in_channels) {
  if (theta_g.size() != layout.param_count())
    throw DimensionError("g_forward: theta_g length mismatch");
  if (static_cast<int>(in_channels.size()) != 2 * layout.coils)
    throw DimensionError("g_forward: expected 2C input channels");
  const auto specs = layout.convs();
  auto conv = [&](const std::vector<RealArray>& in, int l) {
    const auto [w_off, b_off] = layout.layer_span(l);
    const auto& s = specs[static_cast<std::size_t>(l)];
    return ad::conv3x3_fwd(theta_g.segment(w_off, b_off - w_off),
                           theta_g.segment(b_off, s.out_ch), in, s.out_ch);
  };
  auto act = [&](std::vector<RealArray> in) {
    for (auto& p : in) p = ad::act_fwd(layout.act, p);
    return in;
  };

  std::vector<RealArray> z;
  if (layout.image_first) {
    z = ad::ifft2c_pairs_fwd(in_channels);
    z = act(conv(z, 0));
    z = act(conv(z, 1));
    z = ad::fft2c_pairs_fwd(z);
    z = act(conv(z, 2));
    z = conv(z, 3);
  } else {
    z = act(conv(in_channels, 0));
    z = act(conv(z, 1));
    z = ad::ifft2c_pairs_fwd(z);
    z = act(conv(z, 2));
    z = conv(z, 3);
    z = ad::fft2c_pairs_fwd(z);
  }
  for (std::size_t k = 0; k < z.size(); ++k) z[k] += in_channels[k];
  return z;
}

std::vector<RealArray> pack_kspace_channels(const KSpaceData& y) {
  std::vector<RealArray> ch;
  ch.reserve(2 * y.coils.size());
  for (const auto& c : y.coils) {
    ch.push_back(c.real());
    ch.push_back(c.imag());
  }
  return ch;
}

KSpaceData unpack_kspace_channels(const std::vector<RealArray>& ch) {
  if (ch.size() % 2 != 0) throw DimensionError("unpack: channel count must be even");
  KSpaceData y;
  for (std::size_t k = 0; k + 1 < ch.size(); k += 2) {
    CxArray z(ch[k].rows(), ch[k].cols());
    z.real() = ch[k];
    z.imag() = ch[k + 1];
    y.coils.push_back(std::move(z));
  }
  return y;
}

int build_g_tape(ad::Tape& tape, const GLayout& layout, int theta_g_node, int input_node) {
  const auto specs = layout.convs();
  auto conv = [&](int x, int l) {
    const auto [w_off, b_off] = layout.layer_span(l);
    const auto& s = specs[static_cast<std::size_t>(l)];
    const int w = tape.slice(theta_g_node, w_off, b_off - w_off);
    const int b = tape.slice(theta_g_node, b_off, s.out_ch);
    return tape.conv3x3(x, w, b, s.out_ch);
  };
  int z;
  if (layout.image_first) {
    z = tape.ifft2c_pairs(input_node);
    z = tape.activation(conv(z, 0), layout.act);
    z = tape.activation(conv(z, 1), layout.act);
    z = tape.fft2c_pairs(z);
    z = tape.activation(conv(z, 2), layout.act);
    z = conv(z, 3);
  } else {
    z = tape.activation(conv(input_node, 0), layout.act);
    z = tape.activation(conv(z, 1), layout.act);
    z = tape.ifft2c_pairs(z);
    z = tape.activation(conv(z, 2), layout.act);
    z = conv(z, 3);
    z = tape.fft2c_pairs(z);
  }
  return tape.add(z, input_node);
}

int build_h_tape(ad::Tape& tape, const HLayout& layout, int theta_h_node, int m_node) {
  const auto dims = layout.dense_dims();
  int x = m_node;
  for (int l = 0; l < static_cast<int>(dims.size()); ++l) {
    const auto [w_off, b_off] = layout.layer_span(l);
    const auto& [in, out] = dims[static_cast<std::size_t>(l)];
    const int w = tape.slice(theta_h_node, w_off, static_cast<Eigen::Index>(in) * out);
    const int b = tape.slice(theta_h_node, b_off, out);
    x = tape.dense(x, w, b, out);
    if (l + 1 < static_cast<int>(dims.size())) x = tape.activation(x, layout.act);
  }
  return x;
}

HyperModel::Prepared HyperModel::prepare(const KSpaceData& y,
                                         const ShotPattern& pattern) const {
  Prepared prep;
  const KSpaceData arc = arc_interp(y, pattern);
  prep.norm = rss_recon(arc).maxCoeff();
  if (prep.norm <= 0.0) prep.norm = 1.0;
  prep.channels = pack_kspace_channels(arc);
  for (auto& c : prep.channels) c /= prep.norm;
  return prep;
}

KSpaceData HyperModel::predict_kspace(const Prepared& prep, const MotionParams& m) const {
  const Eigen::VectorXd m_norm =
      normalize_motion(m, config.max_trans_mm, config.max_rot_deg);
  const Eigen::VectorXd theta_g = h_forward(config.h, theta_h, m_norm);
  std::vector<RealArray> out = g_forward_channels(config.g, theta_g, prep.channels);
  for (auto& c : out) c *= prep.norm;
  return unpack_kspace_channels(out);
}

RealArray HyperModel::f_forward(const KSpaceData& y, const ShotPattern& pattern,
                                const MotionParams& m) const {
  return rss_recon(predict_kspace(prepare(y, pattern), m));
}

KSpaceData ConvModel::predict_kspace(const HyperModel::Prepared& prep) const {
  std::vector<RealArray> out = g_forward_channels(config.g, theta_g, prep.channels);
  for (auto& c : out) c *= prep.norm;
  return unpack_kspace_channels(out);
}

RealArray ConvModel::forward(const KSpaceData& y, const ShotPattern& pattern) const {
  HyperModel hm;
  hm.config = config;
  return rss_recon(predict_kspace(hm.prepare(y, pattern)));
}

namespace {

void save_weights(const std::string& dir, const ModelConfig& cfg,
                  const std::string& kind, const Eigen::VectorXd& theta) {
  fs::create_directories(dir);
  nlohmann::json layout = cfg.to_json();
  layout["kind"] = kind;
  std::ofstream f(fs::path(dir) / "layout.json");
  if (!f) throw IoError("cannot write layout.json in " + dir);
  f << layout.dump(2) << "\n";
  std::vector<double> data(theta.data(), theta.data() + theta.size());
  write_tensor_real((fs::path(dir) / "weights.mtns").string(),
                    {static_cast<std::size_t>(theta.size())}, data);
}

std::pair<ModelConfig, Eigen::VectorXd> load_weights(const std::string& dir,
                                                     const std::string& kind) {
  std::ifstream f(fs::path(dir) / "layout.json");
  if (!f) throw IoError("cannot open layout.json in " + dir);
  nlohmann::json layout;
  try {
    layout = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(dir + "/layout.json: " + e.what());
  }
  if (layout.value("kind", "") != kind)
    throw FormatError(dir + ": expected a " + kind + " model");
  ModelConfig cfg = ModelConfig::from_json(layout);
  auto [shape, data] = read_tensor_real((fs::path(dir) / "weights.mtns").string());
  Eigen::VectorXd theta =
      Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
  return {cfg, theta};
}

}  // namespace

void save_hyper_model(const std::string& dir, const HyperModel& model) {
  save_weights(dir, model.config, "hypernet", model.theta_h);
}

HyperModel load_hyper_model(const std::string& dir) {
  auto [cfg, theta] = load_weights(dir, "hypernet");
  if (theta.size() != cfg.h.param_count())
    throw FormatError(dir + ": weight count does not match layout");
  HyperModel m;
  m.config = cfg;
  m.theta_h = theta;
  return m;
}

void save_conv_model(const std::string& dir, const ConvModel& model) {
  save_weights(dir, model.config, "conv", model.theta_g);
}

ConvModel load_conv_model(const std::string& dir) {
  auto [cfg, theta] = load_weights(dir, "conv");
  if (theta.size() != cfg.g.param_count())
    throw FormatError(dir + ": weight count does not match layout");
  ConvModel m;
  m.config = cfg;
  m.theta_g = theta;
  return m;
}

}  // namespace moco
