#include "pagan/nn/network.hpp"

#include <array>
#include <charconv>
#include <sstream>
#include <stdexcept>

namespace pagan::nn {

LayerSpec LayerSpec::dense(std::size_t units) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.units = units;
  return s;
}

LayerSpec LayerSpec::conv(std::size_t channels, std::size_t kernel, std::size_t stride, Padding padding) {
  LayerSpec s;
  s.kind = LayerKind::Conv2d;
  s.units = channels;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::act(ActivationKind kind, double slope) {
  LayerSpec s;
  s.kind = LayerKind::Activation;
  s.activation = kind;
  s.slope = slope;
  return s;
}

LayerSpec LayerSpec::sum_pool() {
  LayerSpec s;
  s.kind = LayerKind::GlobalSumPool;
  return s;
}

LayerSpec LayerSpec::drop(double keep_rate, DropoutVariant variant) {
  LayerSpec s;
  s.kind = LayerKind::Dropout;
  s.keep_rate = keep_rate;
  s.dropout = variant;
  return s;
}

LayerSpec LayerSpec::augment_site() {
  LayerSpec s;
  s.kind = LayerKind::AugmentSite;
  return s;
}

LayerSpec LayerSpec::scaled(double factor) {
  LayerSpec s;
  s.kind = LayerKind::Scale;
  s.factor = factor;
  return s;
}

LayerSpec LayerSpec::reshaped(Shape per_sample) {
  LayerSpec s;
  s.kind = LayerKind::Reshape;
  s.shape = std::move(per_sample);
  return s;
}

namespace {

ConvGeometry geometry_for(const Shape& in, const LayerSpec& layer) {
  if (in.size() != 3) throw std::invalid_argument("conv layer needs a [C,H,W] input, got " + shape_string(in));
  return ConvGeometry::make(in[0], in[1], in[2], layer.kernel, layer.stride, layer.padding);
}

}  // namespace

std::vector<Shape> NetworkSpec::infer_shapes() const {
  if (input_shape.empty() || numel(input_shape) == 0) throw std::invalid_argument("network input shape is empty");
  std::vector<Shape> shapes{input_shape};
  bool seen_site = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    const Shape& in = shapes.back();
    Shape out = in;
    switch (layer.kind) {
      case LayerKind::Dense:
        if (layer.units == 0) throw std::invalid_argument("dense layer needs at least one unit");
        out = {layer.units};
        break;
      case LayerKind::Conv2d: {
        if (layer.units == 0) throw std::invalid_argument("conv layer needs at least one channel");
        const auto g = geometry_for(in, layer);
        out = {layer.units, g.out_h, g.out_w};
        break;
      }
      case LayerKind::GlobalSumPool:
        if (in.size() != 3) throw std::invalid_argument("sum pool needs a [C,H,W] input");
        out = {in[0]};
        break;
      case LayerKind::Dropout:
        if (!(layer.keep_rate > 0.0) || layer.keep_rate > 1.0) {
          throw std::invalid_argument("dropout keep rate must be in (0,1]");
        }
        break;
      case LayerKind::AugmentSite:
        if (seen_site) throw std::invalid_argument("at most one augment site per network");
        seen_site = true;
        if (i + 1 >= layers.size() ||
            (layers[i + 1].kind != LayerKind::Dense && layers[i + 1].kind != LayerKind::Conv2d)) {
          throw std::invalid_argument("augment site must be followed by a dense or conv layer");
        }
        break;
      case LayerKind::Reshape:
        if (numel(layer.shape) != numel(in)) {
          throw std::invalid_argument("reshape " + shape_string(in) + " -> " + shape_string(layer.shape) +
                                      " changes the element count");
        }
        out = layer.shape;
        break;
      case LayerKind::Activation:
      case LayerKind::Scale:
        break;
    }
    shapes.push_back(std::move(out));
  }
  return shapes;
}

std::optional<std::size_t> NetworkSpec::augment_site() const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].kind == LayerKind::AugmentSite) return i;
  return std::nullopt;
}

Network::Network(NetworkSpec spec, Rng& rng) : spec_(std::move(spec)) {
  shapes_ = spec_.infer_shapes();
  affine_of_layer_.assign(spec_.layers.size(), static_cast<std::size_t>(-1));
  bool pending_site = false;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& layer = spec_.layers[i];
    const Shape& in = shapes_[i];
    if (layer.kind == LayerKind::AugmentSite) {
      pending_site = true;
      continue;
    }
    if (layer.kind != LayerKind::Dense && layer.kind != LayerKind::Conv2d) continue;
    bitaug::AugmentLayerState state =
        layer.kind == LayerKind::Dense
            ? bitaug::make_dense_augment_layer(numel(in), layer.units, spec_.spectral_norm, rng)
            : bitaug::make_conv_augment_layer(geometry_for(in, layer), layer.units, spec_.spectral_norm, rng);
    state.modulation = spec_.modulation;
    affine_of_layer_[i] = affine_.size();
    if (pending_site) {
      augment_layer_ = affine_.size();
      pending_site = false;
    }
    affine_.push_back(std::move(state));
  }
}

Var Network::forward(const Var& input, const Tensor* bits, Mode mode, Rng& rng) {
  const Shape& in = input.shape();
  if (in.empty() || Shape(in.begin() + 1, in.end()) != spec_.input_shape) {
    throw std::invalid_argument("network input " + shape_string(in) + " does not match [N," +
                                shape_string(spec_.input_shape) + "]");
  }
  const std::size_t batch = in[0];
  const std::size_t level = augmentation_level();
  if (level > 0 && bits == nullptr) throw std::invalid_argument("augmented network needs bit sequences");
  const Tensor no_bits({batch, 0});
  const int sn_iters = mode == Mode::Train ? spec_.sn_train_iters : 0;

  Var x = input;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& layer = spec_.layers[i];
    switch (layer.kind) {
      case LayerKind::Dense:
      case LayerKind::Conv2d: {
        const std::size_t a = affine_of_layer_[i];
        const bool site = augment_layer_ && *augment_layer_ == a;
        const Tensor& b = site && level > 0 ? *bits : no_bits;
        Var features = x;
        if (layer.kind == LayerKind::Dense && x.shape().size() != 2) features = reshape(x, {batch, numel(shapes_[i])});
        x = bitaug::augment_features(features, affine_[a], b, sn_iters);
        break;
      }
      case LayerKind::Activation:
        switch (layer.activation) {
          case ActivationKind::LeakyRelu: x = leaky_relu(x, layer.slope); break;
          case ActivationKind::Relu: x = relu(x); break;
          case ActivationKind::Tanh: x = tanh(x); break;
          case ActivationKind::Identity: break;
        }
        break;
      case LayerKind::GlobalSumPool:
        x = global_sum_pool(x);
        break;
      case LayerKind::Dropout:
        x = apply_dropout(x, layer.keep_rate, layer.dropout, mode, rng);
        break;
      case LayerKind::AugmentSite:
        break;
      case LayerKind::Scale:
        x = scale(x, layer.factor);
        break;
      case LayerKind::Reshape: {
        Shape s{batch};
        s.insert(s.end(), layer.shape.begin(), layer.shape.end());
        x = reshape(x, std::move(s));
        break;
      }
    }
  }
  return x;
}

std::vector<Var> Network::parameters() const {
  std::vector<Var> params;
  for (const auto& a : affine_) {
    auto p = a.parameters();
    params.insert(params.end(), p.begin(), p.end());
  }
  return params;
}

NamedTensors Network::named_parameters() const {
  NamedTensors out;
  for (std::size_t i = 0; i < affine_.size(); ++i) {
    const auto& a = affine_[i];
    const std::string prefix = "layer" + std::to_string(i) + ".";
    out.emplace_back(prefix + "weight", a.base_weights.value());
    out.emplace_back(prefix + "bias", a.bias.value());
    for (std::size_t j = 0; j < a.level(); ++j) {
      out.emplace_back(prefix + "bit" + std::to_string(j), a.bit_weights[j].value());
      out.emplace_back(prefix + "lambda" + std::to_string(j), a.scales[j].value());
      out.emplace_back(prefix + "beta" + std::to_string(j), a.offsets[j].value());
    }
  }
  return out;
}

void Network::load_parameters(const NamedTensors& tensors) {
  std::size_t bits = 0;
  if (augment_layer_) {
    const std::string prefix = "layer" + std::to_string(*augment_layer_) + ".bit";
    for (const auto& [name, t] : tensors)
      if (name.rfind(prefix, 0) == 0) ++bits;
  }
  Rng scratch(0);
  while (augmentation_level() < bits) level_up(scratch);
  const auto current = named_parameters();
  if (current.size() != tensors.size()) throw std::runtime_error("checkpoint does not match network layout");
  std::size_t k = 0;
  auto assign = [&](Var& v) {
    const auto& [name, t] = tensors[k];
    if (name != current[k].first || t.shape() != v.shape()) {
      throw std::runtime_error("checkpoint tensor " + name + " does not match " + current[k].first);
    }
    v.mutable_value() = t;
    ++k;
  };
  for (auto& a : affine_) {
    assign(a.base_weights);
    assign(a.bias);
    for (std::size_t j = 0; j < a.level(); ++j) {
      assign(a.bit_weights[j]);
      assign(a.scales[j]);
      assign(a.offsets[j]);
    }
  }
}

std::size_t Network::augmentation_level() const {
  return augment_layer_ ? affine_[*augment_layer_].level() : 0;
}

void Network::level_up(Rng& rng) {
  if (!augment_layer_) throw std::logic_error("network has no augment site");
  bitaug::level_up(affine_[*augment_layer_], rng);
}

std::vector<Var> Network::newest_bit_parameters() const {
  if (!augment_layer_) return {};
  return affine_[*augment_layer_].newest_bit_parameters();
}

void Network::reinitialize(Rng& rng) {
  for (auto& a : affine_) bitaug::reinitialize(a, rng);
}

GraphEvaluation evaluate_graph(Network& network, const Tensor& input, Mode mode, Rng& rng, const Tensor* bits) {
  Var x = parameter(input);
  Var y = network.forward(x, bits, mode, rng);
  GraphEvaluation out;
  out.output = y.value();
  out.backprop = [x, y](const Tensor& grad_output) mutable {
    backward(y, grad_output);
    Tensor g = x.grad();
    x.zero_grad();
    return g;
  };
  return out;
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& s, const std::string& ctx) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("bad integer '" + s + "' in " + ctx);
  return v;
}

double to_double(const std::string& s, const std::string& ctx) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("bad number '" + s + "' in " + ctx);
}

std::string number(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

std::vector<LayerSpec> parse_layers(const std::string& text) {
  std::vector<LayerSpec> layers;
  for (const auto& raw : split(text, ',')) {
    const std::string item = trim(raw);
    if (item.empty()) continue;
    auto f = split(item, ':');
    const std::string& name = f[0];
    auto need = [&](std::size_t lo, std::size_t hi) {
      if (f.size() < lo + 1 || f.size() > hi + 1) throw std::invalid_argument("wrong argument count in layer '" + item + "'");
    };
    if (name == "dense") {
      need(1, 1);
      layers.push_back(LayerSpec::dense(to_size(f[1], item)));
    } else if (name == "conv") {
      need(1, 4);
      const std::size_t k = f.size() > 2 ? to_size(f[2], item) : 3;
      const std::size_t s = f.size() > 3 ? to_size(f[3], item) : 1;
      Padding p = Padding::Same;
      if (f.size() > 4) {
        if (f[4] == "valid") p = Padding::Valid;
        else if (f[4] != "same") throw std::invalid_argument("unknown padding in '" + item + "'");
      }
      layers.push_back(LayerSpec::conv(to_size(f[1], item), k, s, p));
    } else if (name == "lrelu") {
      need(0, 1);
      layers.push_back(LayerSpec::act(ActivationKind::LeakyRelu, f.size() > 1 ? to_double(f[1], item) : 0.2));
    } else if (name == "relu") {
      need(0, 0);
      layers.push_back(LayerSpec::act(ActivationKind::Relu));
    } else if (name == "tanh") {
      need(0, 0);
      layers.push_back(LayerSpec::act(ActivationKind::Tanh));
    } else if (name == "identity") {
      need(0, 0);
      layers.push_back(LayerSpec::act(ActivationKind::Identity));
    } else if (name == "pool") {
      need(0, 0);
      layers.push_back(LayerSpec::sum_pool());
    } else if (name == "dropout") {
      need(1, 2);
      DropoutVariant v = DropoutVariant::Entrywise;
      if (f.size() > 2) {
        if (f[2] == "spatial") v = DropoutVariant::Spatial;
        else if (f[2] != "entrywise") throw std::invalid_argument("unknown dropout variant in '" + item + "'");
      }
      layers.push_back(LayerSpec::drop(to_double(f[1], item), v));
    } else if (name == "aug") {
      need(0, 0);
      layers.push_back(LayerSpec::augment_site());
    } else if (name == "scale") {
      need(1, 1);
      layers.push_back(LayerSpec::scaled(to_double(f[1], item)));
    } else if (name == "reshape") {
      if (f.size() < 2) throw std::invalid_argument("reshape needs dimensions");
      Shape s;
      for (std::size_t i = 1; i < f.size(); ++i) s.push_back(to_size(f[i], item));
      layers.push_back(LayerSpec::reshaped(std::move(s)));
    } else {
      throw std::invalid_argument("unknown layer '" + name + "'");
    }
  }
  return layers;
}

std::string format_layers(const std::vector<LayerSpec>& layers) {
  std::string out;
  for (const auto& l : layers) {
    if (!out.empty()) out += ',';
    switch (l.kind) {
      case LayerKind::Dense: out += "dense:" + std::to_string(l.units); break;
      case LayerKind::Conv2d:
        out += "conv:" + std::to_string(l.units) + ":" + std::to_string(l.kernel) + ":" + std::to_string(l.stride) +
               (l.padding == Padding::Same ? ":same" : ":valid");
        break;
      case LayerKind::Activation:
        switch (l.activation) {
          case ActivationKind::LeakyRelu: out += l.slope == 0.2 ? "lrelu" : "lrelu:" + number(l.slope); break;
          case ActivationKind::Relu: out += "relu"; break;
          case ActivationKind::Tanh: out += "tanh"; break;
          case ActivationKind::Identity: out += "identity"; break;
        }
        break;
      case LayerKind::GlobalSumPool: out += "pool"; break;
      case LayerKind::Dropout:
        out += "dropout:" + number(l.keep_rate) + (l.dropout == DropoutVariant::Spatial ? ":spatial" : ":entrywise");
        break;
      case LayerKind::AugmentSite: out += "aug"; break;
      case LayerKind::Scale: out += "scale:" + number(l.factor); break;
      case LayerKind::Reshape:
        out += "reshape";
        for (auto d : l.shape) out += ":" + std::to_string(d);
        break;
    }
  }
  return out;
}

}  // namespace pagan::nn
