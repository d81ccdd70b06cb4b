// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdsasr/model.h"

#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace tdsasr {

namespace {

std::atomic<std::uint64_t> g_next_model_id{1};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string layer_name(std::size_t i) { return "layers." + std::to_string(i); }

// key=value fields of one spec record.
std::map<std::string, std::string> parse_fields(std::istringstream& in,
                                                const std::string& line) {
  std::map<std::string, std::string> fields;
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      throw FormatError("spec field without '=' in line: " + line);
    }
    fields[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return fields;
}

int get_int(const std::map<std::string, std::string>& f, const std::string& key,
            const std::string& line, std::optional<int> def = std::nullopt) {
  const auto it = f.find(key);
  if (it == f.end()) {
    if (def) return *def;
    throw FormatError("spec record missing '" + key + "': " + line);
  }
  try {
    std::size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad integer for '" + key + "': " + line);
  }
}

void fill_uniform(std::vector<float>& v, std::size_t n, double bound,
                  std::mt19937_64& rng) {
  std::uniform_real_distribution<float> dist(static_cast<float>(-bound),
                                             static_cast<float>(bound));
  v.resize(n);
  for (auto& x : v) x = dist(rng);
}

ConvWeights random_conv(const ConvSpec& s, std::mt19937_64& rng) {
  ConvWeights w;
  const double bound = 1.0 / std::sqrt(static_cast<double>(s.kernel_size) *
                                       s.in_per_group());
  fill_uniform(w.weight, s.weight_count(), bound, rng);
  fill_uniform(w.bias, s.bias_count(), bound, rng);
  return w;
}

LinearWeights random_linear(int in, int out, std::mt19937_64& rng) {
  LinearWeights w;
  w.in = in;
  w.out = out;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  fill_uniform(w.weight, static_cast<std::size_t>(in) * out, bound, rng);
  fill_uniform(w.bias, out, bound, rng);
  return w;
}

}  // namespace

ConvSpec TdsBlockSpec::conv_spec() const {
  ConvSpec c;
  c.in_channels = dim();
  c.out_channels = dim();
  c.kernel_size = kernel_size;
  c.stride = 1;
  c.groups = width;
  c.left_pad = kernel_size - 1 - right_pad;
  c.right_pad = right_pad;
  c.shared_weights = shared_conv_weights;
  return c;
}

void ModelSpec::validate() const {
  if (input_dim <= 0) throw SpecError("input_dim must be positive");
  if (token_count <= 0) throw SpecError("token_count must be positive");
  if (frame_ms <= 0) throw SpecError("frame_ms must be positive");
  if (!(layer_norm_eps > 0.0f)) throw SpecError("layer_norm_eps must be > 0");
  if (layers.empty()) throw SpecError("model has no layers");

  int dim = input_dim;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string where = "layer " + std::to_string(i) + ": ";
    std::visit(
        Overloaded{
            [&](const ConvLayerSpec& l) {
              if (l.conv.in_channels != dim) {
                throw SpecError(where + "conv expects " +
                                std::to_string(l.conv.in_channels) +
                                " inputs, previous layer gives " +
                                std::to_string(dim));
              }
              try {
                l.conv.validate();
              } catch (const SpecError& e) {
                throw SpecError(where + e.what());
              }
              dim = l.conv.out_channels;
            },
            [&](const TdsBlockSpec& b) {
              if (b.channels <= 0 || b.width <= 0 || b.kernel_size <= 0) {
                throw SpecError(where + "TDS sizes must be positive");
              }
              if (b.right_pad < 0 || b.right_pad > b.kernel_size - 1) {
                throw SpecError(where + "TDS rPad must lie in [0, kw - 1]");
              }
              if (b.dim() != dim) {
                throw SpecError(where + "TDS width*channels " +
                                std::to_string(b.dim()) + " != input " +
                                std::to_string(dim));
              }
            },
            [&](const LinearLayerSpec& l) {
              if (l.in != dim || l.out <= 0) {
                throw SpecError(where + "linear shape mismatch");
              }
              dim = l.out;
            }},
        layers[i]);
  }
  const auto* last = std::get_if<LinearLayerSpec>(&layers.back());
  if (last == nullptr || last->out != token_count) {
    throw SpecError("last layer must be a linear projection to token_count");
  }
}

int ModelSpec::subsampling() const {
  int s = 1;
  for (const auto& l : layers) {
    if (const auto* c = std::get_if<ConvLayerSpec>(&l)) s *= c->conv.stride;
  }
  return s;
}

int ModelSpec::future_context_frames() const {
  int stride = 1;
  int frames = 0;
  for (const auto& l : layers) {
    if (const auto* c = std::get_if<ConvLayerSpec>(&l)) {
      frames += c->conv.right_pad * stride;
      stride *= c->conv.stride;
    } else if (const auto* b = std::get_if<TdsBlockSpec>(&l)) {
      frames += b->right_pad * stride;
    }
  }
  return frames;
}

int ModelSpec::receptive_field_frames() const {
  int stride = 1;
  int frames = 1;
  for (const auto& l : layers) {
    if (const auto* c = std::get_if<ConvLayerSpec>(&l)) {
      frames += (c->conv.kernel_size - 1) * stride;
      stride *= c->conv.stride;
    } else if (const auto* b = std::get_if<TdsBlockSpec>(&l)) {
      frames += (b->kernel_size - 1) * stride;
    }
  }
  return frames;
}

double future_context_ms(const ModelSpec& spec) {
  return static_cast<double>(spec.future_context_frames()) * spec.frame_ms;
}

double receptive_field_ms(const ModelSpec& spec) {
  return static_cast<double>(spec.receptive_field_frames()) * spec.frame_ms;
}

std::size_t parameter_count(const ModelSpec& spec) {
  std::size_t total = 0;
  for (const auto& l : spec.layers) {
    std::visit(Overloaded{[&](const ConvLayerSpec& c) {
                            total += c.conv.parameter_count();
                            if (c.layer_norm) total += 2;
                          },
                          [&](const TdsBlockSpec& b) {
                            const std::size_t d = b.dim();
                            total += b.conv_spec().parameter_count();
                            total += 2 * (d * d + d);
                            total += 4;
                          },
                          [&](const LinearLayerSpec& f) {
                            total += static_cast<std::size_t>(f.in) * f.out + f.out;
                          }},
               l);
  }
  return total;
}

std::string ModelSpec::to_text() const {
  std::ostringstream out;
  out.precision(9);
  out << "tdsasr-model-spec 1\n";
  out << "input_dim " << input_dim << "\n";
  out << "token_count " << token_count << "\n";
  out << "frame_ms " << frame_ms << "\n";
  out << "layer_norm_eps " << layer_norm_eps << "\n";
  for (const auto& l : layers) {
    std::visit(
        Overloaded{
            [&](const ConvLayerSpec& c) {
              out << "conv in=" << c.conv.in_channels
                  << " out=" << c.conv.out_channels
                  << " kw=" << c.conv.kernel_size
                  << " stride=" << c.conv.stride
                  << " groups=" << c.conv.groups
                  << " lpad=" << c.conv.left_pad
                  << " rpad=" << c.conv.right_pad
                  << " shared=" << c.conv.shared_weights
                  << " relu=" << c.relu << " layernorm=" << c.layer_norm
                  << "\n";
            },
            [&](const TdsBlockSpec& b) {
              out << "tds c=" << b.channels << " kw=" << b.kernel_size
                  << " w=" << b.width << " rpad=" << b.right_pad
                  << " shared=" << b.shared_conv_weights << "\n";
            },
            [&](const LinearLayerSpec& f) {
              out << "linear in=" << f.in << " out=" << f.out
                  << " relu=" << f.relu << "\n";
            }},
        l);
  }
  return out.str();
}

ModelSpec ModelSpec::parse(std::string_view text) {
  ModelSpec spec;
  spec.layers.clear();
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (!header) {
      int version = 0;
      if (kind != "tdsasr-model-spec" || !(ls >> version) || version != 1) {
        throw FormatError("model spec must start with 'tdsasr-model-spec 1'");
      }
      header = true;
      continue;
    }
    if (kind == "input_dim" || kind == "token_count" || kind == "frame_ms") {
      int v = 0;
      if (!(ls >> v)) throw FormatError("bad value in line: " + line);
      (kind == "input_dim" ? spec.input_dim
       : kind == "token_count" ? spec.token_count
                               : spec.frame_ms) = v;
    } else if (kind == "layer_norm_eps") {
      if (!(ls >> spec.layer_norm_eps)) throw FormatError("bad eps: " + line);
    } else if (kind == "conv") {
      const auto f = parse_fields(ls, line);
      ConvLayerSpec c;
      c.conv.in_channels = get_int(f, "in", line);
      c.conv.out_channels = get_int(f, "out", line);
      c.conv.kernel_size = get_int(f, "kw", line);
      c.conv.stride = get_int(f, "stride", line, 1);
      c.conv.groups = get_int(f, "groups", line, 1);
      c.conv.right_pad = get_int(f, "rpad", line, 0);
      c.conv.left_pad = get_int(f, "lpad", line,
                                c.conv.kernel_size - c.conv.stride - c.conv.right_pad);
      c.conv.shared_weights = get_int(f, "shared", line, 0) != 0;
      c.relu = get_int(f, "relu", line, 1) != 0;
      c.layer_norm = get_int(f, "layernorm", line, 1) != 0;
      spec.layers.push_back(c);
    } else if (kind == "tds") {
      const auto f = parse_fields(ls, line);
      TdsBlockSpec b;
      b.channels = get_int(f, "c", line);
      b.kernel_size = get_int(f, "kw", line);
      b.width = get_int(f, "w", line);
      b.right_pad = get_int(f, "rpad", line, 0);
      b.shared_conv_weights = get_int(f, "shared", line, 0) != 0;
      spec.layers.push_back(b);
    } else if (kind == "linear") {
      const auto f = parse_fields(ls, line);
      LinearLayerSpec l;
      l.in = get_int(f, "in", line);
      l.out = get_int(f, "out", line);
      l.relu = get_int(f, "relu", line, 0) != 0;
      spec.layers.push_back(l);
    } else {
      throw FormatError("unknown spec record '" + kind + "'");
    }
  }
  if (!header) throw FormatError("empty model spec");
  return spec;
}

ModelSpec ModelSpec::reference(int token_count) {
  constexpr int kWidth = 80;
  ModelSpec spec;
  spec.input_dim = kWidth;
  spec.token_count = token_count;

  auto conv = [&](int c_in, int c_out, int kw, int stride, int rpad) {
    ConvLayerSpec l;
    l.conv.in_channels = kWidth * c_in;
    l.conv.out_channels = kWidth * c_out;
    l.conv.kernel_size = kw;
    l.conv.stride = stride;
    l.conv.groups = kWidth;
    l.conv.right_pad = rpad;
    l.conv.left_pad = kw - stride - rpad;
    l.conv.shared_weights = true;
    spec.layers.push_back(l);
  };
  auto tds = [&](int c, int kw, int rpad) {
    spec.layers.push_back(TdsBlockSpec{c, kw, kWidth, rpad, true});
  };

  // Lookahead in input frames: 1 + 2*(1*2) + 3*(1*4) + 1*8 = 25.
  conv(1, 15, 10, 2, 1);
  tds(15, 9, 1);
  tds(15, 9, 1);
  conv(15, 19, 10, 2, 0);
  tds(19, 9, 1);
  tds(19, 9, 1);
  tds(19, 9, 1);
  conv(19, 23, 10, 2, 0);
  tds(23, 11, 1);
  tds(23, 11, 0);
  tds(23, 11, 0);
  tds(23, 11, 0);
  conv(23, 27, 11, 1, 0);
  for (int i = 0; i < 5; ++i) tds(27, 11, 0);
  spec.layers.push_back(LinearLayerSpec{kWidth * 27, token_count, false});
  return spec;
}

std::size_t StreamState::buffered_frames() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    if (l.conv) n += l.conv->buffered_frames();
    n += l.residual.rows();
  }
  return n;
}

Model Model::build(ModelSpec spec, std::vector<LayerWeights> weights) {
  spec.validate();
  if (weights.size() != spec.layers.size()) {
    throw SpecError("weights given for " + std::to_string(weights.size()) +
                    " layers, spec has " + std::to_string(spec.layers.size()));
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::string where = "layer " + std::to_string(i) + ": ";
    const LayerSpec& ls = spec.layers[i];
    LayerWeights& lw = weights[i];
    try {
      if (const auto* c = std::get_if<ConvLayerSpec>(&ls)) {
        auto* w = std::get_if<ConvLayerWeights>(&lw);
        if (w == nullptr) throw SpecError("expected conv weights");
        check_conv_weights(c->conv, w->conv);
        w->norm.eps = spec.layer_norm_eps;
      } else if (const auto* b = std::get_if<TdsBlockSpec>(&ls)) {
        auto* w = std::get_if<TdsBlockWeights>(&lw);
        if (w == nullptr) throw SpecError("expected TDS weights");
        check_conv_weights(b->conv_spec(), w->conv);
        check_linear_weights(w->fc1);
        check_linear_weights(w->fc2);
        if (w->fc1.in != b->dim() || w->fc1.out != b->dim() ||
            w->fc2.in != b->dim() || w->fc2.out != b->dim()) {
          throw SpecError("TDS feedforward must be square of size w*c");
        }
        w->norm1.eps = spec.layer_norm_eps;
        w->norm2.eps = spec.layer_norm_eps;
      } else {
        const auto& f = std::get<LinearLayerSpec>(ls);
        auto* w = std::get_if<LinearWeights>(&lw);
        if (w == nullptr) throw SpecError("expected linear weights");
        check_linear_weights(*w);
        if (w->in != f.in || w->out != f.out) {
          throw SpecError("linear weight shape mismatch");
        }
      }
    } catch (const SpecError& e) {
      throw SpecError(where + e.what());
    }
  }
  Model m;
  m.spec_ = std::move(spec);
  m.weights_ = std::move(weights);
  m.id_ = g_next_model_id.fetch_add(1);
  return m;
}

Model Model::random(ModelSpec spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<LayerWeights> weights;
  for (const auto& ls : spec.layers) {
    if (const auto* c = std::get_if<ConvLayerSpec>(&ls)) {
      weights.emplace_back(ConvLayerWeights{random_conv(c->conv, rng), {}});
    } else if (const auto* b = std::get_if<TdsBlockSpec>(&ls)) {
      TdsBlockWeights w;
      w.conv = random_conv(b->conv_spec(), rng);
      w.fc1 = random_linear(b->dim(), b->dim(), rng);
      w.fc2 = random_linear(b->dim(), b->dim(), rng);
      weights.emplace_back(std::move(w));
    } else {
      const auto& f = std::get<LinearLayerSpec>(ls);
      weights.emplace_back(random_linear(f.in, f.out, rng));
    }
  }
  return build(std::move(spec), std::move(weights));
}

std::vector<NamedTensor> Model::tensors() const {
  std::vector<NamedTensor> out;
  auto norm = [&](const std::string& name, const LayerNormParams& p) {
    out.push_back({name, {2}, {p.gain, p.bias}});
  };
  auto conv = [&](const std::string& name, const ConvSpec& s,
                  const ConvWeights& w) {
    out.push_back({name + ".weight", s.weight_shape(), w.weight});
    out.push_back({name + ".bias", {static_cast<int>(s.bias_count())}, w.bias});
  };
  auto lin = [&](const std::string& name, const LinearWeights& w) {
    out.push_back({name + ".weight", {w.in, w.out}, w.weight});
    out.push_back({name + ".bias", {w.out}, w.bias});
  };
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const std::string base = layer_name(i);
    const LayerSpec& ls = spec_.layers[i];
    if (const auto* c = std::get_if<ConvLayerSpec>(&ls)) {
      const auto& w = std::get<ConvLayerWeights>(weights_[i]);
      conv(base + ".conv", c->conv, w.conv);
      norm(base + ".norm", w.norm);
    } else if (const auto* b = std::get_if<TdsBlockSpec>(&ls)) {
      const auto& w = std::get<TdsBlockWeights>(weights_[i]);
      conv(base + ".conv", b->conv_spec(), w.conv);
      norm(base + ".norm1", w.norm1);
      lin(base + ".fc1", w.fc1);
      lin(base + ".fc2", w.fc2);
      norm(base + ".norm2", w.norm2);
    } else {
      lin(base, std::get<LinearWeights>(weights_[i]));
    }
  }
  return out;
}

Model Model::from_tensors(ModelSpec spec, std::vector<NamedTensor> tensors) {
  spec.validate();
  std::map<std::string, NamedTensor*> by_name;
  for (auto& t : tensors) {
    std::size_t n = 1;
    for (int d : t.shape) n *= static_cast<std::size_t>(d);
    if (n != t.data.size()) {
      throw FormatError("tensor " + t.name + " shape does not match its data");
    }
    by_name[t.name] = &t;
  }
  auto take = [&](const std::string& name) -> NamedTensor& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("missing tensor " + name);
    return *it->second;
  };
  auto take_norm = [&](const std::string& name) {
    NamedTensor& t = take(name);
    if (t.data.size() != 2) throw FormatError("bad norm tensor " + name);
    return LayerNormParams{t.data[0], t.data[1], spec.layer_norm_eps};
  };
  auto take_conv = [&](const std::string& name) {
    return ConvWeights{std::move(take(name + ".weight").data),
                       std::move(take(name + ".bias").data)};
  };
  auto take_linear = [&](const std::string& name) {
    NamedTensor& w = take(name + ".weight");
    if (w.shape.size() != 2) throw FormatError("bad linear tensor " + name);
    return LinearWeights{w.shape[0], w.shape[1], std::move(w.data),
                         std::move(take(name + ".bias").data)};
  };

  std::vector<LayerWeights> weights;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const std::string base = layer_name(i);
    const LayerSpec& ls = spec.layers[i];
    if (std::holds_alternative<ConvLayerSpec>(ls)) {
      ConvLayerWeights w;
      w.conv = take_conv(base + ".conv");
      w.norm = take_norm(base + ".norm");
      weights.emplace_back(std::move(w));
    } else if (std::holds_alternative<TdsBlockSpec>(ls)) {
      TdsBlockWeights w;
      w.conv = take_conv(base + ".conv");
      w.norm1 = take_norm(base + ".norm1");
      w.fc1 = take_linear(base + ".fc1");
      w.fc2 = take_linear(base + ".fc2");
      w.norm2 = take_norm(base + ".norm2");
      weights.emplace_back(std::move(w));
    } else {
      weights.emplace_back(take_linear(base));
    }
  }
  return build(std::move(spec), std::move(weights));
}

Matrix Model::layer_full(std::size_t i, const Matrix& x) const {
  const LayerSpec& ls = spec_.layers[i];
  if (const auto* c = std::get_if<ConvLayerSpec>(&ls)) {
    const auto& w = std::get<ConvLayerWeights>(weights_[i]);
    Matrix y = conv1d_forward(c->conv, w.conv, x);
    if (c->relu) relu_inplace(y);
    if (c->layer_norm) y = layernorm(w.norm, y);
    return y;
  }
  if (const auto* b = std::get_if<TdsBlockSpec>(&ls)) {
    const auto& w = std::get<TdsBlockWeights>(weights_[i]);
    Matrix y = conv1d_forward(b->conv_spec(), w.conv, x);
    relu_inplace(y);
    add_inplace(y, x);
    y = layernorm(w.norm1, y);
    Matrix z = linear(w.fc1, y);
    relu_inplace(z);
    z = linear(w.fc2, z);
    add_inplace(z, y);
    return layernorm(w.norm2, z);
  }
  const auto& f = std::get<LinearLayerSpec>(ls);
  Matrix y = linear(std::get<LinearWeights>(weights_[i]), x);
  if (f.relu) relu_inplace(y);
  return y;
}

Matrix Model::forward_full(const Matrix& features) const {
  if (features.rows() > 0 && features.cols() != spec_.input_dim) {
    throw InputError("features have " + std::to_string(features.cols()) +
                     " dims, model expects " + std::to_string(spec_.input_dim));
  }
  Matrix x = features.rows() > 0 ? features : Matrix(0, spec_.input_dim);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) x = layer_full(i, x);
  return log_softmax(x);
}

StreamState Model::new_stream() const {
  StreamState s;
  s.model_id_ = id_;
  for (const auto& ls : spec_.layers) {
    StreamState::Layer l;
    if (const auto* c = std::get_if<ConvLayerSpec>(&ls)) {
      l.conv.emplace(c->conv);
    } else if (const auto* b = std::get_if<TdsBlockSpec>(&ls)) {
      l.conv.emplace(b->conv_spec());
      l.residual = Matrix(0, b->dim());
    }
    s.layers_.push_back(std::move(l));
  }
  return s;
}

void Model::check_state(const StreamState& state) const {
  if (state.model_id_ != id_) {
    throw InputError("stream state was created by a different model");
  }
  if (state.finished_) throw InputError("stream already finished");
}

Matrix Model::layer_stream(std::size_t i, StreamState::Layer& st,
                           const Matrix& x, bool finish) const {
  const LayerSpec& ls = spec_.layers[i];
  if (const auto* c = std::get_if<ConvLayerSpec>(&ls)) {
    const auto& w = std::get<ConvLayerWeights>(weights_[i]);
    Matrix y = conv1d_forward(c->conv, w.conv, x, *st.conv);
    if (finish) y.append_rows(conv1d_finish(c->conv, w.conv, *st.conv));
    if (c->relu) relu_inplace(y);
    if (c->layer_norm) y = layernorm(w.norm, y);
    return y;
  }
  if (const auto* b = std::get_if<TdsBlockSpec>(&ls)) {
    const auto& w = std::get<TdsBlockWeights>(weights_[i]);
    const ConvSpec cs = b->conv_spec();
    st.residual.append_rows(x);
    Matrix y = conv1d_forward(cs, w.conv, x, *st.conv);
    if (finish) y.append_rows(conv1d_finish(cs, w.conv, *st.conv));
    // Stride 1: conv output t lines up with input frame t.
    const Matrix skip = st.residual.slice_rows(0, y.rows());
    st.residual.erase_front_rows(y.rows());
    relu_inplace(y);
    add_inplace(y, skip);
    y = layernorm(w.norm1, y);
    Matrix z = linear(w.fc1, y);
    relu_inplace(z);
    z = linear(w.fc2, z);
    add_inplace(z, y);
    return layernorm(w.norm2, z);
  }
  return layer_full(i, x);
}

Matrix Model::forward_chunk(StreamState& state, const Matrix& features) const {
  check_state(state);
  if (features.rows() > 0 && features.cols() != spec_.input_dim) {
    throw InputError("features have " + std::to_string(features.cols()) +
                     " dims, model expects " + std::to_string(spec_.input_dim));
  }
  Matrix x = features.rows() > 0 ? features : Matrix(0, spec_.input_dim);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    x = layer_stream(i, state.layers_[i], x, false);
  }
  state.frames_in_ += features.rows();
  state.frames_out_ += x.rows();
  return log_softmax(x);
}

Matrix Model::finish_stream(StreamState& state) const {
  check_state(state);
  Matrix x(0, spec_.input_dim);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    x = layer_stream(i, state.layers_[i], x, true);
  }
  state.frames_out_ += x.rows();
  state.finished_ = true;
  return log_softmax(x);
}

}  // namespace tdsasr
