#include "ldmdn/network.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "ldmdn/ops.hpp"
#include "ldmdn/rng.hpp"

namespace ldmdn {

int GeometryConfig::stages() const { return std::countr_zero(static_cast<unsigned>(s)); }

void GeometryConfig::validate() const {
  if (s < 2 || !std::has_single_bit(static_cast<unsigned>(s))) {
    throw std::invalid_argument("geometry: s must be a power of two >= 2, got " + std::to_string(s));
  }
  if (image_h <= 0 || image_w <= 0) throw std::invalid_argument("geometry: image extents must be positive");
  if (image_h % s != 0) {
    throw std::invalid_argument("geometry: image_h " + std::to_string(image_h) + " not divisible by s " +
                                std::to_string(s));
  }
  if (image_w % s != 0) {
    throw std::invalid_argument("geometry: image_w " + std::to_string(image_w) + " not divisible by s " +
                                std::to_string(s));
  }
}

std::string to_string(NetworkVariant v) {
  switch (v) {
    case NetworkVariant::Unpaired: return "Unpaired";
    case NetworkVariant::UnpairedLDM: return "UnpairedLDM";
    case NetworkVariant::Paired: return "Paired";
    case NetworkVariant::PairedLDM: return "PairedLDM";
  }
  return "?";
}

NetworkVariant parse_network_variant(std::string_view name) {
  for (auto v : {NetworkVariant::Unpaired, NetworkVariant::UnpairedLDM, NetworkVariant::Paired,
                 NetworkVariant::PairedLDM}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown network variant '" + std::string(name) + "'");
}

bool has_codes(NetworkVariant v) { return v == NetworkVariant::UnpairedLDM || v == NetworkVariant::PairedLDM; }
bool is_unpaired(NetworkVariant v) { return v == NetworkVariant::Unpaired || v == NetworkVariant::UnpairedLDM; }

namespace {

// Kaiming-uniform for leaky-relu fan-in.
template <typename T>
BasicTensor<T> init_weight(Shape shape, std::int64_t fan_in, std::uint64_t& rng_state) {
  const double bound = std::sqrt(6.0 / ((1.0 + kLeakySlope * kLeakySlope) * static_cast<double>(fan_in)));
  std::vector<T> values(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : values) v = static_cast<T>((2.0 * uniform01(rng_state) - 1.0) * bound);
  return BasicTensor<T>::from_data(std::move(shape), std::move(values));
}

template <typename T>
ConvLayer<T> make_conv(BasicParameterStore<T>& store, const std::string& name, int in_c, int out_c, int k,
                       int stride, int padding, bool transpose, std::uint64_t& rng_state) {
  ConvLayer<T> layer;
  layer.stride = stride;
  layer.padding = padding;
  layer.transpose = transpose;
  if (transpose) {
    // Each output pixel of a stride-s transpose conv receives (k/s)^2 taps per input channel.
    const std::int64_t fan_in = static_cast<std::int64_t>(in_c) * std::max(1, (k / stride) * (k / stride));
    layer.weight = store.add(name + ".weight", init_weight<T>({in_c, out_c, k, k}, fan_in, rng_state));
  } else {
    layer.weight = store.add(name + ".weight", init_weight<T>({out_c, in_c, k, k}, in_c * k * k, rng_state));
  }
  layer.bias = store.add(name + ".bias", BasicTensor<T>::zeros({out_c}));
  return layer;
}

}  // namespace

template <typename T>
BasicTensor<T> ConvLayer<T>::operator()(const BasicTensor<T>& x) const {
  auto y = transpose ? conv_transpose2d(x, weight, stride, padding) : conv2d(x, weight, stride, padding);
  return add_bias(y, bias);
}

template <typename T>
Encoder<T>::Encoder(BasicParameterStore<T>& store, const std::string& prefix, const std::vector<int>& channels,
                    std::uint64_t& rng_state) {
  layers_.push_back(make_conv(store, prefix + ".conv0", 1, channels[0], 3, 1, 1, false, rng_state));
  for (std::size_t k = 1; k < channels.size(); ++k) {
    layers_.push_back(make_conv(store, prefix + ".down" + std::to_string(k), channels[k - 1], channels[k], 4, 2, 1,
                                false, rng_state));
  }
}

template <typename T>
std::vector<BasicTensor<T>> Encoder<T>::operator()(const BasicTensor<T>& x) const {
  std::vector<BasicTensor<T>> features;
  features.reserve(layers_.size());
  BasicTensor<T> h = x;
  for (const auto& layer : layers_) {
    h = leaky_relu(layer(h));
    features.push_back(h);
  }
  return features;
}

template <typename T>
Decoder<T>::Decoder(BasicParameterStore<T>& store, const std::string& prefix, const std::vector<int>& channels,
                    int code_channels, std::uint64_t& rng_state) {
  int in_c = code_channels;
  for (std::size_t k = channels.size() - 1; k-- > 0;) {
    up_.push_back(make_conv(store, prefix + ".up" + std::to_string(k + 1), in_c, channels[k], 4, 2, 1, true,
                            rng_state));
    in_c = channels[k];
  }
  out_ = make_conv(store, prefix + ".out", in_c, 1, 3, 1, 1, false, rng_state);
}

template <typename T>
BasicTensor<T> Decoder<T>::operator()(const BasicTensor<T>& code, const std::vector<BasicTensor<T>>* skips) const {
  BasicTensor<T> h = code;
  const std::size_t levels = up_.size();
  for (std::size_t i = 0; i < levels; ++i) {
    h = leaky_relu(up_[i](h));
    if (skips) h = add(h, (*skips)[levels - 1 - i]);
  }
  return tanh(out_(h));
}

template <typename T>
BasicDisentangleNet<T>::BasicDisentangleNet(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.geometry.validate();
  if (cfg_.base_channels < 1 || cfg_.max_channels < cfg_.base_channels) {
    throw std::invalid_argument("network: need 1 <= base_channels <= max_channels");
  }
  for (int k = 0; k <= cfg_.geometry.stages(); ++k) {
    channels_.push_back(std::min(cfg_.base_channels << k, cfg_.max_channels));
  }
  const int code_c = channels_.back();
  std::uint64_t rng = cfg_.seed ^ 0x6c646d646e6e6574ULL;
  const auto v = cfg_.variant;

  enc_content_ = Encoder<T>(params_, "enc_content", channels_, rng);
  dec_clean_ = Decoder<T>(params_, "dec_clean", channels_, code_c, rng);
  if (is_unpaired(v)) {
    enc_artifact_ = Encoder<T>(params_, "enc_artifact", channels_, rng);
    dec_artifact_ = Decoder<T>(params_, "dec_artifact", channels_, 2 * code_c, rng);
  }
  if (is_unpaired(v) || v == NetworkVariant::PairedLDM) {
    enc_clean_ = Encoder<T>(params_, "enc_clean", channels_, rng);
  }
  if (has_codes(v)) {
    const int cc = cfg_.geometry.code_channels();
    compress_x_ = make_conv(params_, "compress_x", code_c, cc, 1, 1, 0, false, rng);
    compress_y_ = make_conv(params_, "compress_y", code_c, cc, 1, 1, 0, false, rng);
  }
}

template <typename T>
void BasicDisentangleNet<T>::check_input(const BasicTensor<T>& t, const char* what) const {
  const auto& g = cfg_.geometry;
  if (!t.defined() || t.rank() != 4 || t.dim(1) != 1 || t.dim(2) != g.image_h || t.dim(3) != g.image_w) {
    throw std::invalid_argument(std::string("network input ") + what + " must be [N,1," +
                                std::to_string(g.image_h) + "," + std::to_string(g.image_w) + "], got " +
                                (t.defined() ? shape_str(t.shape()) : std::string("<undefined>")));
  }
}

template <typename T>
BasicBranchOutputs<T> BasicDisentangleNet<T>::forward(const BasicTensor<T>& x, const std::optional<BasicTensor<T>>& y,
                                                      ForwardScope scope) const {
  check_input(x, "x");
  const auto v = cfg_.variant;
  const bool needs_y = is_unpaired(v) || (has_codes(v) && scope == ForwardScope::Patches);
  if (y) {
    check_input(*y, "y");
    if (y->dim(0) != x.dim(0)) throw std::invalid_argument("network inputs x and y differ in batch size");
  } else if (needs_y) {
    throw std::invalid_argument("variant " + to_string(v) + " needs the artifact-free input y");
  }

  BasicBranchOutputs<T> out;
  const auto fx = enc_content_(x);
  out.x_hat = dec_clean_(fx.back(), &fx);
  if (compress_x_) out.z_x_t = (*compress_x_)(fx.back());

  if (!y || v == NetworkVariant::Paired) return out;

  const auto fy = enc_clean_(*y);
  if (compress_y_) out.z_y_t = (*compress_y_)(fy.back());
  if (scope == ForwardScope::Patches) return out;

  out.y_hat = dec_clean_(fy.back(), nullptr);
  if (!is_unpaired(v)) return out;

  const auto ax = enc_artifact_(x);
  const auto& art_code = ax.back();
  out.x_recon = dec_artifact_(concat_channels(fx.back(), art_code), nullptr);
  out.y_art = dec_artifact_(concat_channels(fy.back(), art_code), nullptr);

  const auto fxh = enc_clean_(*out.x_hat);
  out.x_cycle = dec_artifact_(concat_channels(fxh.back(), art_code), nullptr);
  const auto fya = enc_content_(*out.y_art);
  out.y_cycle = dec_clean_(fya.back(), &fya);
  return out;
}

template <typename T>
BasicTensor<T> BasicDisentangleNet<T>::correct(const BasicTensor<T>& x) const {
  check_input(x, "x");
  const auto fx = enc_content_(x);
  return dec_clean_(fx.back(), &fx);
}

template <typename T>
PatchDiscriminator<T>::PatchDiscriminator(int base_channels, std::uint64_t seed, const std::string& prefix) {
  std::uint64_t rng = seed ^ 0x64697363726d6e74ULL;
  c1_ = make_conv(params_, prefix + ".conv1", 1, base_channels, 4, 2, 1, false, rng);
  c2_ = make_conv(params_, prefix + ".conv2", base_channels, 2 * base_channels, 4, 2, 1, false, rng);
  c3_ = make_conv(params_, prefix + ".conv3", 2 * base_channels, 1, 3, 1, 1, false, rng);
}

template <typename T>
BasicTensor<T> PatchDiscriminator<T>::operator()(const BasicTensor<T>& image) const {
  return c3_(leaky_relu(c2_(leaky_relu(c1_(image)))));
}

template struct ConvLayer<float>;
template struct ConvLayer<double>;
template class Encoder<float>;
template class Encoder<double>;
template class Decoder<float>;
template class Decoder<double>;
template class BasicDisentangleNet<float>;
template class BasicDisentangleNet<double>;
template class PatchDiscriminator<float>;
template class PatchDiscriminator<double>;

}  // namespace ldmdn
