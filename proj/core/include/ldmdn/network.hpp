#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ldmdn/adam.hpp"
#include "ldmdn/tensor.hpp"

namespace ldmdn {

/// Image size and the encoder down-sampling step s. Patches are s x s pixels,
/// compressed codes carry s*s channels, patch points live in R^{2 s^2}.
struct GeometryConfig {
  int image_h = 64;
  int image_w = 64;
  int s = 8;

  int code_channels() const { return s * s; }
  int patch_dim() const { return 2 * s * s; }
  int code_h() const { return image_h / s; }
  int code_w() const { return image_w / s; }
  /// Number of stride-2 encoder stages (log2 s).
  int stages() const;
  /// Throws std::invalid_argument unless s is a power of two >= 2 dividing both extents.
  void validate() const;
};

/// Network layouts for the four learning paradigms.
///   Unpaired     ADN: content/artifact encoders, clean/artifact decoders.
///   UnpairedLDM  Unpaired plus code-compression layers on both content encoders.
///   Paired       content encoder -> clean decoder with skip connections.
///   PairedLDM    Paired plus the clean-image encoder and compression layers.
enum class NetworkVariant { Unpaired, UnpairedLDM, Paired, PairedLDM };

std::string to_string(NetworkVariant v);
NetworkVariant parse_network_variant(std::string_view name);
bool has_codes(NetworkVariant v);
bool is_unpaired(NetworkVariant v);

struct NetworkConfig {
  GeometryConfig geometry;
  NetworkVariant variant = NetworkVariant::PairedLDM;
  int base_channels = 8;
  int max_channels = 32;
  std::uint64_t seed = 0;
};

/// Outputs of one forward pass. Fields a variant does not define stay empty.
template <typename T>
struct BasicBranchOutputs {
  std::optional<BasicTensor<T>> x_hat;    // artifact-corrected x
  std::optional<BasicTensor<T>> y_hat;    // clean-branch reconstruction of y
  std::optional<BasicTensor<T>> x_recon;  // artifact-branch reconstruction of x
  std::optional<BasicTensor<T>> y_art;    // y with the artifact code of x applied
  std::optional<BasicTensor<T>> x_cycle;  // x_hat pushed back through the artifact branch
  std::optional<BasicTensor<T>> y_cycle;  // y_art pushed back through the correction branch
  std::optional<BasicTensor<T>> z_x_t;    // compressed code of x, [N, s^2, H/s, W/s]
  std::optional<BasicTensor<T>> z_y_t;    // compressed code of y, [N, s^2, H/s, W/s]
};

using BranchOutputs = BasicBranchOutputs<float>;

/// Full: every output the variant defines.
/// Patches: only x_hat and the compressed codes (what a patch set needs).
enum class ForwardScope { Full, Patches };

template <typename T>
struct ConvLayer {
  BasicTensor<T> weight;
  BasicTensor<T> bias;
  int stride = 1;
  int padding = 0;
  bool transpose = false;

  BasicTensor<T> operator()(const BasicTensor<T>& x) const;
};

template <typename T>
class Encoder {
 public:
  Encoder() = default;
  Encoder(BasicParameterStore<T>& store, const std::string& prefix, const std::vector<int>& channels,
          std::uint64_t& rng_state);
  /// Feature maps at every level; back() is the code at H/s x W/s.
  std::vector<BasicTensor<T>> operator()(const BasicTensor<T>& x) const;

 private:
  std::vector<ConvLayer<T>> layers_;
};

template <typename T>
class Decoder {
 public:
  Decoder() = default;
  Decoder(BasicParameterStore<T>& store, const std::string& prefix, const std::vector<int>& channels,
          int code_channels, std::uint64_t& rng_state);
  /// Decodes a code; `skips` (encoder features, full resolution first) are
  /// added level by level when given.
  BasicTensor<T> operator()(const BasicTensor<T>& code, const std::vector<BasicTensor<T>>* skips) const;

 private:
  std::vector<ConvLayer<T>> up_;
  ConvLayer<T> out_;
};

template <typename T>
class BasicDisentangleNet {
 public:
  explicit BasicDisentangleNet(NetworkConfig cfg);

  const NetworkConfig& config() const { return cfg_; }
  NetworkVariant variant() const { return cfg_.variant; }
  const GeometryConfig& geometry() const { return cfg_.geometry; }

  BasicParameterStore<T>& parameters() { return params_; }
  const BasicParameterStore<T>& parameters() const { return params_; }

  /// x: artifact-affected images [N,1,H,W]. y: artifact-free images, required
  /// by the unpaired variants and by PairedLDM for its clean-branch code.
  BasicBranchOutputs<T> forward(const BasicTensor<T>& x, const std::optional<BasicTensor<T>>& y,
                                ForwardScope scope = ForwardScope::Full) const;

  /// Artifact-corrected image only (content encoder -> clean decoder); valid for every variant.
  BasicTensor<T> correct(const BasicTensor<T>& x) const;

 private:
  void check_input(const BasicTensor<T>& t, const char* what) const;

  NetworkConfig cfg_;
  BasicParameterStore<T> params_;
  std::vector<int> channels_;
  Encoder<T> enc_content_;
  Encoder<T> enc_artifact_;
  Encoder<T> enc_clean_;
  Decoder<T> dec_clean_;
  Decoder<T> dec_artifact_;
  std::optional<ConvLayer<T>> compress_x_;
  std::optional<ConvLayer<T>> compress_y_;
};

using DisentangleNet = BasicDisentangleNet<float>;

/// Anything that maps an image batch to a realness map.
template <typename T>
class BasicDiscriminator {
 public:
  virtual ~BasicDiscriminator() = default;
  virtual BasicTensor<T> operator()(const BasicTensor<T>& image) const = 0;
};

/// Three strided convolutions producing a per-patch realness map.
template <typename T>
class PatchDiscriminator : public BasicDiscriminator<T> {
 public:
  PatchDiscriminator(int base_channels, std::uint64_t seed, const std::string& prefix = "disc");
  BasicTensor<T> operator()(const BasicTensor<T>& image) const override;
  BasicParameterStore<T>& parameters() { return params_; }
  const BasicParameterStore<T>& parameters() const { return params_; }

 private:
  BasicParameterStore<T> params_;
  ConvLayer<T> c1_, c2_, c3_;
};

using Discriminator = BasicDiscriminator<float>;

// --- losses ---------------------------------------------------------------

/// Mean absolute difference.
template <typename T>
BasicTensor<T> loss_sup(const BasicTensor<T>& x_hat, const BasicTensor<T>& x_gt);

struct AdnWeights {
  double adv_clean = 1.0;     // D_clean should take x_hat for clean
  double adv_artifact = 1.0;  // D_artifact should take y_art for artifact-affected
  double recon = 1.0;
  double cycle = 1.0;
  double artifact = 1.0;
};

template <typename T>
struct AdnDiscriminators {
  const BasicDiscriminator<T>* clean = nullptr;
  const BasicDiscriminator<T>* artifact = nullptr;
};

/// Individually weighted components; `total` is their weighted sum.
template <typename T>
struct AdnLossTerms {
  BasicTensor<T> adv_clean;
  BasicTensor<T> adv_artifact;
  BasicTensor<T> recon;
  BasicTensor<T> cycle;
  BasicTensor<T> artifact;
  BasicTensor<T> total;
};

/// Least-squares adversarial pair, L1 self-reconstruction, L1 cycle and L1
/// artifact consistency. The artifact term compares residuals: the artifact
/// removed from x, x - x_hat, must equal the artifact added to y, y_art - y.
template <typename T>
AdnLossTerms<T> loss_adn(const BasicBranchOutputs<T>& out, const BasicTensor<T>& x, const BasicTensor<T>& y,
                         const AdnDiscriminators<T>& discriminators, const AdnWeights& weights = {});

/// 0.5 * (mean((D(real) - 1)^2) + mean(D(fake)^2)). `fake` should be detached.
template <typename T>
BasicTensor<T> discriminator_loss(const BasicDiscriminator<T>& d, const BasicTensor<T>& real,
                                  const BasicTensor<T>& fake);

}  // namespace ldmdn
