#include <stdexcept>

#include "ldmdn/network.hpp"
#include "ldmdn/ops.hpp"

namespace ldmdn {

template <typename T>
BasicTensor<T> loss_sup(const BasicTensor<T>& x_hat, const BasicTensor<T>& x_gt) {
  return l1_loss(x_hat, x_gt);
}

namespace {

template <typename T>
const BasicTensor<T>& need(const std::optional<BasicTensor<T>>& field, const char* name) {
  if (!field) throw std::invalid_argument(std::string("loss_adn: branch output '") + name + "' is missing");
  return *field;
}

template <typename T>
BasicTensor<T> lsgan_real(const BasicDiscriminator<T>& d, const BasicTensor<T>& image) {
  auto response = d(image);
  return mse_loss(response, full_like(response, T(1)));
}

}  // namespace

template <typename T>
AdnLossTerms<T> loss_adn(const BasicBranchOutputs<T>& out, const BasicTensor<T>& x, const BasicTensor<T>& y,
                         const AdnDiscriminators<T>& discriminators, const AdnWeights& w) {
  if (!discriminators.clean) throw std::invalid_argument("loss_adn: missing clean-domain discriminator");
  if (!discriminators.artifact) throw std::invalid_argument("loss_adn: missing artifact-domain discriminator");
  const auto& x_hat = need(out.x_hat, "x_hat");
  const auto& y_hat = need(out.y_hat, "y_hat");
  const auto& x_recon = need(out.x_recon, "x_recon");
  const auto& y_art = need(out.y_art, "y_art");
  const auto& x_cycle = need(out.x_cycle, "x_cycle");
  const auto& y_cycle = need(out.y_cycle, "y_cycle");

  AdnLossTerms<T> t;
  t.adv_clean = lsgan_real(*discriminators.clean, x_hat);
  t.adv_artifact = lsgan_real(*discriminators.artifact, y_art);
  t.recon = add(l1_loss(y_hat, y), l1_loss(x_recon, x));
  t.cycle = add(l1_loss(x_cycle, x), l1_loss(y_cycle, y));
  t.artifact = l1_loss(sub(x, x_hat), sub(y_art, y));
  t.total = add(add(add(scale(t.adv_clean, w.adv_clean), scale(t.adv_artifact, w.adv_artifact)),
                    add(scale(t.recon, w.recon), scale(t.cycle, w.cycle))),
                scale(t.artifact, w.artifact));
  return t;
}

template <typename T>
BasicTensor<T> discriminator_loss(const BasicDiscriminator<T>& d, const BasicTensor<T>& real,
                                  const BasicTensor<T>& fake) {
  auto r = d(real);
  auto f = d(fake);
  return scale(add(mse_loss(r, full_like(r, T(1))), mse_loss(f, full_like(f, T(0)))), 0.5);
}

#define LDMDN_INSTANTIATE_LOSSES(T)                                                                          \
  template BasicTensor<T> loss_sup(const BasicTensor<T>&, const BasicTensor<T>&);                            \
  template AdnLossTerms<T> loss_adn(const BasicBranchOutputs<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                    const AdnDiscriminators<T>&, const AdnWeights&);                         \
  template BasicTensor<T> discriminator_loss(const BasicDiscriminator<T>&, const BasicTensor<T>&,            \
                                             const BasicTensor<T>&);

LDMDN_INSTANTIATE_LOSSES(float)
LDMDN_INSTANTIATE_LOSSES(double)

#undef LDMDN_INSTANTIATE_LOSSES

}  // namespace ldmdn
