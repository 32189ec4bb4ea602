#pragma once

#include <bit>
#include <memory>

#include "ldmdn/network.hpp"
#include "ldmdn/ops.hpp"
#include "ldmdn/rng.hpp"
#include "ldmdn/trainer.hpp"

namespace ldmdn::test {

/// Hybrid unpaired + paired training without any manifold term, written out
/// step by step. Initialization follows the trainer's seed streams so the two
/// trajectories can be compared parameter by parameter.
class ManifoldFreeLoop {
 public:
  ManifoldFreeLoop(const GeometryConfig& geom, const TrainConfig& cfg, int base, int max)
      : cfg_(cfg),
        net_(NetworkConfig{geom, NetworkVariant::UnpairedLDM, base, max, derive_seed(cfg.seed, 101)}),
        dc_(cfg.disc_channels, derive_seed(cfg.seed, 202), "disc_clean"),
        da_(cfg.disc_channels, derive_seed(cfg.seed, 203), "disc_artifact") {}

  void step(const Batch& b) {
    const auto& u = *b.unpaired;
    const auto& p = *b.paired;
    net_.parameters().zero_grad();
    dc_.parameters().zero_grad();
    da_.parameters().zero_grad();
    const auto out_u = net_.forward(u.x, u.y, ForwardScope::Full);
    const auto out_p = net_.forward(p.x, p.x_gt, ForwardScope::Patches);
    const auto adn = loss_adn(out_u, u.x, u.y, AdnDiscriminators<float>{&dc_, &da_}, cfg_.adn);
    backward(add(adn.total, loss_sup(*out_p.x_hat, p.x_gt)));
    net_.parameters().adam_step(cfg_.adam);

    dc_.parameters().zero_grad();
    da_.parameters().zero_grad();
    const auto dl = add(discriminator_loss<float>(dc_, u.y, out_u.x_hat->detach()),
                        discriminator_loss<float>(da_, u.x, out_u.y_art->detach()));
    backward(dl);
    dc_.parameters().adam_step(cfg_.disc_adam);
    da_.parameters().adam_step(cfg_.disc_adam);
  }

  DisentangleNet& net() { return net_; }

 private:
  TrainConfig cfg_;
  DisentangleNet net_;
  PatchDiscriminator<float> dc_, da_;
};

/// True when both stores hold bit-identical values.
inline bool same_bits(const ParameterStore& a, const ParameterStore& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& x = a.entries()[k].value;
    const auto& y = b.entries()[k].value;
    if (x.numel() != y.numel()) return false;
    for (std::size_t i = 0; i < x.numel(); ++i) {
      if (std::bit_cast<std::uint32_t>(x[i]) != std::bit_cast<std::uint32_t>(y[i])) return false;
    }
  }
  return true;
}

}  // namespace ldmdn::test
