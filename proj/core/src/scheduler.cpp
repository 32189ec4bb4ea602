#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "ldmdn/rng.hpp"
#include "ldmdn/trainer.hpp"

namespace ldmdn {

Tensor stack_images(const std::vector<const Tensor*>& images) {
  if (images.empty()) throw std::invalid_argument("stack_images: no images");
  if (images.size() == 1) return *images.front();
  const auto& first = *images.front();
  if (first.rank() != 4 || first.dim(0) != 1) {
    throw std::invalid_argument("stack_images: expected [1,C,H,W], got " + shape_str(first.shape()));
  }
  std::vector<float> values;
  values.reserve(first.numel() * images.size());
  for (const auto* t : images) {
    if (t->shape() != first.shape()) {
      throw std::invalid_argument("stack_images: shape " + shape_str(t->shape()) + " differs from " +
                                  shape_str(first.shape()));
    }
    values.insert(values.end(), t->data().begin(), t->data().end());
  }
  return Tensor::from_data({static_cast<std::int64_t>(images.size()), first.dim(1), first.dim(2), first.dim(3)},
                           std::move(values));
}

HybridBatchScheduler::HybridBatchScheduler(const TrainingPools& pools, TrainMode mode, int batch_size,
                                           std::uint64_t seed)
    : pools_(pools), mode_(mode), bs_(batch_size), seed_(seed) {
  if (bs_ < 1) throw std::invalid_argument("batch size must be >= 1");
  std::size_t longest = 0;
  if (mode_uses_paired(mode)) {
    if (pools.paired_x.empty()) throw std::invalid_argument("mode " + to_string(mode) + " needs a non-empty paired pool");
    if (pools.paired_x.size() != pools.paired_gt.size()) {
      throw std::invalid_argument("paired pool: " + std::to_string(pools.paired_x.size()) + " inputs vs " +
                                  std::to_string(pools.paired_gt.size()) + " ground truths");
    }
    longest = std::max(longest, pools.paired_x.size());
  }
  if (mode_uses_unpaired(mode)) {
    if (pools.unpaired_artifact.empty()) {
      throw std::invalid_argument("mode " + to_string(mode) + " needs a non-empty unpaired artifact pool");
    }
    if (pools.unpaired_clean.empty()) {
      throw std::invalid_argument("mode " + to_string(mode) + " needs a non-empty unpaired clean pool");
    }
    longest = std::max({longest, pools.unpaired_artifact.size(), pools.unpaired_clean.size()});
  }
  steps_ = static_cast<std::int64_t>((longest + static_cast<std::size_t>(bs_) - 1) / static_cast<std::size_t>(bs_));
}

void HybridBatchScheduler::begin_epoch(int e) {
  auto make = [&](std::size_t n, std::uint64_t stream) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::uint64_t rng = derive_seed(seed_, static_cast<std::uint64_t>(e) * 3 + stream);
    shuffle(order, rng);
    return order;
  };
  order_paired_ = mode_uses_paired(mode_) ? make(pools_.paired_x.size(), 0) : std::vector<std::size_t>{};
  order_artifact_ = mode_uses_unpaired(mode_) ? make(pools_.unpaired_artifact.size(), 1) : std::vector<std::size_t>{};
  order_clean_ = mode_uses_unpaired(mode_) ? make(pools_.unpaired_clean.size(), 2) : std::vector<std::size_t>{};
}

HybridBatchScheduler::Indices HybridBatchScheduler::indices(std::int64_t step) const {
  if (step < 0 || step >= steps_) throw std::out_of_range("scheduler step out of range");
  auto pick = [&](const std::vector<std::size_t>& order) {
    std::vector<std::size_t> out;
    for (int b = 0; b < bs_; ++b) {
      out.push_back(order[static_cast<std::size_t>(step * bs_ + b) % order.size()]);
    }
    return out;
  };
  Indices idx;
  if (!order_paired_.empty()) idx.paired = pick(order_paired_);
  if (!order_artifact_.empty()) {
    idx.artifact = pick(order_artifact_);
    idx.clean = pick(order_clean_);
  }
  return idx;
}

Batch HybridBatchScheduler::batch(std::int64_t step) const {
  if (mode_uses_paired(mode_) && order_paired_.empty()) throw std::logic_error("begin_epoch was not called");
  if (mode_uses_unpaired(mode_) && order_artifact_.empty()) throw std::logic_error("begin_epoch was not called");
  const auto idx = indices(step);
  auto gather = [](const std::vector<Tensor>& pool, const std::vector<std::size_t>& which) {
    std::vector<const Tensor*> ptrs;
    for (auto i : which) ptrs.push_back(&pool[i]);
    return stack_images(ptrs);
  };
  Batch b;
  if (!idx.paired.empty()) {
    b.paired = PairedSample{gather(pools_.paired_x, idx.paired), gather(pools_.paired_gt, idx.paired)};
  }
  if (!idx.artifact.empty()) {
    b.unpaired = UnpairedSample{gather(pools_.unpaired_artifact, idx.artifact), gather(pools_.unpaired_clean, idx.clean)};
  }
  return b;
}

}  // namespace ldmdn
