#include <mutex>
#include <set>

#include <spdlog/spdlog.h>

#include "natsr/error.hpp"
#include "natsr/image.hpp"
#include "natsr/patches.hpp"

namespace natsr {

NmdBatch make_nmd_batch(const std::vector<Tensor>& pool, const NmdBatchOptions& options, const ResamplerSpec& spec,
                        std::mt19937_64& rng) {
  if (pool.empty()) throw ValueError("make_nmd_batch: empty patch pool");
  if (options.batch_size <= 0 || options.batch_size % 2 != 0) {
    throw ValueError("make_nmd_batch: batch size must be positive and even, got " + std::to_string(options.batch_size));
  }
  const int half = options.batch_size / 2;
  int n_blurry = 0;
  switch (options.mix) {
    case NegativeMix::kBalanced:
      n_blurry = (half + 1) / 2;
      break;
    case NegativeMix::kBlurryOnly:
      n_blurry = half;
      break;
    case NegativeMix::kNoisyOnly:
      n_blurry = 0;
      break;
  }
  const int n_noisy = half - n_blurry;
  const DctLayout layout = DctLayout::standard();
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);

  NmdBatch batch;
  std::vector<Tensor> items;
  items.reserve(options.batch_size);
  for (int i = 0; i < half; ++i) {
    items.push_back(pool[pick(rng)]);
    batch.labels.push_back(ManifoldLabel::kNatural);
  }
  for (int i = 0; i < n_blurry; ++i) {
    items.push_back(synth_blurry(pool[pick(rng)], spec, options.alpha).image);
    batch.labels.push_back(ManifoldLabel::kBlurry);
  }
  NoisyOptions quiet;
  quiet.log_clipping = false;
  for (int i = 0; i < n_noisy; ++i) {
    const Tensor& src = pool[pick(rng)];
    NoisySample s = synth_noisy(src, options.sigma, layout, rng(), quiet);
    batch.clipped += s.clipped;
    items.push_back(std::move(s.image));
    batch.labels.push_back(ManifoldLabel::kNoisy);
  }
  if (n_noisy > 0) {
    const double rate = static_cast<double>(batch.clipped) / static_cast<double>(n_noisy * pool.front().size());
    // Warn once per sigma value; training draws thousands of batches.
    static std::mutex mu;
    static std::set<double> warned;
    std::lock_guard<std::mutex> lock(mu);
    if (rate > kClipWarnRate && warned.insert(options.sigma).second) {
      spdlog::warn("make_nmd_batch: sigma {} clipped {:.2f}% of noisy pixels", options.sigma, 100.0 * rate);
    }
  }
  for (ManifoldLabel l : batch.labels) batch.targets.push_back(label_target(l));
  batch.images = stack_batch(items);
  return batch;
}

}  // namespace natsr
