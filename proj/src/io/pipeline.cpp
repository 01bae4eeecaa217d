#include "natsr/pipeline.hpp"

#include <algorithm>
#include <random>

#include "natsr/error.hpp"

namespace natsr {

Corpus load_run_corpus(const RunConfig& config) {
  const std::string dir = config.data.dir.empty() ? default_data_dir() : config.data.dir;
  return load_corpus(dir, config.data.holdout, 8 * config.resampler.scale);
}

NmdPools nmd_pools(const Corpus& corpus, const RunConfig& config) {
  std::mt19937_64 rng(config.seed * 5 + 3);
  PatchOptions opt;
  opt.size = config.nmd.net.patch_size;
  opt.count = config.data.nmd_patches;
  opt.align = config.resampler.scale;
  opt.min_gradient = config.data.min_gradient;
  opt.augment = config.data.augment;
  NmdPools pools;
  pools.train = patch_pool(corpus.train, opt, rng);
  opt.count = std::max(4, config.data.nmd_patches / 4);
  opt.augment = false;
  pools.val = patch_pool(corpus.val, opt, rng);
  return pools;
}

NmdTrainResult run_train_nmd(const RunConfig& config, const Corpus& corpus) {
  const NmdPools pools = nmd_pools(corpus, config);
  return train_nmd(pools.train, pools.val, config.nmd, config.resampler);
}

NmdSeparation nmd_separation(const Nmd& nmd, const std::vector<Tensor>& pool, const ResamplerSpec& spec,
                             double alpha, double sigma, std::uint64_t seed) {
  if (pool.empty()) throw ValueError("nmd_separation: empty pool");
  NmdSeparation out;
  NoisyOptions quiet;
  quiet.log_clipping = false;
  const DctLayout layout = DctLayout::standard();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    out.natural += nmd_score(nmd, pool[i]);
    out.blurry += nmd_score(nmd, synth_blurry(pool[i], spec, alpha).image);
    out.noisy += nmd_score(nmd, synth_noisy(pool[i], sigma, layout, seed + i, quiet).image);
  }
  const double n = static_cast<double>(pool.size());
  out.natural /= n;
  out.blurry /= n;
  out.noisy /= n;
  return out;
}

Checkpoint nmd_checkpoint(const RunConfig& config, const NmdTrainResult& result) {
  Checkpoint ck;
  ck.kind = NetworkKind::kNmd;
  ck.config = config_to_json(config);
  ck.params = result.nmd.params();
  ck.adam = result.adam;
  ck.curriculum = result.curriculum;
  return ck;
}

Checkpoint generator_checkpoint(const RunConfig& config, const SrTrainResult& result) {
  Checkpoint ck;
  ck.kind = NetworkKind::kGenerator;
  ck.config = config_to_json(config);
  ck.params = result.generator.params();
  ck.adam = result.adam;
  return ck;
}

Checkpoint discriminator_checkpoint(const RunConfig& config, const SrTrainResult& result) {
  if (!result.discriminator) throw ValueError("discriminator_checkpoint: the run trained no discriminator");
  Checkpoint ck;
  ck.kind = NetworkKind::kGanDisc;
  ck.config = config_to_json(config);
  ck.params = result.discriminator->params();
  ck.adam = result.disc_adam;
  return ck;
}

RunConfig checkpoint_config(const Checkpoint& ckpt) {
  try {
    return parse_config(ckpt.config);
  } catch (const ValueError& e) {
    throw IoError(std::string("checkpoint config echo is invalid: ") + e.what());
  }
}

Nmd load_nmd(const std::string& path) {
  Checkpoint ck = load_checkpoint(path, NetworkKind::kNmd);
  return Nmd(checkpoint_config(ck).nmd.net, std::move(ck.params));
}

Generator load_generator(const std::string& path) {
  Checkpoint ck = load_checkpoint(path, NetworkKind::kGenerator);
  return Generator(checkpoint_config(ck).generator, std::move(ck.params));
}

}  // namespace natsr
