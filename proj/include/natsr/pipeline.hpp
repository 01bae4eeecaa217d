#pragma once

#include <string>
#include <vector>

#include "natsr/checkpoint.hpp"
#include "natsr/config.hpp"
#include "natsr/dataset.hpp"
#include "natsr/networks.hpp"
#include "natsr/nmd.hpp"
#include "natsr/training.hpp"

// Glue shared by the command-line tool and the end-to-end tests: corpus
// loading, patch pools, and checkpoint conversion for each network kind.
namespace natsr {

// Images from config.data.dir (or default_data_dir()), split into train and
// held-out columns aligned to 8 · scale so LR grids tile into DCT blocks.
Corpus load_run_corpus(const RunConfig& config);

struct NmdPools {
  std::vector<Tensor> train;  // crops of the training columns
  std::vector<Tensor> val;    // crops of the held-out columns
};
// Random crops of nmd.net.patch_size, seeded from config.seed. The held-out
// pool draws a quarter as many crops per image (at least 4).
NmdPools nmd_pools(const Corpus& corpus, const RunConfig& config);

NmdTrainResult run_train_nmd(const RunConfig& config, const Corpus& corpus);

// Held-out mean NMD scores on natural crops and on blurry (alpha) and noisy
// (sigma) versions of the same crops.
struct NmdSeparation {
  double natural = 0.0;
  double blurry = 0.0;
  double noisy = 0.0;
};
NmdSeparation nmd_separation(const Nmd& nmd, const std::vector<Tensor>& pool, const ResamplerSpec& spec,
                             double alpha, double sigma, std::uint64_t seed);

Checkpoint nmd_checkpoint(const RunConfig& config, const NmdTrainResult& result);
Checkpoint generator_checkpoint(const RunConfig& config, const SrTrainResult& result);
Checkpoint discriminator_checkpoint(const RunConfig& config, const SrTrainResult& result);

// Rebuild networks from checkpoints, using the config echo for the
// architecture. Throws IoError on a kind mismatch.
Nmd load_nmd(const std::string& path);
Generator load_generator(const std::string& path);
// The config echo stored in a checkpoint.
RunConfig checkpoint_config(const Checkpoint& ckpt);

}  // namespace natsr
