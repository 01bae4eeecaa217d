#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "natsr/networks.hpp"
#include "natsr/nmd.hpp"
#include "natsr/resample.hpp"
#include "natsr/training.hpp"

namespace natsr {

struct DataConfig {
  std::string dir;            // empty: NATSR_DATA_DIR, then the bundled images
  double holdout = 0.25;      // right-hand fraction of every image kept for validation
  int nmd_patches = 64;       // random HR patches per training image for the NMD pool
  double min_gradient = 0.02; // skip near-flat NMD patches
  bool augment = false;       // random flips/transposes of NMD training patches
};

// One declarative document for every run. `scale` and `kernel` are shared by
// the resampler, the generator, and SR training.
struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 1;
  ResamplerSpec resampler;
  DataConfig data;
  NmdTrainConfig nmd;
  GeneratorConfig generator;
  GanDiscConfig discriminator;
  TrainConfig train;
  LossWeights loss = LossWeights::natsr();
  bool warm_start = true;  // NatSR starts from an FRSR checkpoint when one is given
};

// Desk-scale preset: the value of an empty document.
RunConfig desk_preset();

// Parses and validates. Unknown keys and out-of-range values raise
// ValueError naming the key and the constraint. Missing keys keep their
// defaults, so an empty document yields the desk preset.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// Full echo; parse_config(config_to_json(c)) reproduces c.
nlohmann::json config_to_json(const RunConfig& c);

}  // namespace natsr
