#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "natsr/config.hpp"
#include "natsr/error.hpp"

namespace natsr {
namespace {

using json = nlohmann::json;

std::string show(const json& j) { return j.dump(); }

// One JSON object being consumed key by key; finish() rejects leftovers.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_null() && !j_.is_object()) throw ValueError("config: " + label() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out, const std::function<bool(const T&)>& ok = nullptr, const char* constraint = "") {
    seen_.insert(key);
    if (j_.is_null() || !j_.contains(key)) return;
    const json& v = j_.at(key);
    T parsed{};
    if (!convert(v, parsed)) throw ValueError("config: " + name(key) + " has the wrong type (got " + show(v) + ")");
    if (ok && !ok(parsed)) throw ValueError("config: " + name(key) + " " + constraint + " (got " + show(v) + ")");
    out = parsed;
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json kNull;
    if (j_.is_null() || !j_.contains(key)) return Section(kNull, name(key));
    return Section(j_.at(key), name(key));
  }

  void finish() const {
    if (j_.is_null()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ValueError("config: unknown key '" + name(it.key().c_str()) + "'");
  }

 private:
  static bool convert(const json& v, int& out) {
    if (!v.is_number_integer()) return false;
    const auto x = v.get<long long>();
    if (x < -(1LL << 31) || x >= (1LL << 31)) return false;
    out = static_cast<int>(x);
    return true;
  }
  static bool convert(const json& v, std::uint64_t& out) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) return false;
    out = v.get<std::uint64_t>();
    return true;
  }
  static bool convert(const json& v, double& out) {
    if (!v.is_number()) return false;
    out = v.get<double>();
    return true;
  }
  static bool convert(const json& v, bool& out) {
    if (!v.is_boolean()) return false;
    out = v.get<bool>();
    return true;
  }
  static bool convert(const json& v, std::string& out) {
    if (!v.is_string()) return false;
    out = v.get<std::string>();
    return true;
  }
  static bool convert(const json& v, std::vector<int>& out) {
    if (!v.is_array()) return false;
    out.clear();
    for (const json& e : v) {
      int x = 0;
      if (!convert(e, x)) return false;
      out.push_back(x);
    }
    return true;
  }

  std::string label() const { return path_.empty() ? "document" : path_; }
  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename T>
std::function<bool(const T&)> at_least(T lo) {
  return [lo](const T& v) { return v >= lo; };
}
std::function<bool(const double&)> positive() {
  return [](const double& v) { return v > 0.0; };
}
std::function<bool(const double&)> non_negative() {
  return [](const double& v) { return v >= 0.0; };
}
std::function<bool(const double&)> in_closed(double lo, double hi) {
  return [lo, hi](const double& v) { return v >= lo && v <= hi; };
}
std::function<bool(const std::vector<int>&)> positive_widths() {
  return [](const std::vector<int>& w) {
    if (w.empty()) return false;
    for (int x : w)
      if (x <= 0) return false;
    return true;
  };
}
std::function<bool(const int&)> multiple_of_8() {
  return [](const int& v) { return v > 0 && v % 8 == 0; };
}

void rethrow_as_config(const char* section, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValueError& e) {
    throw ValueError(std::string("config: ") + section + ": " + e.what());
  }
}

}  // namespace

RunConfig desk_preset() {
  RunConfig c;
  c.resampler = {4, KernelKind::kBicubic};
  c.nmd.net.widths = {16, 32, 32, 64};
  c.nmd.net.patch_size = 32;
  c.nmd.batch_size = 16;
  c.nmd.max_steps = 3000;
  c.nmd.lr = 1e-3;
  c.nmd.val_batch_size = 32;
  c.generator.features = 32;
  c.generator.depth = 2;
  c.discriminator.widths = {16, 32, 32, 64};
  c.train.lr_patch = 8;
  c.train.batch_size = 8;
  c.train.steps = 2000;
  c.train.lr = 5e-4;
  c.train.eval_every = 100;
  return c;
}

RunConfig parse_config(const json& doc) {
  RunConfig c = desk_preset();
  Section top(doc, "");
  top.get<std::uint64_t>("seed", c.seed);
  top.get<int>("threads", c.threads, at_least(1), "must be >= 1");
  top.get<int>("scale", c.resampler.scale, [](const int& s) { return s == 2 || s == 4; }, "must be 2 or 4");
  std::string kernel = kernel_name(c.resampler.kernel);
  top.get<std::string>("kernel", kernel, [](const std::string& k) { return k == "bicubic" || k == "ideal"; },
                       "must be \"bicubic\" or \"ideal\"");
  c.resampler.kernel = parse_kernel(kernel);
  top.get<bool>("warm_start", c.warm_start);

  Section data = top.child("data");
  data.get<std::string>("dir", c.data.dir);
  data.get<double>("holdout", c.data.holdout, [](const double& v) { return v > 0.0 && v < 1.0; }, "must lie in (0, 1)");
  data.get<int>("nmd_patches", c.data.nmd_patches, at_least(1), "must be >= 1");
  data.get<double>("min_gradient", c.data.min_gradient, non_negative(), "must be >= 0");
  data.get<bool>("augment", c.data.augment);
  data.finish();

  Section nmd = top.child("nmd");
  nmd.get<std::vector<int>>("widths", c.nmd.net.widths, positive_widths(), "must be a non-empty list of positive widths");
  nmd.get<bool>("max_pool", c.nmd.net.max_pool);
  nmd.get<int>("patch_size", c.nmd.net.patch_size, multiple_of_8(), "must be a positive multiple of 8");
  nmd.get<int>("batch_size", c.nmd.batch_size, [](const int& v) { return v >= 2 && v % 2 == 0; },
               "must be even and >= 2");
  nmd.get<int>("max_steps", c.nmd.max_steps, at_least(0), "must be >= 0");
  nmd.get<double>("lr", c.nmd.lr, positive(), "must be > 0");
  nmd.get<double>("lr_final_fraction", c.nmd.lr_final_fraction, [](const double& v) { return v > 0.0 && v <= 1.0; },
                  "must lie in (0, 1]");
  nmd.get<int>("val_batch_size", c.nmd.val_batch_size, at_least(1), "must be >= 1");
  Section cur = nmd.child("curriculum");
  CurriculumConfig& cc = c.nmd.curriculum;
  cur.get<double>("alpha_init", cc.alpha_init, in_closed(0.0, 1.0), "must lie in [0, 1]");
  cur.get<double>("alpha_step", cc.alpha_step, positive(), "must be > 0");
  cur.get<double>("alpha_max", cc.alpha_max, in_closed(0.0, 1.0), "must lie in [0, 1]");
  cur.get<double>("sigma_init", cc.sigma_init, positive(), "must be > 0");
  cur.get<double>("sigma_decay", cc.sigma_decay, [](const double& v) { return v > 0.0 && v < 1.0; },
                  "must lie in (0, 1)");
  cur.get<double>("sigma_final", cc.sigma_final, positive(), "must be > 0");
  cur.get<int>("window", cc.window, at_least(1), "must be >= 1");
  cur.get<double>("threshold", cc.threshold, in_closed(0.0, 1.0), "must lie in [0, 1]");
  cur.get<int>("validate_every", cc.validate_every, at_least(1), "must be >= 1");
  cur.finish();
  nmd.finish();
  if (cc.alpha_max < cc.alpha_init) throw ValueError("config: nmd.curriculum.alpha_max must be >= alpha_init");

  Section gen = top.child("generator");
  gen.get<int>("features", c.generator.features, at_least(1), "must be >= 1");
  gen.get<int>("depth", c.generator.depth, [](const int& v) { return v >= 0 && v <= 6; }, "must lie in [0, 6]");
  gen.get<int>("rdb_convs", c.generator.block.convs, at_least(1), "must be >= 1");
  gen.get<int>("growth", c.generator.block.growth, at_least(1), "must be >= 1");
  gen.get<double>("residual_scale", c.generator.block.residual_scale, non_negative(), "must be >= 0");
  gen.finish();

  Section disc = top.child("discriminator");
  disc.get<std::vector<int>>("widths", c.discriminator.widths, positive_widths(),
                             "must be a non-empty list of positive widths");
  disc.get<double>("leaky_slope", c.discriminator.leaky_slope, [](const double& v) { return v >= 0.0 && v < 1.0; },
                   "must lie in [0, 1)");
  disc.get<int>("power_iterations", c.discriminator.power_iterations, at_least(1), "must be >= 1");
  disc.finish();

  Section train = top.child("train");
  train.get<int>("lr_patch", c.train.lr_patch, multiple_of_8(), "must be a positive multiple of 8");
  train.get<int>("batch_size", c.train.batch_size, at_least(1), "must be >= 1");
  train.get<int>("steps", c.train.steps, at_least(0), "must be >= 0");
  train.get<double>("lr", c.train.lr, positive(), "must be > 0");
  train.get<double>("halve_at", c.train.halve_at, [](const double& v) { return v > 0.0 && v <= 1.0; },
                    "must lie in (0, 1]");
  train.get<int>("eval_every", c.train.eval_every, at_least(1), "must be >= 1");
  train.get<int>("val_patches", c.train.val_patches, at_least(1), "must be >= 1");
  train.get<int>("val_lr_patch", c.train.val_lr_patch, multiple_of_8(), "must be a positive multiple of 8");
  train.get<double>("collapse_gap", c.train.collapse_gap, positive(), "must be > 0");
  train.get<int>("collapse_patience", c.train.collapse_patience, at_least(1), "must be >= 1");
  train.finish();

  Section loss = top.child("loss");
  loss.get<double>("recon", c.loss.recon, non_negative(), "must be >= 0");
  loss.get<double>("natural", c.loss.natural, non_negative(), "must be >= 0");
  loss.get<double>("adversarial", c.loss.adversarial, non_negative(), "must be >= 0");
  loss.finish();
  top.finish();

  // Shared fields.
  c.nmd.seed = c.train.seed = c.seed;
  c.generator.scale = c.train.scale = c.resampler.scale;
  c.train.kernel = c.resampler.kernel;
  rethrow_as_config("nmd", [&] { validate(c.nmd.net); });
  rethrow_as_config("generator", [&] { validate(c.generator); });
  rethrow_as_config("discriminator", [&] { validate(c.discriminator); });
  rethrow_as_config("train", [&] { validate(c.train); });
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  std::string trimmed = text;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  if (trimmed.empty()) return parse_config(json());
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValueError(std::string("config: not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json config_to_json(const RunConfig& c) {
  const CurriculumConfig& cc = c.nmd.curriculum;
  return {
      {"seed", c.seed},
      {"threads", c.threads},
      {"scale", c.resampler.scale},
      {"kernel", kernel_name(c.resampler.kernel)},
      {"warm_start", c.warm_start},
      {"data",
       {{"dir", c.data.dir},
        {"holdout", c.data.holdout},
        {"nmd_patches", c.data.nmd_patches},
        {"min_gradient", c.data.min_gradient},
        {"augment", c.data.augment}}},
      {"nmd",
       {{"widths", c.nmd.net.widths},
        {"max_pool", c.nmd.net.max_pool},
        {"patch_size", c.nmd.net.patch_size},
        {"batch_size", c.nmd.batch_size},
        {"max_steps", c.nmd.max_steps},
        {"lr", c.nmd.lr},
        {"lr_final_fraction", c.nmd.lr_final_fraction},
        {"val_batch_size", c.nmd.val_batch_size},
        {"curriculum",
         {{"alpha_init", cc.alpha_init},
          {"alpha_step", cc.alpha_step},
          {"alpha_max", cc.alpha_max},
          {"sigma_init", cc.sigma_init},
          {"sigma_decay", cc.sigma_decay},
          {"sigma_final", cc.sigma_final},
          {"window", cc.window},
          {"threshold", cc.threshold},
          {"validate_every", cc.validate_every}}}}},
      {"generator",
       {{"features", c.generator.features},
        {"depth", c.generator.depth},
        {"rdb_convs", c.generator.block.convs},
        {"growth", c.generator.block.growth},
        {"residual_scale", c.generator.block.residual_scale}}},
      {"discriminator",
       {{"widths", c.discriminator.widths},
        {"leaky_slope", c.discriminator.leaky_slope},
        {"power_iterations", c.discriminator.power_iterations}}},
      {"train",
       {{"lr_patch", c.train.lr_patch},
        {"batch_size", c.train.batch_size},
        {"steps", c.train.steps},
        {"lr", c.train.lr},
        {"halve_at", c.train.halve_at},
        {"eval_every", c.train.eval_every},
        {"val_patches", c.train.val_patches},
        {"val_lr_patch", c.train.val_lr_patch},
        {"collapse_gap", c.train.collapse_gap},
        {"collapse_patience", c.train.collapse_patience}}},
      {"loss", {{"recon", c.loss.recon}, {"natural", c.loss.natural}, {"adversarial", c.loss.adversarial}}},
  };
}

}  // namespace natsr
