#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "natsr/checkpoint.hpp"
#include "natsr/error.hpp"

namespace natsr {
namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'N', 'A', 'T', 'S', 'R', 'C', 'K', 'P'};
constexpr std::size_t kDigestBytes = 32;

std::array<unsigned char, kDigestBytes> sha256(const char* data, std::size_t n) {
  std::array<unsigned char, kDigestBytes> out{};
  unsigned int len = 0;
  if (EVP_Digest(data, n, out.data(), &len, EVP_sha256(), nullptr) != 1 || len != kDigestBytes) {
    throw IoError("checkpoint: SHA-256 computation failed");
  }
  return out;
}

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const std::string& in, std::size_t pos) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

void put_tensor(std::string& payload, const Tensor& t) {
  for (double d : t.data()) put_le(payload, std::bit_cast<std::uint64_t>(d));
}

Tensor get_tensor(const std::string& file, std::size_t base, std::size_t payload_bytes, std::size_t offset,
                  const Shape& shape) {
  if (shape.empty()) return Tensor();  // placeholder, e.g. the moment slot of a buffer
  Tensor t(shape);
  if (offset + t.size() * 8 > payload_bytes) throw IoError("checkpoint: tensor payload out of range");
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::bit_cast<double>(get_le<std::uint64_t>(file, base + offset + 8 * i));
  return t;
}

json shape_json(const Shape& s) { return json(std::vector<int>(s.begin(), s.end())); }
Shape json_shape(const json& j) {
  std::vector<int> v = j.get<std::vector<int>>();
  return Shape(v.begin(), v.end());
}

// Doubles in the header are stored as their bit patterns so the round trip
// is exact irrespective of JSON number formatting.
json exact(double d) { return std::bit_cast<std::uint64_t>(d); }
double exact(const json& j) { return std::bit_cast<double>(j.get<std::uint64_t>()); }

}  // namespace

const char* kind_tag(NetworkKind k) {
  switch (k) {
    case NetworkKind::kNmd:
      return "nmd";
    case NetworkKind::kGenerator:
      return "generator";
    case NetworkKind::kGanDisc:
      return "gan-disc";
  }
  return "?";
}

NetworkKind parse_kind_tag(const std::string& tag) {
  if (tag == "nmd") return NetworkKind::kNmd;
  if (tag == "generator") return NetworkKind::kGenerator;
  if (tag == "gan-disc") return NetworkKind::kGanDisc;
  throw IoError("checkpoint: unknown network kind '" + tag + "'");
}

std::string sha256_hex(const std::string& bytes) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char c : sha256(bytes.data(), bytes.size())) {
    out.push_back(hex[c >> 4]);
    out.push_back(hex[c & 15]);
  }
  return out;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string payload;
  json tensors = json::array();
  auto add = [&](const std::string& name, const Tensor& t, bool buffer) {
    tensors.push_back({{"name", name}, {"shape", shape_json(t.shape())}, {"buffer", buffer}, {"offset", payload.size()}});
    put_tensor(payload, t);
  };
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) add(ckpt.params[i].name, ckpt.params[i].value, ckpt.params[i].buffer);

  json header = {{"kind", kind_tag(ckpt.kind)}, {"config", ckpt.config}, {"tensors", tensors}};
  if (ckpt.adam) {
    const AdamState& a = *ckpt.adam;
    if (a.m.size() != ckpt.params.size() || a.v.size() != ckpt.params.size()) {
      throw ValueError("save_checkpoint: optimiser state does not match the parameter set");
    }
    json moments = json::array();
    for (std::size_t i = 0; i < a.m.size(); ++i) {
      moments.push_back({{"m", payload.size()}, {"shape", shape_json(a.m[i].shape())}});
      put_tensor(payload, a.m[i]);
      moments.back()["v"] = payload.size();
      put_tensor(payload, a.v[i]);
    }
    header["adam"] = {{"beta1", exact(a.beta1)}, {"beta2", exact(a.beta2)}, {"eps", exact(a.eps)},
                      {"step", a.step}, {"moments", moments}};
  }
  if (ckpt.curriculum) {
    const CurriculumState& c = *ckpt.curriculum;
    json bw = json::array(), nw = json::array();
    for (double v : c.blurry_window) bw.push_back(exact(v));
    for (double v : c.noisy_window) nw.push_back(exact(v));
    header["curriculum"] = {{"alpha_steps", c.alpha_steps},   {"sigma", exact(c.sigma)},
                            {"blurry_window", bw},            {"noisy_window", nw},
                            {"alpha_updates", c.alpha_updates}, {"sigma_updates", c.sigma_updates}};
  }

  const std::string head = header.dump();
  std::string file(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(file, kCheckpointVersion);
  put_le<std::uint64_t>(file, head.size());
  file += head;
  file += payload;
  const auto digest = sha256(file.data(), file.size());
  file.append(reinterpret_cast<const char*>(digest.data()), digest.size());

  // Write to a sibling and rename so a crash never leaves a half file behind.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("save_checkpoint: cannot write " + path);
    out.write(file.data(), static_cast<std::streamsize>(file.size()));
    if (!out) throw IoError("save_checkpoint: write failed for " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("save_checkpoint: cannot move into place " + path);
}

Checkpoint load_checkpoint(const std::string& path, std::optional<NetworkKind> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string file = ss.str();

  constexpr std::size_t fixed = sizeof kMagic + 4 + 8;
  if (file.size() < sizeof kMagic || std::memcmp(file.data(), kMagic, sizeof kMagic) != 0) {
    throw IoError("load_checkpoint: " + path + " is not a checkpoint");
  }
  if (file.size() < fixed + kDigestBytes) throw IoError("load_checkpoint: " + path + " is truncated (corrupt)");
  const std::size_t body = file.size() - kDigestBytes;
  const auto digest = sha256(file.data(), body);
  if (std::memcmp(digest.data(), file.data() + body, kDigestBytes) != 0) {
    throw IoError("load_checkpoint: digest mismatch in " + path + " (file is truncated or corrupt)");
  }
  const auto version = get_le<std::uint32_t>(file, sizeof kMagic);
  if (version != kCheckpointVersion) {
    throw IoError("load_checkpoint: format version " + std::to_string(version) + " in " + path + ", expected " +
                  std::to_string(kCheckpointVersion));
  }
  const auto head_bytes = get_le<std::uint64_t>(file, sizeof kMagic + 4);
  if (fixed + head_bytes > body) throw IoError("load_checkpoint: header overruns the file (corrupt)");
  const std::size_t base = fixed + head_bytes;
  const std::size_t payload_bytes = body - base;

  Checkpoint ck;
  try {
    const json header = json::parse(file.substr(fixed, head_bytes));
    ck.kind = parse_kind_tag(header.at("kind").get<std::string>());
    if (expected && *expected != ck.kind) {
      throw IoError("load_checkpoint: " + path + " holds a '" + kind_tag(ck.kind) + "' network, expected '" +
                    kind_tag(*expected) + "'");
    }
    ck.config = header.at("config");
    for (const json& t : header.at("tensors")) {
      ck.params.add(t.at("name").get<std::string>(),
                    get_tensor(file, base, payload_bytes, t.at("offset").get<std::size_t>(), json_shape(t.at("shape"))),
                    t.at("buffer").get<bool>());
    }
    if (header.contains("adam")) {
      const json& a = header.at("adam");
      AdamState s;
      s.beta1 = exact(a.at("beta1"));
      s.beta2 = exact(a.at("beta2"));
      s.eps = exact(a.at("eps"));
      s.step = a.at("step").get<std::int64_t>();
      for (const json& m : a.at("moments")) {
        const Shape shape = json_shape(m.at("shape"));
        s.m.push_back(get_tensor(file, base, payload_bytes, m.at("m").get<std::size_t>(), shape));
        s.v.push_back(get_tensor(file, base, payload_bytes, m.at("v").get<std::size_t>(), shape));
      }
      ck.adam = std::move(s);
    }
    if (header.contains("curriculum")) {
      const json& c = header.at("curriculum");
      CurriculumState s;
      s.alpha_steps = c.at("alpha_steps").get<int>();
      s.sigma = exact(c.at("sigma"));
      for (const json& v : c.at("blurry_window")) s.blurry_window.push_back(exact(v));
      for (const json& v : c.at("noisy_window")) s.noisy_window.push_back(exact(v));
      s.alpha_updates = c.at("alpha_updates").get<int>();
      s.sigma_updates = c.at("sigma_updates").get<int>();
      ck.curriculum = std::move(s);
    }
  } catch (const json::exception& e) {
    throw IoError("load_checkpoint: malformed header in " + path + ": " + e.what());
  }
  return ck;
}

}  // namespace natsr
