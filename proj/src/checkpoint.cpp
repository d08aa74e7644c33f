#include "mbcnn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mbcnn/config.hpp"

namespace mbcnn {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw std::runtime_error("checkpoint is truncated or corrupt");
  }
  std::uint32_t u32() {
    need(4);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
    pos += 4;
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
           std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t tensor_hash(const Tensor& t) {
  std::string bytes;
  bytes.reserve(t.size() * 4);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t u;
    const float v = t.data()[i];
    std::memcpy(&u, &v, 4);
    put_u32(bytes, u);
  }
  return fnv1a64(bytes.data(), bytes.size());
}

void save_checkpoint(const Model& m, const std::string& path) {
  std::map<std::string, const Tensor*> params;
  auto& mm = const_cast<Model&>(m);
  visit_params(mm, "", [&](const std::string& name, Tensor& t) {
    params.emplace(name, &t);
  });

  std::string out;
  out += "MBCK";
  put_u32(out, kCheckpointVersion);
  const std::string arch = arch_to_json(m.cfg);
  put_u32(out, static_cast<std::uint32_t>(arch.size()));
  out += arch;
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, 4);
    const Shape s = t->shape();
    put_u32(out, static_cast<std::uint32_t>(s.n));
    put_u32(out, static_cast<std::uint32_t>(s.h));
    put_u32(out, static_cast<std::uint32_t>(s.w));
    put_u32(out, static_cast<std::uint32_t>(s.c));
    for (std::size_t i = 0; i < t->size(); ++i) {
      std::uint32_t u;
      const float v = t->data()[i];
      std::memcpy(&u, &v, 4);
      put_u32(out, u);
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("failed writing checkpoint " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string buf = ss.str();
  Reader r{buf};

  if (r.bytes(4) != "MBCK")
    throw std::runtime_error("not a checkpoint file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version));
  const ArchConfig cfg = arch_from_json(r.bytes(r.u32()));

  Model m = build_model<float>(cfg, 0);
  std::map<std::string, Tensor*> params;
  visit_params(m, "", [&](const std::string& name, Tensor& t) {
    params.emplace(name, &t);
  });

  const std::uint32_t count = r.u32();
  std::map<std::string, bool> seen;
  for (auto& [name, t] : params) seen.emplace(name, false);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank != 4)
      throw std::runtime_error("checkpoint tensor \"" + name +
                               "\" has rank " + std::to_string(rank));
    Shape s;
    s.n = static_cast<int>(r.u32());
    s.h = static_cast<int>(r.u32());
    s.w = static_cast<int>(r.u32());
    s.c = static_cast<int>(r.u32());
    auto it = params.find(name);
    if (it == params.end())
      throw std::runtime_error("checkpoint has unknown tensor \"" + name + "\"");
    if (seen[name])
      throw std::runtime_error("checkpoint repeats tensor \"" + name + "\"");
    if (!(it->second->shape() == s))
      throw std::runtime_error("checkpoint tensor \"" + name + "\" has shape " +
                               s.str() + ", expected " +
                               it->second->shape().str());
    seen[name] = true;
    const std::size_t n = s.count();
    r.need(n * 4);
    float* dst = it->second->mutable_data();
    for (std::size_t e = 0; e < n; ++e) {
      const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + r.pos);
      const std::uint32_t u = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
                              std::uint32_t(p[2]) << 16 |
                              std::uint32_t(p[3]) << 24;
      std::memcpy(dst + e, &u, 4);
      r.pos += 4;
    }
  }
  std::string missing;
  for (const auto& [name, got] : seen)
    if (!got) missing += (missing.empty() ? "" : ", ") + name;
  if (!missing.empty())
    throw std::runtime_error("checkpoint is missing tensors: " + missing);
  if (r.pos != buf.size())
    throw std::runtime_error("checkpoint has trailing bytes");
  return m;
}

}  // namespace mbcnn
