#include "audionav/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <string>

#include "audionav/errors.hpp"

namespace audionav::rl {
namespace {

constexpr char kMagic[4] = {'A', 'N', 'C', 'K'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw DomainError("checkpoint is truncated");
  return v;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write checkpoint: " + path.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, sizeof(float));
  put<std::int32_t>(out, params.mask.sources);
  put<std::int32_t>(out, params.mask.hidden);
  put<std::int32_t>(out, static_cast<std::int32_t>(params.q.w1.rows()));
  auto& p = const_cast<ModelParams<float>&>(params);
  std::uint32_t count = 0;
  p.for_each_tensor([&](const char*, Mat<float>&) { ++count; });
  put<std::uint32_t>(out, count);
  p.for_each_tensor([&](const char* name, Mat<float>& m) {
    const auto len = static_cast<std::uint32_t>(std::strlen(name));
    put(out, len);
    out.write(name, len);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
  });
  if (!out) throw DomainError("failed writing checkpoint: " + path.string());
}

ModelParams<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DomainError("not a checkpoint file: " + path.string());
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DomainError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  if (get<std::uint32_t>(in) != sizeof(float)) throw DomainError("checkpoint scalar width unsupported");
  ModelInit init;
  init.sources = get<std::int32_t>(in);
  init.hidden = get<std::int32_t>(in);
  init.q_hidden = get<std::int32_t>(in);
  if (init.sources < 1 || init.hidden < 1 || init.q_hidden < 1 || init.sources > 64 || init.hidden > 4096 ||
      init.q_hidden > 4096) {
    throw DomainError("checkpoint network sizes are invalid");
  }
  auto params = init_model<float>(init);
  std::uint32_t expected = 0;
  params.for_each_tensor([&](const char*, Mat<float>&) { ++expected; });
  if (get<std::uint32_t>(in) != expected) throw DomainError("checkpoint tensor count mismatch");
  params.for_each_tensor([&](const char* name, Mat<float>& m) {
    const auto len = get<std::uint32_t>(in);
    if (len > 256) throw DomainError("checkpoint tensor name too long");
    std::string stored(len, '\0');
    in.read(stored.data(), len);
    if (!in || stored != name) throw DomainError("checkpoint tensor '" + stored + "' where '" + name + "' expected");
    const auto rows = get<std::uint32_t>(in);
    const auto cols = get<std::uint32_t>(in);
    if (rows != m.rows() || cols != m.cols()) throw DomainError(std::string("checkpoint shape mismatch for ") + name);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
    if (!in) throw DomainError("checkpoint is truncated");
  });
  return params;
}

} // namespace audionav::rl
