#include "nsfm/checkpoint.hpp"

#include <string>

#include "binary_io.hpp"

namespace nsfm {

void save_checkpoint(const VelocityNet& net, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.bytes("NSCK", 4);
  w.u32(kCheckpointFormatVersion);
  w.u32(static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& layer : net.layers()) {
    w.u32(static_cast<std::uint32_t>(layer.in_dim()));
    w.u32(static_cast<std::uint32_t>(layer.out_dim()));
  }
  w.u32(static_cast<std::uint32_t>(net.time_embed_dim()));
  for (float p : net.flat_parameters()) {
    w.f32(p);
  }
  w.u64(meta.dataset_hash);
  w.u64(meta.seed);
  w.write_file(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_magic("NSCK");
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointFormatVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) +
                          " is not supported",
                      version_at);
  }
  const std::size_t count_at = r.offset();
  const std::uint32_t layer_count = r.u32("layer count");
  if (layer_count == 0 || layer_count > 1024) {
    throw FormatError("implausible layer count " + std::to_string(layer_count),
                      count_at);
  }
  std::vector<DenseLayer> layers(layer_count);
  std::uint64_t total = 0;
  for (auto& layer : layers) {
    const std::size_t at = r.offset();
    const std::uint32_t in = r.u32("layer input width");
    const std::uint32_t out = r.u32("layer output width");
    if (in == 0 || out == 0) {
      throw FormatError("zero-width layer", at);
    }
    total += static_cast<std::uint64_t>(in) * out + out;
    if (total > kMaxMatrixElements) {
      throw FormatError("parameter count exceeds the size cap", at);
    }
    layer.weight.resize(out, in);
    layer.bias.resize(out);
  }
  const std::uint32_t temb = r.u32("time embedding width");
  r.need(4 * total, "parameters");
  for (auto& layer : layers) {
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = r.f32("weight");
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      layer.bias[i] = r.f32("bias");
    }
  }
  Checkpoint ck;
  ck.meta.dataset_hash = r.u64("dataset hash");
  ck.meta.seed = r.u64("seed");
  if (r.remaining() != 0) {
    throw FormatError("trailing bytes after checkpoint", r.offset());
  }
  try {
    ck.net = VelocityNet(std::move(layers), temb);
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint topology: ") + e.what(), 12);
  }
  return ck;
}

}  // namespace nsfm
