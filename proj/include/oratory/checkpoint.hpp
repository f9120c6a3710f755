#pragma once

// "OMDL" checkpoint format, little-endian:
//
//   magic "OMDL" | version u16 = 1
//   arch_len u16 | architecture descriptor (UTF-8, arch_len bytes)
//   layer_count u32
//   per layer: kind u8 | rank u8 | dims u32 x rank | float32 payloads
//     linear    dims [in, out]          weight, bias
//     conv1d    dims [out, in, kernel]  weight, bias
//     batchnorm dims [features]         gamma, beta, running_mean, running_var
//   optional, when saved mid-training:
//     step u64 | m float32 payloads | v float32 payloads (trainable order)

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "oratory/binary_io.hpp"
#include "oratory/model.hpp"
#include "oratory/nn/adam.hpp"

namespace oratory {

inline constexpr char kCheckpointMagic[4] = {'O', 'M', 'D', 'L'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

template <typename T>
struct Checkpoint {
  FusionModel<T> model;
  std::optional<nn::AdamState<T>> adam;
};

namespace detail {

template <typename T, typename Fn>
void for_each_layer(FusionModel<T>& m, Fn&& fn) {
  for (auto& c : m.conv_layers()) fn(nn::LayerKind::conv1d, c.weight, c.bias, (nn::BatchNormLayer<T>*)nullptr);
  fn(nn::LayerKind::batchnorm, m.fusion_norm().gamma, m.fusion_norm().beta, &m.fusion_norm());
  for (std::size_t i = 0; i < m.fc_layers().size(); ++i) {
    fn(nn::LayerKind::linear, m.fc_layers()[i].weight, m.fc_layers()[i].bias, (nn::BatchNormLayer<T>*)nullptr);
    fn(nn::LayerKind::batchnorm, m.fc_norms()[i].gamma, m.fc_norms()[i].beta, &m.fc_norms()[i]);
  }
  fn(nn::LayerKind::linear, m.head().weight, m.head().bias, (nn::BatchNormLayer<T>*)nullptr);
}

template <typename T>
std::size_t layer_count(const FusionModel<T>& m) {
  return m.conv_layers().size() + 1 + 2 * m.fc_layers().size() + 1;
}

}  // namespace detail

template <typename T>
void save_checkpoint(const FusionModel<T>& model, std::ostream& out,
                     const nn::AdamState<T>* adam = nullptr) {
  FusionModel<T>& m = const_cast<FusionModel<T>&>(model);  // visited read-only
  io::LeWriter w(out);
  w.bytes(std::string_view(kCheckpointMagic, 4));
  w.u16(kCheckpointVersion);
  const std::string desc = model.architecture().descriptor();
  w.u16(static_cast<std::uint16_t>(desc.size()));
  w.bytes(desc);
  w.u32(static_cast<std::uint32_t>(detail::layer_count(model)));
  detail::for_each_layer(m, [&](nn::LayerKind kind, nn::Tensor<T>& weight, nn::Tensor<T>& bias,
                                nn::BatchNormLayer<T>* bn) {
    w.u8(static_cast<std::uint8_t>(kind));
    const nn::Shape& shape = weight.shape();
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (std::size_t d : shape) w.u32(static_cast<std::uint32_t>(d));
    w.f32s(std::span<const T>(weight.data()));
    w.f32s(std::span<const T>(bias.data()));
    if (bn) {
      w.f32s(std::span<const T>(bn->running_mean.data()));
      w.f32s(std::span<const T>(bn->running_var.data()));
    }
  });
  if (adam) {
    w.u64(adam->step);
    for (const auto& t : adam->m) w.f32s(std::span<const T>(t.data()));
    for (const auto& t : adam->v) w.f32s(std::span<const T>(t.data()));
  }
}

template <typename T>
void save_checkpoint(const FusionModel<T>& model, const std::filesystem::path& path,
                     const nn::AdamState<T>* adam = nullptr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  save_checkpoint(model, out, adam);
  out.flush();
  if (!out) throw Error("I/O failure writing " + path.string());
}

template <typename T>
Checkpoint<T> load_checkpoint(std::istream& in) {
  io::LeReader r(in, "checkpoint");
  if (r.bytes(4) != std::string_view(kCheckpointMagic, 4)) throw FormatError("checkpoint: bad magic");
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const Architecture arch = Architecture::from_descriptor(r.bytes(r.u16()));
  Checkpoint<T> ck{FusionModel<T>::zeros(arch), std::nullopt};
  const std::uint32_t layers = r.u32();
  if (layers != detail::layer_count(ck.model)) {
    throw FormatError("checkpoint: " + std::to_string(layers) + " layers, architecture implies " +
                      std::to_string(detail::layer_count(ck.model)));
  }
  std::size_t index = 0;
  detail::for_each_layer(ck.model, [&](nn::LayerKind kind, nn::Tensor<T>& weight, nn::Tensor<T>& bias,
                                       nn::BatchNormLayer<T>* bn) {
    const std::string where = "checkpoint layer " + std::to_string(index++);
    const auto stored_kind = r.u8();
    if (stored_kind != static_cast<std::uint8_t>(kind)) throw FormatError(where + ": unexpected layer kind");
    nn::Shape shape(r.u8());
    for (auto& d : shape) d = r.u32();
    if (shape != weight.shape()) {
      throw FormatError(where + ": shape " + nn::shape_string(shape) + ", expected " +
                        nn::shape_string(weight.shape()));
    }
    r.f32s(weight.data());
    r.f32s(bias.data());
    if (bn) {
      r.f32s(bn->running_mean.data());
      r.f32s(bn->running_var.data());
    }
  });
  if (!r.at_end()) {
    nn::AdamState<T> adam({}, ck.model.trainable());
    adam.step = r.u64();
    for (auto& t : adam.m) r.f32s(t.data());
    for (auto& t : adam.v) r.f32s(t.data());
    if (!r.at_end()) throw FormatError("checkpoint: trailing bytes");
    ck.adam = std::move(adam);
  }
  return ck;
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return load_checkpoint<T>(in);
}

/// Loads a checkpoint and refuses it unless it was built for `expected`.
template <typename T>
FusionModel<T> load_model_for(const std::filesystem::path& path, const Architecture& expected) {
  Checkpoint<T> ck = load_checkpoint<T>(path);
  if (ck.model.architecture().hash() != expected.hash()) {
    std::ostringstream os;
    os << "checkpoint " << path.string() << " was trained for architecture " << std::hex
       << ck.model.architecture().hash() << " (" << ck.model.architecture().descriptor()
       << "), expected " << expected.hash() << " (" << expected.descriptor() << ")";
    throw Error(os.str());
  }
  return std::move(ck.model);
}

}  // namespace oratory
