#pragma once

// The three-modality fusion network.
//
//   pose [120 x 51] -> transpose -> 5 x (dilated conv k=5, 32 filters -> ReLU)
//                   -> avg-pool(2, 2) -> flatten              (1088)
//   face (512), voice (512)                                   (pass-through)
//   concat (2112) -> BN -> 4 x (linear -> ReLU -> BN) -> linear(256 -> 1) -> sigmoid
//
// Modalities can be disabled for ablations; the fusion width shrinks
// accordingly and the rest of the stack is unchanged.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oratory/feature_store.hpp"
#include "oratory/nn/init.hpp"
#include "oratory/nn/layers.hpp"
#include "oratory/random.hpp"

namespace oratory {

enum class Modality : std::uint8_t { pose = 0, face = 1, voice = 2 };
inline constexpr std::array<Modality, 3> kAllModalities = {Modality::pose, Modality::face, Modality::voice};

inline std::string to_string(Modality m) {
  switch (m) {
    case Modality::pose: return "pose";
    case Modality::face: return "face";
    case Modality::voice: return "voice";
  }
  return "?";
}

inline Modality parse_modality(std::string_view s) {
  if (s == "pose") return Modality::pose;
  if (s == "face") return Modality::face;
  if (s == "voice") return Modality::voice;
  throw ArgumentError("unknown modality '" + std::string(s) + "' (expected pose, face or voice)");
}

enum class Mode { train, infer };

struct Architecture {
  bool use_pose = true;
  bool use_face = true;
  bool use_voice = true;
  std::size_t frames = kFrames;
  std::size_t pose_dim = kPoseDim;
  std::size_t face_dim = kFaceDim;
  std::size_t voice_dim = kVoiceDim;
  std::size_t conv_channels = 32;
  std::size_t conv_kernel = 5;
  std::vector<std::size_t> dilations = {1, 2, 2, 4, 4};
  std::size_t pool_window = 2;
  std::size_t pool_stride = 2;
  std::vector<std::size_t> fc_dims = {2048, 1024, 512, 256};

  static Architecture with_modalities(bool pose, bool face, bool voice) {
    Architecture a;
    a.use_pose = pose;
    a.use_face = face;
    a.use_voice = voice;
    return a;
  }

  bool uses(Modality m) const {
    switch (m) {
      case Modality::pose: return use_pose;
      case Modality::face: return use_face;
      case Modality::voice: return use_voice;
    }
    return false;
  }

  /// Temporal length after each conv layer.
  std::vector<std::size_t> conv_lengths() const {
    std::vector<std::size_t> out;
    std::size_t length = frames;
    for (std::size_t d : dilations) {
      length = nn::conv1d_output_length(length, conv_kernel, d, 1);
      out.push_back(length);
    }
    return out;
  }

  std::size_t pooled_length() const {
    const std::size_t last = dilations.empty() ? frames : conv_lengths().back();
    return (last - pool_window) / pool_stride + 1;
  }

  std::size_t pose_latent_dim() const {
    return (dilations.empty() ? pose_dim : conv_channels) * pooled_length();
  }

  std::size_t block_width(Modality m) const {
    if (!uses(m)) return 0;
    switch (m) {
      case Modality::pose: return pose_latent_dim();
      case Modality::face: return face_dim;
      case Modality::voice: return voice_dim;
    }
    return 0;
  }

  /// Column where modality `m` starts in the fused vector.
  std::size_t block_offset(Modality m) const {
    std::size_t off = 0;
    for (Modality k : kAllModalities) {
      if (k == m) return off;
      off += block_width(k);
    }
    return off;
  }

  std::size_t fusion_width() const {
    return block_width(Modality::pose) + block_width(Modality::face) + block_width(Modality::voice);
  }

  std::string modality_label() const {
    std::string s;
    for (Modality m : kAllModalities) {
      if (!uses(m)) continue;
      if (!s.empty()) s += "+";
      s += to_string(m);
    }
    return s;
  }

  /// Canonical text form stored in checkpoints.
  std::string descriptor() const {
    auto list = [](const std::vector<std::size_t>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
      return s;
    };
    std::ostringstream os;
    os << "modalities=" << use_pose << use_face << use_voice << ";frames=" << frames
       << ";pose_dim=" << pose_dim << ";face_dim=" << face_dim << ";voice_dim=" << voice_dim
       << ";conv=" << conv_channels << "x" << conv_kernel << ";dilations=" << list(dilations)
       << ";pool=" << pool_window << "/" << pool_stride << ";fc=" << list(fc_dims) << ";head=1";
    return os.str();
  }

  std::uint64_t hash() const { return fnv1a64(descriptor()); }

  static Architecture from_descriptor(const std::string& text);

  friend bool operator==(const Architecture& a, const Architecture& b) {
    return a.descriptor() == b.descriptor();
  }
};

inline Architecture Architecture::from_descriptor(const std::string& text) {
  auto fail = [&]() -> Architecture { throw FormatError("bad architecture descriptor '" + text + "'"); };
  auto list = [&](const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) fail();
      out.push_back(std::stoul(item));
    }
    return out;
  };
  Architecture a;
  std::stringstream ss(text);
  std::string field;
  std::set<std::string> seen;
  try {
    while (std::getline(ss, field, ';')) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) fail();
      const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
      seen.insert(key);
      if (key == "modalities") {
        if (value.size() != 3) fail();
        a.use_pose = value[0] == '1';
        a.use_face = value[1] == '1';
        a.use_voice = value[2] == '1';
      } else if (key == "frames") {
        a.frames = std::stoul(value);
      } else if (key == "pose_dim") {
        a.pose_dim = std::stoul(value);
      } else if (key == "face_dim") {
        a.face_dim = std::stoul(value);
      } else if (key == "voice_dim") {
        a.voice_dim = std::stoul(value);
      } else if (key == "conv") {
        const auto x = value.find('x');
        if (x == std::string::npos) fail();
        a.conv_channels = std::stoul(value.substr(0, x));
        a.conv_kernel = std::stoul(value.substr(x + 1));
      } else if (key == "dilations") {
        a.dilations = list(value);
      } else if (key == "pool") {
        const auto slash = value.find('/');
        if (slash == std::string::npos) fail();
        a.pool_window = std::stoul(value.substr(0, slash));
        a.pool_stride = std::stoul(value.substr(slash + 1));
      } else if (key == "fc") {
        a.fc_dims = list(value);
      } else if (key != "head" || value != "1") {
        fail();
      }
    }
  } catch (const std::logic_error&) {
    fail();
  }
  if (seen.size() != 10) fail();
  return a;
}

/// Latent blocks of one segment at the concatenation boundary.
template <typename T>
struct SegmentLatents {
  std::vector<T> pose;   // pose_latent_dim, empty when pose is disabled
  std::vector<T> face;   // face_dim
  std::vector<T> voice;  // voice_dim

  std::vector<T>& block(Modality m) {
    return m == Modality::pose ? pose : m == Modality::face ? face : voice;
  }
  const std::vector<T>& block(Modality m) const {
    return m == Modality::pose ? pose : m == Modality::face ? face : voice;
  }

  friend bool operator==(const SegmentLatents&, const SegmentLatents&) = default;
};

/// Network inputs for a batch of segments, already laid out for the model.
template <typename T>
struct ModelInput {
  nn::Tensor<T> pose;   // [batch, pose_dim, frames]
  nn::Tensor<T> face;   // [batch, face_dim]
  nn::Tensor<T> voice;  // [batch, voice_dim]

  std::size_t batch() const { return face.rank() ? face.dim(0) : 0; }
};

template <typename T>
ModelInput<T> pack_input(std::span<const SegmentFeatures* const> segs) {
  const std::size_t batch = segs.size();
  ModelInput<T> in{nn::Tensor<T>({batch, kPoseDim, kFrames}), nn::Tensor<T>({batch, kFaceDim}),
                   nn::Tensor<T>({batch, kVoiceDim})};
  for (std::size_t b = 0; b < batch; ++b) {
    const SegmentFeatures& s = *segs[b];
    validate_segment(s, b);
    for (std::size_t f = 0; f < kFrames; ++f) {
      for (std::size_t c = 0; c < kPoseDim; ++c) in.pose.at(b, c, f) = static_cast<T>(s.pose[f * kPoseDim + c]);
    }
    std::copy(s.face.begin(), s.face.end(), in.face.ptr() + b * kFaceDim);
    std::copy(s.voice.begin(), s.voice.end(), in.voice.ptr() + b * kVoiceDim);
  }
  return in;
}

template <typename T>
ModelInput<T> pack_input(std::span<const SegmentFeatures> segs) {
  std::vector<const SegmentFeatures*> ptrs;
  for (const SegmentFeatures& s : segs) ptrs.push_back(&s);
  return pack_input<T>(std::span<const SegmentFeatures* const>(ptrs));
}

/// Activations saved by a training-mode forward pass.
template <typename T>
struct ForwardCache {
  bool valid = false;
  nn::Tensor<T> pose_in;
  std::vector<nn::Tensor<T>> conv_pre;  // conv outputs before ReLU
  std::vector<nn::Tensor<T>> conv_act;  // after ReLU
  nn::Shape pool_in_shape;
  std::size_t batch = 0;
  nn::BatchNormCache<T> bn0;
  std::vector<nn::Tensor<T>> fc_in;
  std::vector<nn::Tensor<T>> fc_pre;
  std::vector<nn::BatchNormCache<T>> fc_bn;
  nn::Tensor<T> head_in;
  nn::Tensor<T> probs;  // [batch, 1]

  /// ReLU activation pattern; a change marks a kink crossing.
  std::vector<bool> relu_pattern() const {
    std::vector<bool> out;
    auto add = [&](const nn::Tensor<T>& t) {
      for (T v : t.data()) out.push_back(v > T{0});
    };
    for (const auto& t : conv_pre) add(t);
    for (const auto& t : fc_pre) add(t);
    return out;
  }
};

template <typename T>
class FusionModel {
 public:
  FusionModel() = default;

  /// Fresh parameters: He-uniform weights, zero biases, identity batch norms.
  static FusionModel initialize(const Architecture& arch, std::uint64_t seed) {
    FusionModel m = zeros(arch);
    for (auto* bn : m.norms()) {
      bn->gamma.fill(T{1});
      bn->running_var.fill(T{1});
    }
    Rng rng(seed, "init");
    for (auto& c : m.conv_) nn::init_layer(c, rng);
    for (auto& f : m.fc_) nn::init_layer(f, rng);
    nn::init_layer(m.head_, rng);
    return m;
  }

  /// All parameters zero (batch-norm gamma and running variance included);
  /// doubles as a gradient accumulator.
  static FusionModel zeros(const Architecture& arch) {
    FusionModel m;
    m.arch_ = arch;
    if (arch.use_pose) {
      std::size_t in = arch.pose_dim;
      for (std::size_t d : arch.dilations) {
        m.conv_.emplace_back(in, arch.conv_channels, arch.conv_kernel, d);
        in = arch.conv_channels;
      }
    }
    const std::size_t width = arch.fusion_width();
    if (width == 0) throw ArgumentError("architecture enables no modality");
    m.bn0_ = nn::BatchNormLayer<T>(width);
    std::size_t in = width;
    for (std::size_t d : arch.fc_dims) {
      m.fc_.emplace_back(in, d);
      m.fc_bn_.emplace_back(d);
      in = d;
    }
    m.head_ = nn::LinearLayer<T>(in, 1);
    for (auto* bn : m.norms()) {
      bn->gamma.fill(T{0});
      bn->running_var.fill(T{0});
    }
    return m;
  }

  const Architecture& architecture() const { return arch_; }

  std::vector<nn::Conv1dLayer<T>>& conv_layers() { return conv_; }
  const std::vector<nn::Conv1dLayer<T>>& conv_layers() const { return conv_; }
  nn::BatchNormLayer<T>& fusion_norm() { return bn0_; }
  const nn::BatchNormLayer<T>& fusion_norm() const { return bn0_; }
  std::vector<nn::LinearLayer<T>>& fc_layers() { return fc_; }
  const std::vector<nn::LinearLayer<T>>& fc_layers() const { return fc_; }
  std::vector<nn::BatchNormLayer<T>>& fc_norms() { return fc_bn_; }
  const std::vector<nn::BatchNormLayer<T>>& fc_norms() const { return fc_bn_; }
  std::vector<nn::BatchNormLayer<T>*> norms() {
    std::vector<nn::BatchNormLayer<T>*> out{&bn0_};
    for (auto& bn : fc_bn_) out.push_back(&bn);
    return out;
  }
  nn::LinearLayer<T>& head() { return head_; }
  const nn::LinearLayer<T>& head() const { return head_; }

  /// Learnable tensors in declaration order (batch-norm running statistics excluded).
  std::vector<nn::Tensor<T>*> trainable() {
    std::vector<nn::Tensor<T>*> out;
    for (auto& c : conv_) out.insert(out.end(), {&c.weight, &c.bias});
    out.insert(out.end(), {&bn0_.gamma, &bn0_.beta});
    for (std::size_t i = 0; i < fc_.size(); ++i) {
      out.insert(out.end(), {&fc_[i].weight, &fc_[i].bias, &fc_bn_[i].gamma, &fc_bn_[i].beta});
    }
    out.insert(out.end(), {&head_.weight, &head_.bias});
    return out;
  }

  std::vector<const nn::Tensor<T>*> trainable() const {
    auto ptrs = const_cast<FusionModel*>(this)->trainable();
    return {ptrs.begin(), ptrs.end()};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* t : trainable()) n += t->size();
    return n;
  }

  void zero() {
    for (auto* t : trainable()) t->fill(T{0});
  }

  template <typename U>
  FusionModel<U> cast() const {
    FusionModel<U> out = FusionModel<U>::zeros(arch_);
    auto copy_layer = [](auto& dst, const auto& src) {
      dst.weight = nn::Tensor<U>::cast(src.weight);
      dst.bias = nn::Tensor<U>::cast(src.bias);
    };
    auto copy_bn = [](nn::BatchNormLayer<U>& dst, const nn::BatchNormLayer<T>& src) {
      dst.gamma = nn::Tensor<U>::cast(src.gamma);
      dst.beta = nn::Tensor<U>::cast(src.beta);
      dst.running_mean = nn::Tensor<U>::cast(src.running_mean);
      dst.running_var = nn::Tensor<U>::cast(src.running_var);
    };
    for (std::size_t i = 0; i < conv_.size(); ++i) copy_layer(out.conv_layers()[i], conv_[i]);
    copy_bn(out.fusion_norm(), bn0_);
    for (std::size_t i = 0; i < fc_.size(); ++i) {
      copy_layer(out.fc_layers()[i], fc_[i]);
      copy_bn(out.fc_norms()[i], fc_bn_[i]);
    }
    copy_layer(out.head(), head_);
    return out;
  }

  // -------------------------------------------------------------------------
  // inference

  /// [batch, pose_dim, frames] -> [batch, pose_latent_dim], channel-major.
  nn::Tensor<T> pose_encode(const nn::Tensor<T>& pose) const {
    if (!arch_.use_pose) throw ArgumentError("pose_encode: pose modality is disabled");
    nn::require_shape(pose.rank() == 3 && pose.dim(1) == arch_.pose_dim && pose.dim(2) == arch_.frames,
                      "pose_encode: expected [batch, " + std::to_string(arch_.pose_dim) + ", " +
                          std::to_string(arch_.frames) + "], got " + nn::shape_string(pose.shape()));
    nn::Tensor<T> h = pose;
    for (const auto& c : conv_) h = nn::relu(nn::conv1d_forward(h, c));
    return nn::flatten(nn::avgpool1d(h, arch_.pool_window, arch_.pool_stride));
  }

  /// Single segment, pose given frame-major as stored on disk.
  std::vector<T> pose_encode(const SegmentFeatures& seg) const {
    const SegmentFeatures* p = &seg;
    const ModelInput<T> in = pack_input<T>(std::span<const SegmentFeatures* const>(&p, 1));
    const nn::Tensor<T> z = pose_encode(in.pose);
    return {z.data().begin(), z.data().end()};
  }

  SegmentLatents<T> segment_latents(const SegmentFeatures& seg) const {
    validate_segment(seg, 0);
    SegmentLatents<T> lat;
    if (arch_.use_pose) lat.pose = pose_encode(seg);
    lat.face.assign(seg.face.begin(), seg.face.end());
    lat.voice.assign(seg.voice.begin(), seg.voice.end());
    return lat;
  }

  /// Fused [batch, fusion_width] input of the MLP.
  nn::Tensor<T> fuse(const ModelInput<T>& in) const {
    std::vector<nn::Tensor<T>> blocks;
    if (arch_.use_pose) blocks.push_back(pose_encode(in.pose));
    if (arch_.use_face) blocks.push_back(in.face);
    if (arch_.use_voice) blocks.push_back(in.voice);
    std::vector<const nn::Tensor<T>*> ptrs;
    for (const auto& b : blocks) ptrs.push_back(&b);
    return nn::concat(ptrs, 1);
  }

  nn::Tensor<T> fuse(const std::vector<SegmentLatents<T>>& lats) const {
    const std::size_t width = arch_.fusion_width();
    nn::Tensor<T> x({lats.size(), width});
    for (std::size_t b = 0; b < lats.size(); ++b) {
      T* row = x.ptr() + b * width;
      for (Modality m : kAllModalities) {
        if (!arch_.uses(m)) continue;
        const std::vector<T>& blk = lats[b].block(m);
        if (blk.size() != arch_.block_width(m)) {
          throw ShapeError("latent block " + to_string(m) + " has width " + std::to_string(blk.size()) +
                           ", expected " + std::to_string(arch_.block_width(m)));
        }
        std::copy(blk.begin(), blk.end(), row + arch_.block_offset(m));
      }
    }
    return x;
  }

  /// Probabilities [batch] for fused inputs. Infer mode uses running
  /// statistics; train mode normalizes by the batch and updates them.
  std::vector<T> score_fused(const nn::Tensor<T>& fused, Mode mode = Mode::infer) {
    if (mode == Mode::train) {
      ForwardCache<T> cache;
      forward_fused_train(fused, cache);
      return {cache.probs.data().begin(), cache.probs.data().end()};
    }
    return std::as_const(*this).score_fused(fused);
  }

  std::vector<T> score_fused(const nn::Tensor<T>& fused) const {
    nn::require_shape(fused.rank() == 2 && fused.dim(1) == arch_.fusion_width(),
                      "score: fused input " + nn::shape_string(fused.shape()) + ", expected width " +
                          std::to_string(arch_.fusion_width()));
    nn::Tensor<T> h = nn::batchnorm_forward(fused, bn0_);
    for (std::size_t i = 0; i < fc_.size(); ++i) {
      h = nn::batchnorm_forward(nn::relu(nn::linear_forward(h, fc_[i])), fc_bn_[i]);
    }
    const nn::Tensor<T> p = nn::sigmoid(nn::linear_forward(h, head_));
    return {p.data().begin(), p.data().end()};
  }

  T score_from_latents(const SegmentLatents<T>& lat) const {
    return score_fused(fuse(std::vector<SegmentLatents<T>>{lat})).front();
  }

  std::vector<T> score_from_latents(const std::vector<SegmentLatents<T>>& lats, Mode mode) {
    return score_fused(fuse(lats), mode);
  }

  T score_segment(const SegmentFeatures& seg) const {
    const SegmentFeatures* p = &seg;
    return score(std::span<const SegmentFeatures* const>(&p, 1)).front();
  }

  /// Infer-mode scores, processed in chunks of `chunk` segments.
  std::vector<T> score(std::span<const SegmentFeatures* const> segs, std::size_t chunk = 128) const {
    std::vector<T> out;
    out.reserve(segs.size());
    for (std::size_t begin = 0; begin < segs.size(); begin += chunk) {
      const std::size_t n = std::min(chunk, segs.size() - begin);
      const auto probs = score_fused(fuse(pack_input<T>(segs.subspan(begin, n))));
      out.insert(out.end(), probs.begin(), probs.end());
    }
    return out;
  }

  std::vector<T> score(std::span<const SegmentFeatures> segs, std::size_t chunk = 128) const {
    std::vector<const SegmentFeatures*> ptrs;
    for (const SegmentFeatures& s : segs) ptrs.push_back(&s);
    return score(std::span<const SegmentFeatures* const>(ptrs), chunk);
  }

  // -------------------------------------------------------------------------
  // training

  /// Training-mode forward pass; fills `cache` and returns probabilities [batch, 1].
  const nn::Tensor<T>& forward_train(const ModelInput<T>& in, ForwardCache<T>& cache) {
    cache = ForwardCache<T>{};
    cache.batch = in.batch();
    std::vector<nn::Tensor<T>> blocks;
    if (arch_.use_pose) {
      cache.pose_in = in.pose;
      const nn::Tensor<T>* h = &cache.pose_in;
      for (const auto& c : conv_) {
        cache.conv_pre.push_back(nn::conv1d_forward(*h, c));
        cache.conv_act.push_back(nn::relu(cache.conv_pre.back()));
        h = &cache.conv_act.back();
      }
      cache.pool_in_shape = h->shape();
      blocks.push_back(nn::flatten(nn::avgpool1d(*h, arch_.pool_window, arch_.pool_stride)));
    }
    if (arch_.use_face) blocks.push_back(in.face);
    if (arch_.use_voice) blocks.push_back(in.voice);
    std::vector<const nn::Tensor<T>*> ptrs;
    for (const auto& b : blocks) ptrs.push_back(&b);
    forward_fused_train(nn::concat(ptrs, 1), cache);
    return cache.probs;
  }

  /// Training-mode forward from an already fused [batch, fusion_width] input.
  const nn::Tensor<T>& forward_fused_train(const nn::Tensor<T>& fused, ForwardCache<T>& cache) {
    nn::require_shape(fused.rank() == 2 && fused.dim(1) == arch_.fusion_width(),
                      "forward: fused input " + nn::shape_string(fused.shape()));
    if (fused.dim(0) < 2) throw ArgumentError("train mode needs a batch of at least 2 segments");
    cache.batch = fused.dim(0);
    nn::Tensor<T> h = nn::batchnorm_forward_train(fused, bn0_, cache.bn0);
    cache.fc_in.clear();
    cache.fc_pre.clear();
    cache.fc_bn.assign(fc_.size(), {});
    for (std::size_t i = 0; i < fc_.size(); ++i) {
      cache.fc_in.push_back(std::move(h));
      cache.fc_pre.push_back(nn::linear_forward(cache.fc_in.back(), fc_[i]));
      h = nn::batchnorm_forward_train(nn::relu(cache.fc_pre.back()), fc_bn_[i], cache.fc_bn[i]);
    }
    cache.head_in = std::move(h);
    cache.probs = nn::sigmoid(nn::linear_forward(cache.head_in, head_));
    cache.valid = true;
    return cache.probs;
  }

  /// Reverse pass from d(loss)/d(logits) [batch, 1]; adds parameter gradients
  /// into `grads` (shaped like this model) and returns input gradients.
  ModelInput<T> backward(const ForwardCache<T>& cache, const nn::Tensor<T>& dlogits, FusionModel& grads) const {
    if (!cache.valid) throw Error("backward called before a training-mode forward pass");
    nn::Tensor<T> g = nn::linear_backward(cache.head_in, head_, dlogits, grads.head_);
    for (std::size_t i = fc_.size(); i-- > 0;) {
      g = nn::batchnorm_backward(cache.fc_bn[i], fc_bn_[i], g, grads.fc_bn_[i]);
      g = nn::relu_backward(cache.fc_pre[i], g);
      g = nn::linear_backward(cache.fc_in[i], fc_[i], g, grads.fc_[i]);
    }
    g = nn::batchnorm_backward(cache.bn0, bn0_, g, grads.bn0_);

    ModelInput<T> dinput;
    if (arch_.use_face) {
      dinput.face = nn::slice_columns(g, arch_.block_offset(Modality::face), arch_.face_dim);
    }
    if (arch_.use_voice) {
      dinput.voice = nn::slice_columns(g, arch_.block_offset(Modality::voice), arch_.voice_dim);
    }
    if (arch_.use_pose && !cache.conv_pre.empty()) {
      nn::Tensor<T> gp = nn::slice_columns(g, arch_.block_offset(Modality::pose), arch_.pose_latent_dim());
      const nn::Shape pooled{cache.batch, cache.pool_in_shape[1], arch_.pooled_length()};
      gp = nn::avgpool1d_backward(cache.pool_in_shape, arch_.pool_window, arch_.pool_stride,
                                  std::move(gp).reshaped(pooled));
      for (std::size_t i = conv_.size(); i-- > 0;) {
        gp = nn::relu_backward(cache.conv_pre[i], gp);
        const nn::Tensor<T>& input = i == 0 ? cache.pose_in : cache.conv_act[i - 1];
        gp = nn::conv1d_backward(input, conv_[i], gp, grads.conv_[i]);
      }
      dinput.pose = std::move(gp);
    }
    return dinput;
  }

 private:
  template <typename U>
  friend class FusionModel;

  Architecture arch_;
  std::vector<nn::Conv1dLayer<T>> conv_;
  nn::BatchNormLayer<T> bn0_;
  std::vector<nn::LinearLayer<T>> fc_;
  std::vector<nn::BatchNormLayer<T>> fc_bn_;
  nn::LinearLayer<T> head_;
};

}  // namespace oratory
