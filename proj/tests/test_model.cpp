#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <sstream>

#include "oratory/checkpoint.hpp"
#include "oratory/model.hpp"
#include "oratory/selfcheck.hpp"

using namespace oratory;

namespace {

SegmentFeatures random_segment(Rng& rng, const std::string& id = "t", std::uint32_t index = 0) {
  SegmentFeatures s;
  s.talk_id = id;
  s.segment_index = index;
  for (float& v : s.pose) v = static_cast<float>(rng.normal());
  for (float& v : s.face) v = static_cast<float>(rng.normal());
  for (float& v : s.voice) v = static_cast<float>(rng.normal());
  return s;
}

// Model with non-trivial running statistics so infer mode is not an identity.
FusionModel<float> warmed_model(std::uint64_t seed, const Architecture& arch = {}) {
  auto model = FusionModel<float>::initialize(arch, seed);
  Rng rng(seed + 1);
  std::vector<SegmentFeatures> segs;
  for (int i = 0; i < 8; ++i) segs.push_back(random_segment(rng));
  ForwardCache<float> cache;
  model.forward_train(pack_input<float>(std::span<const SegmentFeatures>(segs)), cache);
  return model;
}

bool same_bits(float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("architecture shapes") {
  const Architecture arch;
  CHECK(arch.conv_lengths() == std::vector<std::size_t>{116, 108, 100, 84, 68});
  CHECK(arch.pooled_length() == 34);
  CHECK(arch.pose_latent_dim() == 1088);
  CHECK(arch.fusion_width() == 2112);
  CHECK(arch.block_offset(Modality::face) == 1088);
  CHECK(arch.block_offset(Modality::voice) == 1600);

  const auto model = FusionModel<float>::initialize(arch, 1);
  REQUIRE(model.conv_layers().size() == 5);
  const std::size_t dil[] = {1, 2, 2, 4, 4};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& c = model.conv_layers()[i];
    CHECK(c.dilation == dil[i]);
    CHECK(c.weight.shape() == nn::Shape{32, i == 0 ? 51u : 32u, 5});
  }
  CHECK(model.fusion_norm().gamma.size() == 2112);
  std::vector<std::size_t> dims;
  for (const auto& l : model.fc_layers()) dims.push_back(l.weight.dim(1));
  dims.push_back(model.head().weight.dim(1));
  CHECK(dims == std::vector<std::size_t>{2048, 1024, 512, 256, 1});
  CHECK(model.fc_layers()[0].weight.dim(0) == 2112);

  // conv: 51*32*5+32 + 4*(32*32*5+32); bn0: 2*2112; fc+bn; head.
  const std::size_t expected = (51 * 32 * 5 + 32) + 4 * (32 * 32 * 5 + 32) + 2 * 2112 +
                               (2112 * 2048 + 2048 + 2 * 2048) + (2048 * 1024 + 1024 + 2 * 1024) +
                               (1024 * 512 + 512 + 2 * 512) + (512 * 256 + 256 + 2 * 256) + (256 + 1);
  CHECK(model.parameter_count() == expected);

  Rng rng(3);
  const auto seg = random_segment(rng);
  CHECK(model.pose_encode(seg).size() == 1088);
  const auto in = pack_input<float>(std::span<const SegmentFeatures>(&seg, 1));
  CHECK(in.pose.shape() == nn::Shape{1, 51, 120});
  CHECK(model.fuse(in).shape() == nn::Shape{1, 2112});
}

TEST_CASE("ablated architectures shrink the fusion width") {
  const auto voice_only = Architecture::with_modalities(false, false, true);
  CHECK(voice_only.fusion_width() == 512);
  CHECK(voice_only.modality_label() == "voice");
  const auto model = FusionModel<float>::initialize(voice_only, 2);
  CHECK(model.conv_layers().empty());
  Rng rng(1);
  const auto seg = random_segment(rng);
  const float p = model.score_segment(seg);
  CHECK(p > 0.0f);
  CHECK(p < 1.0f);
  CHECK_THROWS_AS(FusionModel<float>::zeros(Architecture::with_modalities(false, false, false)), ArgumentError);
}

TEST_CASE("descriptor round trip and hash") {
  const Architecture a;
  CHECK(Architecture::from_descriptor(a.descriptor()) == a);
  const auto b = Architecture::with_modalities(true, false, true);
  CHECK(Architecture::from_descriptor(b.descriptor()) == b);
  CHECK(a.hash() != b.hash());
  CHECK_THROWS(Architecture::from_descriptor("modalities=111;frames=120"));
}

TEST_CASE("pose encoder") {
  const auto model = FusionModel<double>::initialize(Architecture{}, 4);
  SegmentFeatures zero;
  zero.talk_id = "z";
  const auto lat = model.pose_encode(zero);
  CHECK(std::all_of(lat.begin(), lat.end(), [](double v) { return v == 0.0; }));

  Rng rng(8);
  const auto seg = random_segment(rng);
  CHECK(model.pose_encode(seg) == model.pose_encode(seg));
  CHECK_THROWS_AS(model.pose_encode(nn::Tensor<double>({1, 120, 51})), ShapeError);
}

TEST_CASE("segment latents and scoring") {
  const auto model = warmed_model(5);
  Rng rng(9);
  const auto seg = random_segment(rng);
  const auto lat = model.segment_latents(seg);
  CHECK(lat.face == seg.face);
  CHECK(lat.voice == seg.voice);
  CHECK(lat.pose == model.pose_encode(seg));

  SECTION("composition is exact") {
    CHECK(same_bits(model.score_segment(seg), model.score_from_latents(lat)));
  }
  SECTION("infer mode is pure") {
    const float a = model.score_segment(seg);
    const float b = model.score_segment(seg);
    CHECK(same_bits(a, b));
    CHECK(a > 0.0f);
    CHECK(a < 1.0f);
  }
  SECTION("batch equals independent single scores, and permutes with its input") {
    std::vector<SegmentFeatures> segs;
    for (std::uint32_t i = 0; i < 17; ++i) segs.push_back(random_segment(rng, "b", i));
    const auto batch = model.score(std::span<const SegmentFeatures>(segs), 5);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      CHECK(std::abs(batch[i] - model.score_segment(segs[i])) < 1e-6);
    }
    std::vector<SegmentFeatures> reversed(segs.rbegin(), segs.rend());
    const auto rev = model.score(std::span<const SegmentFeatures>(reversed));
    for (std::size_t i = 0; i < segs.size(); ++i) CHECK(std::abs(rev[segs.size() - 1 - i] - batch[i]) < 1e-6);
  }
  SECTION("zero head gives one half") {
    auto m = model;
    m.head().weight.fill(0.0f);
    m.head().bias.fill(0.0f);
    CHECK(m.score_segment(seg) == 0.5f);
    SegmentFeatures zero;
    zero.talk_id = "z";
    CHECK(m.score_segment(zero) == 0.5f);
  }
  SECTION("train mode needs two segments") {
    auto m = model;
    CHECK_THROWS_AS(m.score_from_latents({lat}, Mode::train), ArgumentError);
    const auto p = m.score_from_latents({lat, lat}, Mode::train);
    CHECK(p.size() == 2);
  }
  SECTION("extreme inputs stay inside (0, 1)") {
    SegmentFeatures big = seg;
    for (float& v : big.face) v *= 1e3f;
    const float p = model.score_segment(big);
    CHECK(p >= 0.0f);
    CHECK(p <= 1.0f);
    CHECK(std::isfinite(p));
  }
}

TEST_CASE("backward without forward is an error") {
  auto model = FusionModel<double>::initialize(Architecture{}, 1);
  auto grads = FusionModel<double>::zeros(Architecture{});
  ForwardCache<double> cache;
  CHECK_THROWS_AS(model.backward(cache, nn::Tensor<double>({2, 1}), grads), Error);
}

TEST_CASE("full-model gradient check", "[grad]") {
  const auto report = model_grad_check(Architecture{}, 11);
  INFO("max relative error " << report.max_rel_error << ", checked " << report.checked << ", skipped "
                             << report.skipped);
  CHECK(report.checked >= 60);
  CHECK(report.max_rel_error < 1e-3);
  CHECK(report.passed);

  const auto ablated = model_grad_check(Architecture::with_modalities(true, false, true), 12);
  CHECK(ablated.passed);
}

TEST_CASE("checkpoint persistence") {
  auto model = warmed_model(21);
  Rng rng(4);
  std::vector<SegmentFeatures> segs;
  for (std::uint32_t i = 0; i < 6; ++i) segs.push_back(random_segment(rng, "c", i));
  const auto before = model.score(std::span<const SegmentFeatures>(segs));

  SECTION("round trip is bit exact") {
    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    save_checkpoint(model, ss);
    const auto ck = load_checkpoint<float>(ss);
    CHECK_FALSE(ck.adam.has_value());
    const auto after = ck.model.score(std::span<const SegmentFeatures>(segs));
    for (std::size_t i = 0; i < segs.size(); ++i) CHECK(same_bits(before[i], after[i]));
    CHECK(ck.model.fusion_norm().running_var == model.fusion_norm().running_var);
  }
  SECTION("optimizer state travels along") {
    nn::AdamState<float> adam({}, model.trainable());
    adam.step = 3;
    adam.m[0].fill(0.25f);
    adam.v.back().fill(2.0f);
    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    save_checkpoint(model, ss, &adam);
    const auto ck = load_checkpoint<float>(ss);
    REQUIRE(ck.adam.has_value());
    CHECK(ck.adam->step == 3);
    CHECK(ck.adam->m[0] == adam.m[0]);
    CHECK(ck.adam->v.back() == adam.v.back());
  }
  SECTION("ablated architecture is self-describing") {
    const auto arch = Architecture::with_modalities(false, true, true);
    const auto small = FusionModel<float>::initialize(arch, 3);
    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    save_checkpoint(small, ss);
    CHECK(load_checkpoint<float>(ss).model.architecture() == arch);
  }
  SECTION("corruption is detected") {
    std::ostringstream os(std::ios::binary);
    save_checkpoint(model, os);
    const std::string bytes = os.str();
    std::istringstream truncated(bytes.substr(0, bytes.size() / 2), std::ios::binary);
    CHECK_THROWS_AS(load_checkpoint<float>(truncated), FormatError);
    std::string bad = bytes;
    bad[0] = 'X';
    std::istringstream bad_magic(bad, std::ios::binary);
    CHECK_THROWS_AS(load_checkpoint<float>(bad_magic), FormatError);
    std::istringstream trailing(bytes + "xyz", std::ios::binary);
    CHECK_THROWS_AS(load_checkpoint<float>(trailing), FormatError);
  }
  SECTION("architecture mismatch is refused") {
    const auto path = std::filesystem::temp_directory_path() / "oratory_test_model.omdl";
    save_checkpoint(model, path);
    CHECK_NOTHROW(load_model_for<float>(path, Architecture{}));
    try {
      load_model_for<float>(path, Architecture::with_modalities(true, true, false));
      FAIL("expected refusal");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("architecture") != std::string::npos);
    }
    std::filesystem::remove(path);
  }
}
