#include "mvreplay/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "mvreplay/rng.hpp"

namespace mvreplay {

namespace {

constexpr int kSide = 32;
constexpr int kWaves = 4;
constexpr int kProtosPerClass = 3;

struct Wave {
  float amp, fx, fy;
  std::array<float, 3> phase;
};

struct Prototype {
  std::array<float, 3> color;
  std::array<Wave, kWaves> waves;
};

Prototype make_prototype(Rng& rng, const std::array<float, 3>& color) {
  Prototype proto;
  proto.color = color;
  for (auto& wave : proto.waves) {
    wave.amp = static_cast<float>(rng.uniform(0.10, 0.25));
    wave.fx = static_cast<float>(rng.uniform(-2.5, 2.5));
    wave.fy = static_cast<float>(rng.uniform(-2.5, 2.5));
    for (auto& p : wave.phase) p = static_cast<float>(rng.uniform(0.0, 2.0 * M_PI));
  }
  return proto;
}

void render_example(const Prototype& proto, Rng& rng, unsigned char* pixels) {
  const float dx = static_cast<float>(rng.uniform(0.0, kSide));
  const float dy = static_cast<float>(rng.uniform(0.0, kSide));
  const bool flip = rng.bernoulli(0.5);
  const float brightness = static_cast<float>(rng.uniform(0.85, 1.15));
  constexpr float kNoise = 0.06f;
  constexpr float kTwoPiOverSide = static_cast<float>(2.0 * M_PI) / kSide;

  for (int ch = 0; ch < 3; ++ch) {
    unsigned char* plane = pixels + static_cast<std::size_t>(ch) * kSide * kSide;
    for (int y = 0; y < kSide; ++y) {
      for (int x = 0; x < kSide; ++x) {
        const float xs = (flip ? static_cast<float>(kSide - 1 - x) : static_cast<float>(x)) + dx;
        const float ys = static_cast<float>(y) + dy;
        float v = proto.color[static_cast<std::size_t>(ch)];
        for (const auto& wave : proto.waves) {
          v += wave.amp * std::sin(kTwoPiOverSide * (wave.fx * xs + wave.fy * ys) +
                                   wave.phase[static_cast<std::size_t>(ch)]);
        }
        v = v * brightness + kNoise * static_cast<float>(rng.normal());
        v = std::clamp(v, 0.0f, 1.0f);
        plane[static_cast<std::size_t>(y) * kSide + x] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
}

void write_split(const std::filesystem::path& file, int num_classes, int per_class,
                 const std::vector<Prototype>& protos, std::uint64_t seed, const char* tag) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write synthetic dataset file: " + file.string());
  std::vector<unsigned char> record(1 + 3 * kSide * kSide);
  // Interleave classes so any record prefix is class-balanced.
  for (int i = 0; i < per_class; ++i) {
    for (int cls = 0; cls < num_classes; ++cls) {
      Rng rng = Rng::substream(seed, tag,
                               static_cast<std::uint64_t>(cls) * 1000003ULL +
                                   static_cast<std::uint64_t>(i));
      const int proto = static_cast<int>(rng.uniform_int(kProtosPerClass));
      record[0] = static_cast<unsigned char>(cls);
      render_example(protos[static_cast<std::size_t>(cls * kProtosPerClass + proto)], rng,
                     record.data() + 1);
      out.write(reinterpret_cast<const char*>(record.data()),
                static_cast<std::streamsize>(record.size()));
    }
  }
  if (!out) throw std::runtime_error("failed writing synthetic dataset file: " + file.string());
}

}  // namespace

void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticSpec& spec) {
  if (spec.num_classes < 2 || spec.num_classes > 255) {
    throw std::invalid_argument("synthetic dataset needs 2..255 classes");
  }
  const auto train_file = dir / "data_batch_1.bin";
  const auto test_file = dir / "test_batch.bin";
  if (std::filesystem::exists(train_file) && std::filesystem::exists(test_file)) return;
  std::filesystem::create_directories(dir);

  std::vector<Prototype> protos;
  protos.reserve(static_cast<std::size_t>(spec.num_classes) * kProtosPerClass);
  for (int cls = 0; cls < spec.num_classes; ++cls) {
    Rng class_rng = Rng::substream(spec.seed, "synth_class", static_cast<std::uint64_t>(cls));
    std::array<float, 3> color;
    for (auto& c : color) c = static_cast<float>(class_rng.uniform(0.25, 0.75));
    for (int p = 0; p < kProtosPerClass; ++p) {
      protos.push_back(make_prototype(class_rng, color));
    }
  }

  write_split(train_file, spec.num_classes, spec.train_per_class, protos, spec.seed, "synth_train");
  write_split(test_file, spec.num_classes, spec.test_per_class, protos, spec.seed, "synth_test");
}

}  // namespace mvreplay
