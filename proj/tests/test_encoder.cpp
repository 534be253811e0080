#include <doctest.h>

#include "mvreplay/encoder.hpp"
#include "mvreplay/loss.hpp"
#include "testutil.hpp"

using namespace mvreplay;

TEST_SUITE_BEGIN("encoder");

namespace {

std::vector<Image> random_images(int n, int side, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Image> out;
  for (int i = 0; i < n; ++i) out.push_back(testutil::random_image(side, side, rng));
  return out;
}

}  // namespace

TEST_CASE("resnet18 maps 32x32x3 batches to 512-d representations") {
  EncoderModel model(EncoderArch::resnet18, 32, 1);
  const auto images = random_images(4, 32, 2);
  const Eigen::MatrixXf reps = model.encode(images);
  CHECK(reps.rows() == 4);
  CHECK(reps.cols() == 512);
  CHECK(model.representation_dim() == 512);
  CHECK(reps.allFinite());
}

TEST_CASE("small cnn maps to 256-d with ~0.4M backbone-dominated parameters") {
  EncoderModel model(EncoderArch::small_cnn, 32, 1);
  const auto images = random_images(3, 32, 3);
  CHECK(model.encode(images).cols() == 256);
  // 4 conv blocks + projector; the figure is pinned so config hashes can
  // vouch for the architecture.
  CHECK(model.parameter_count() == 586144);
}

TEST_CASE("encode is deterministic and batch-order equivariant") {
  EncoderModel model(EncoderArch::small_cnn, 32, 4);
  const auto images = random_images(5, 32, 5);
  const Eigen::MatrixXf a = model.encode(images);
  const Eigen::MatrixXf b = model.encode(images);
  CHECK(a == b);

  std::vector<Image> reversed(images.rbegin(), images.rend());
  const Eigen::MatrixXf r = model.encode(reversed);
  for (int i = 0; i < 5; ++i) {
    CHECK((r.row(i) - a.row(4 - i)).norm() == doctest::Approx(0.0f));
  }
}

TEST_CASE("projection yields unit 128-d rows, even for a zero representation") {
  EncoderModel model(EncoderArch::small_cnn, 32, 6);
  Eigen::MatrixXf reps = Eigen::MatrixXf::Random(6, 256);
  reps.row(0).setZero();  // projector biases keep the pre-norm vector nonzero
  const Eigen::MatrixXf emb = model.project(reps);
  CHECK(emb.cols() == 128);
  for (int i = 0; i < emb.rows(); ++i) {
    CHECK(emb.row(i).norm() == doctest::Approx(1.0f).epsilon(1e-6));
  }
}

TEST_CASE("training forward emits unit embeddings accepted by the loss") {
  EncoderModel model(EncoderArch::small_cnn, 32, 7);
  const auto images = random_images(8, 32, 8);
  const Eigen::MatrixXf emb = model.forward_train(images);
  REQUIRE(emb.rows() == 8);
  REQUIRE(emb.cols() == 128);
  std::vector<std::int64_t> ids{0, 0, 1, 1, 2, 2, 3, 3};
  const auto loss = mvcont_loss(emb.cast<double>(), ids, 0.07);
  CHECK(std::isfinite(loss.value));
}

TEST_CASE("sgd applies theta <- theta - lr * grad and clears gradients") {
  // One scalar-ish check through the public interface: run a step with a
  // synthetic gradient and verify a parameter moved in the right direction.
  EncoderModel model(EncoderArch::small_cnn, 32, 9);
  const auto images = random_images(4, 32, 10);
  const Eigen::MatrixXf before_emb = model.forward_train(images);
  Eigen::MatrixXf grad = Eigen::MatrixXf::Zero(4, 128);
  grad(0, 0) = 1.0f;
  model.backward(grad);

  const TensorMap before = model.to_tensors();
  model.sgd_step(0.1f);
  const TensorMap after = model.to_tensors();
  double total_change = 0.0;
  for (const auto& [name, entry] : before.tensors) {
    const auto& updated = after.require(name);
    for (std::size_t i = 0; i < entry.data.size(); ++i) {
      total_change += std::abs(static_cast<double>(updated.data[i]) - entry.data[i]);
    }
  }
  CHECK(total_change > 0.0);

  // With cleared gradients a second step must not move parameters.
  model.sgd_step(0.1f);
  const TensorMap again = model.to_tensors();
  for (const auto& [name, entry] : after.tensors) {
    CHECK(again.require(name).data == entry.data);
  }
}

TEST_CASE("checkpoint tensors restore the exact model") {
  EncoderModel model(EncoderArch::small_cnn, 32, 11);
  const auto images = random_images(4, 32, 12);
  // a couple of training steps so running stats differ from init
  for (int step = 0; step < 2; ++step) {
    const Eigen::MatrixXf emb = model.forward_train(images);
    Eigen::MatrixXf grad = Eigen::MatrixXf::Constant(4, 128, 0.01f);
    model.backward(grad);
    model.sgd_step(0.05f);
  }
  const Eigen::MatrixXf want = model.encode(images);

  EncoderModel restored(EncoderArch::small_cnn, 32, 999);
  restored.load_tensors(model.to_tensors());
  const Eigen::MatrixXf got = restored.encode(images);
  CHECK((want - got).norm() == doctest::Approx(0.0f));
}

TEST_CASE("input contract violations error") {
  EncoderModel model(EncoderArch::small_cnn, 32, 13);
  CHECK_THROWS_AS(model.encode(std::vector<Image>{}), std::invalid_argument);
  CHECK_THROWS_AS(model.encode(random_images(2, 16, 14)), std::invalid_argument);
  Eigen::MatrixXf wrong(2, 100);
  CHECK_THROWS_AS(model.project(wrong), std::invalid_argument);
}

TEST_SUITE_END();
