#pragma once

#include "curafuse/corpus.hpp"
#include "curafuse/encoders.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace curafuse {

inline constexpr std::size_t kFusionInputs = 2 * kNumClasses;
inline constexpr double kLogitClip = 50.0;
inline constexpr double kProbFloor = 1e-12;

/// Linear late-fusion head: logits = W * [text; image] + b, W is 3x6 row-major.
struct FusionHead {
  std::array<double, kNumClasses * kFusionInputs> weights{};
  std::array<double, kNumClasses> bias{};
  std::size_t epochs_run = 0;
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  // Which encoders produced the training scores; informational for the head itself.
  std::string text_encoder;
  std::string image_encoder;
  std::uint64_t encoder_seed = 0;

  double& w(std::size_t row, std::size_t col) { return weights[row * kFusionInputs + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * kFusionInputs + col]; }

  /// W = [I | I] / 2, b = 0: reproduces mean_fuse.
  static FusionHead averaging();

  std::string to_json() const;
  /// Throws DataError on a malformed document or non-finite parameters.
  static FusionHead from_json(std::string_view text);
};

/// Clips to [-50, 50], subtracts the max, exponentiates and normalizes.
std::vector<double> softmax(std::span<const double> logits);
std::array<double, kNumClasses> softmax(const ScoreVector& logits);

ScoreVector fuse(const ScoreVector& text, const ScoreVector& image, const FusionHead& head);
ScoreVector mean_fuse(const ScoreVector& text, const ScoreVector& image);

/// -ln(max(probs[code], 1e-12)).
double cross_entropy(std::span<const double> probs, int true_code);

struct FusionSample {
  ScoreVector text{};
  ScoreVector image{};
  int code = 0;
};

/// Runs both encoders on every post (in parallel). Posts must be labeled.
std::vector<FusionSample> encode_samples(const Dataset& d, const EncoderPair& encoders);

double mean_loss(const FusionHead& head, std::span<const FusionSample> batch);

struct HeadGradient {
  std::array<double, kNumClasses * kFusionInputs> weights{};
  std::array<double, kNumClasses> bias{};
};

/// Analytic gradient of mean_loss: per sample (p - onehot) x [text; image; 1], zeroed
/// where a logit is clipped or the true-class probability is floored.
HeadGradient loss_gradient(const FusionHead& head, std::span<const FusionSample> batch);

/// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-6),
/// numeric being central differences with step h.
double gradient_check(const FusionHead& head, std::span<const FusionSample> batch, double h = 1e-5);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t max_epochs = 200;
  std::size_t batch_size = 32;
  std::size_t patience = 10;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Mini-batch gradient descent from `init`. After every epoch the validation loss is
/// measured; the parameters with the lowest value (the initial ones included) are
/// returned, and training stops after `patience` epochs without improvement.
FusionHead train_fusion(std::span<const FusionSample> train, std::span<const FusionSample> val,
                        const TrainConfig& cfg, const FusionHead& init = FusionHead::averaging());
FusionHead train_fusion(const Dataset& train, const Dataset& val, const EncoderPair& encoders,
                        const TrainConfig& cfg);

struct Prediction {
  Label label = Label::ProED;
  std::array<double, kNumClasses> probs{};
};

/// Index of the largest component; ties go to the lowest index.
std::size_t argmax(std::span<const double> values) noexcept;

Prediction predict(const ScoreVector& text, const ScoreVector& image, const FusionHead& head);
/// Throws MissingModalityError when the post lacks text or an image.
Prediction predict(const Post& post, const EncoderPair& encoders, const FusionHead& head);

}  // namespace curafuse
