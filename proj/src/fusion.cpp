#include "curafuse/fusion.hpp"

#include "curafuse/io.hpp"
#include "curafuse/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace curafuse {

FusionHead FusionHead::averaging() {
  FusionHead h;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    h.w(c, c) = 0.5;
    h.w(c, kNumClasses + c) = 0.5;
  }
  return h;
}

std::string FusionHead::to_json() const {
  nlohmann::ordered_json j;
  j["rows"] = kNumClasses;
  j["cols"] = kFusionInputs;
  j["weights"] = weights;
  j["bias"] = bias;
  nlohmann::ordered_json meta;
  meta["epochs_run"] = epochs_run;
  meta["best_val_loss"] = std::isfinite(best_val_loss) ? nlohmann::ordered_json(best_val_loss) : nullptr;
  meta["text_encoder"] = text_encoder;
  meta["image_encoder"] = image_encoder;
  meta["encoder_seed"] = encoder_seed;
  j["meta"] = std::move(meta);
  return j.dump(2);
}

FusionHead FusionHead::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError("fusion head: invalid JSON");
  FusionHead h;
  try {
    const auto& w = j.at("weights");
    const auto& b = j.at("bias");
    if (!w.is_array() || w.size() != h.weights.size() || !b.is_array() || b.size() != h.bias.size())
      throw DataError("fusion head: weights must be 18 values and bias 3 values");
    for (std::size_t i = 0; i < h.weights.size(); ++i) h.weights[i] = w[i].get<double>();
    for (std::size_t i = 0; i < h.bias.size(); ++i) h.bias[i] = b[i].get<double>();
    if (auto m = j.find("meta"); m != j.end() && m->is_object()) {
      h.epochs_run = m->value("epochs_run", std::size_t{0});
      if (auto v = m->find("best_val_loss"); v != m->end() && v->is_number()) h.best_val_loss = v->get<double>();
      h.text_encoder = m->value("text_encoder", std::string{});
      h.image_encoder = m->value("image_encoder", std::string{});
      h.encoder_seed = m->value("encoder_seed", std::uint64_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("fusion head: ") + e.what());
  }
  for (double v : h.weights)
    if (!std::isfinite(v)) throw DataError("fusion head: non-finite weight");
  for (double v : h.bias)
    if (!std::isfinite(v)) throw DataError("fusion head: non-finite bias");
  return h;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  double mx = -kLogitClip;
  for (double z : logits) mx = std::max(mx, std::clamp(z, -kLogitClip, kLogitClip));
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(std::clamp(logits[i], -kLogitClip, kLogitClip) - mx);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

std::array<double, kNumClasses> softmax(const ScoreVector& logits) {
  const auto v = softmax(std::span<const double>(logits));
  return {v[0], v[1], v[2]};
}

ScoreVector fuse(const ScoreVector& text, const ScoreVector& image, const FusionHead& head) {
  ScoreVector out = head.bias;
  for (std::size_t r = 0; r < kNumClasses; ++r) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      out[r] += head.w(r, c) * text[c];
      out[r] += head.w(r, kNumClasses + c) * image[c];
    }
  }
  return out;
}

ScoreVector mean_fuse(const ScoreVector& text, const ScoreVector& image) {
  ScoreVector out;
  for (std::size_t c = 0; c < kNumClasses; ++c) out[c] = 0.5 * (text[c] + image[c]);
  return out;
}

double cross_entropy(std::span<const double> probs, int true_code) {
  if (true_code < 0 || static_cast<std::size_t>(true_code) >= probs.size())
    throw std::invalid_argument("cross_entropy: class code out of range");
  return -std::log(std::max(probs[static_cast<std::size_t>(true_code)], kProbFloor));
}

std::vector<FusionSample> encode_samples(const Dataset& d, const EncoderPair& encoders) {
  std::vector<FusionSample> out(d.posts.size());
  parallel_for(d.posts.size(), [&](std::size_t i) {
    const Post& p = d.posts[i];
    if (!p.label) throw std::invalid_argument("unlabeled post: " + p.id);
    out[i] = {encoders.text.encode(p), encoders.image.encode(p), encode_label(*p.label)};
  });
  return out;
}

double mean_loss(const FusionHead& head, std::span<const FusionSample> batch) {
  if (batch.empty()) throw std::invalid_argument("mean_loss: empty batch");
  double total = 0.0;
  for (const FusionSample& s : batch) total += cross_entropy(softmax(fuse(s.text, s.image, head)), s.code);
  return total / static_cast<double>(batch.size());
}

HeadGradient loss_gradient(const FusionHead& head, std::span<const FusionSample> batch) {
  if (batch.empty()) throw std::invalid_argument("loss_gradient: empty batch");
  HeadGradient g;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const FusionSample& s : batch) {
    const ScoreVector z = fuse(s.text, s.image, head);
    const auto p = softmax(z);
    if (p[static_cast<std::size_t>(s.code)] < kProbFloor) continue;  // loss is flat here
    std::array<double, kFusionInputs> x;
    std::copy(s.text.begin(), s.text.end(), x.begin());
    std::copy(s.image.begin(), s.image.end(), x.begin() + kNumClasses);
    for (std::size_t r = 0; r < kNumClasses; ++r) {
      if (std::abs(z[r]) > kLogitClip) continue;
      const double delta = (p[r] - (static_cast<int>(r) == s.code ? 1.0 : 0.0)) * inv_n;
      g.bias[r] += delta;
      for (std::size_t c = 0; c < kFusionInputs; ++c) g.weights[r * kFusionInputs + c] += delta * x[c];
    }
  }
  return g;
}

double gradient_check(const FusionHead& head, std::span<const FusionSample> batch, double h) {
  const HeadGradient analytic = loss_gradient(head, batch);
  FusionHead probe = head;
  double worst = 0.0;
  auto check = [&](double a, double& param) {
    const double saved = param;
    param = saved + h;
    const double up = mean_loss(probe, batch);
    param = saved - h;
    const double down = mean_loss(probe, batch);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}));
  };
  for (std::size_t i = 0; i < probe.weights.size(); ++i) check(analytic.weights[i], probe.weights[i]);
  for (std::size_t i = 0; i < probe.bias.size(); ++i) check(analytic.bias[i], probe.bias[i]);
  return worst;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate: must be a positive finite number");
  if (max_epochs == 0) throw ConfigError("max_epochs: must be positive");
  if (batch_size == 0) throw ConfigError("batch_size: must be positive");
  if (patience == 0) throw ConfigError("patience: must be positive");
}

FusionHead train_fusion(std::span<const FusionSample> train, std::span<const FusionSample> val,
                        const TrainConfig& cfg, const FusionHead& init) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("train_fusion: empty training set");
  if (val.empty()) throw std::invalid_argument("train_fusion: empty validation set");

  FusionHead current = init;
  FusionHead best = init;
  best.best_val_loss = mean_loss(init, val);
  best.epochs_run = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<FusionSample> batch;
  batch.reserve(cfg.batch_size);

  std::size_t stale = 0;
  std::size_t epoch = 0;
  while (epoch < cfg.max_epochs && stale < cfg.patience) {
    ++epoch;
    CounterRng rng(derive_seed(cfg.seed, {fnv1a64("epoch"), epoch}));
    seeded_shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      const HeadGradient g = loss_gradient(current, batch);
      for (std::size_t i = 0; i < current.weights.size(); ++i)
        current.weights[i] -= cfg.learning_rate * g.weights[i];
      for (std::size_t i = 0; i < current.bias.size(); ++i) current.bias[i] -= cfg.learning_rate * g.bias[i];
    }
    const double val_loss = mean_loss(current, val);
    if (val_loss < best.best_val_loss) {
      best = current;
      best.best_val_loss = val_loss;
      stale = 0;
    } else {
      ++stale;
    }
  }
  best.epochs_run = epoch;
  return best;
}

FusionHead train_fusion(const Dataset& train, const Dataset& val, const EncoderPair& encoders,
                        const TrainConfig& cfg) {
  const auto tr = encode_samples(train, encoders);
  const auto va = encode_samples(val, encoders);
  return train_fusion(tr, va, cfg);
}

std::size_t argmax(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

Prediction predict(const ScoreVector& text, const ScoreVector& image, const FusionHead& head) {
  Prediction p;
  p.probs = softmax(fuse(text, image, head));
  p.label = decode_label(static_cast<int>(argmax(p.probs)));
  return p;
}

Prediction predict(const Post& post, const EncoderPair& encoders, const FusionHead& head) {
  if (sanitize_text(post.text).empty()) throw MissingModalityError(Modality::Text);
  if (!post.image) throw MissingModalityError(Modality::Image);
  return predict(encoders.text.encode(post), encoders.image.encode(post), head);
}

}  // namespace curafuse
