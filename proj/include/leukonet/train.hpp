#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "leukonet/dataset.hpp"
#include "leukonet/errors.hpp"
#include "leukonet/history.hpp"
#include "leukonet/image_codec.hpp"
#include "leukonet/model.hpp"
#include "leukonet/optimizer.hpp"
#include "leukonet/preprocess.hpp"
#include "leukonet/rng.hpp"

namespace leukonet {

struct TrainConfig {
  std::string arch = "thanh_net";
  int epochs = 10;
  int batch_size = 128;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
  }
};

/// Lazily decodes and resizes images to the model input size, cached by
/// relative path. The prepared corpus (a few thousand small rasters) fits
/// comfortably in memory.
template <typename T>
class ImageCache {
 public:
  ImageCache(std::filesystem::path root, int input_size)
      : root_(std::move(root)), input_size_(input_size) {}

  const Tensor<T>& get(const std::string& rel_path) {
    auto it = cache_.find(rel_path);
    if (it != cache_.end()) return it->second;
    ImageU8 img = load_image(root_ / rel_path);
    if (img.width != input_size_ || img.height != input_size_)
      img = resize_nearest(img, input_size_, input_size_);
    auto [pos, _] = cache_.emplace(rel_path, to_tensor<T>(img));
    return pos->second;
  }

 private:
  std::filesystem::path root_;
  int input_size_;
  std::unordered_map<std::string, Tensor<T>> cache_;
};

namespace detail {

template <typename T>
Tensor<T> assemble_batch(ImageCache<T>& cache, const std::vector<DatasetRecord>& records,
                         const std::vector<std::size_t>& indices, std::size_t begin,
                         std::size_t end, std::size_t channels, std::size_t side) {
  Tensor<T> x({end - begin, channels, side, side});
  const std::size_t sample = channels * side * side;
  for (std::size_t i = begin; i < end; ++i) {
    const Tensor<T>& t = cache.get(records[indices[i]].path);
    std::copy(t.ptr(), t.ptr() + sample, x.ptr() + (i - begin) * sample);
  }
  return x;
}

inline std::vector<std::size_t> indices_of_split(const std::vector<DatasetRecord>& records,
                                                 Split split) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == split) idx.push_back(i);
  return idx;
}

}  // namespace detail

template <typename T>
struct SplitEvaluation {
  double loss = 0;
  double accuracy = 0;
  std::vector<int> labels;       // ground truth, in manifest order
  std::vector<int> predictions;  // model decisions, same order
};

/// Full pass over one split: mean loss and accuracy plus the label/
/// prediction vectors for downstream metrics.
template <typename T>
SplitEvaluation<T> evaluate_split(const ModelGraph<T>& model,
                                  const std::vector<DatasetRecord>& records, Split split,
                                  ImageCache<T>& cache, std::size_t batch_size = 128,
                                  double threshold = 0.5) {
  const auto idx = detail::indices_of_split(records, split);
  if (idx.empty())
    throw EmptyInput(std::string("split has no records: ") + split_name(split));

  SplitEvaluation<T> ev;
  const std::size_t side = model.input_size();
  double loss_sum = 0;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < idx.size(); begin += batch_size) {
    const std::size_t end = std::min(idx.size(), begin + batch_size);
    const Tensor<T> x = detail::assemble_batch(cache, records, idx, begin, end,
                                               model.in_channels(), side);
    std::vector<int> targets;
    targets.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) targets.push_back(records[idx[i]].label);

    const Tensor<T> probs = model.forward(x);
    loss_sum += static_cast<double>(model.loss(probs, targets).value) *
                static_cast<double>(end - begin);
    const std::vector<int> preds = model.predict_labels(probs, threshold);
    for (std::size_t k = 0; k < preds.size(); ++k) {
      if (preds[k] == targets[k]) ++correct;
      ev.labels.push_back(targets[k]);
      ev.predictions.push_back(preds[k]);
    }
  }
  ev.loss = loss_sum / static_cast<double>(idx.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
  if (!std::isfinite(ev.loss)) throw Diverged("non-finite loss during evaluation");
  return ev;
}

/// Trains in place: per epoch, a seeded shuffle of the train split, then
/// forward/backward/step per batch (the final short batch included), then
/// full-pass train and val metrics. NaN or Inf loss aborts with Diverged.
/// Single-threaded runs are bitwise reproducible for a fixed seed.
using EpochCallback = std::function<void(const EpochRecord&)>;

template <typename T>
std::vector<EpochRecord> fit(const TrainConfig& config,
                             const std::vector<DatasetRecord>& manifest,
                             ModelGraph<T>& model,
                             const std::filesystem::path& data_root,
                             std::type_identity_t<ImageCache<T>*> shared_cache = nullptr,
                             const EpochCallback& on_epoch = {}) {
  config.validate();
  auto train_idx = detail::indices_of_split(manifest, Split::train);
  if (train_idx.empty()) throw EmptyInput("manifest has no train records");
  if (detail::indices_of_split(manifest, Split::val).empty())
    throw EmptyInput("manifest has no val records");

  ImageCache<T> local_cache(data_root, static_cast<int>(model.input_size()));
  ImageCache<T>& cache = shared_cache ? *shared_cache : local_cache;

  OptimizerState<T> opt;
  opt.kind = config.optimizer;
  opt.learning_rate = static_cast<T>(config.learning_rate);

  const std::size_t side = model.input_size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<EpochRecord> history;
  history.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    CounterRng shuffle_rng(config.seed, 0xe60cu, static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(train_idx.begin(), train_idx.end());

    Workspace<T> ws;
    for (std::size_t begin = 0; begin < train_idx.size(); begin += batch) {
      const std::size_t end = std::min(train_idx.size(), begin + batch);
      const Tensor<T> x = detail::assemble_batch(cache, manifest, train_idx, begin, end,
                                                 model.in_channels(), side);
      std::vector<int> targets;
      targets.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) targets.push_back(manifest[train_idx[i]].label);

      model.zero_grads();
      const Tensor<T> probs = model.forward(x, ws);
      const LossResult<T> l = model.loss(probs, targets);
      if (!std::isfinite(static_cast<double>(l.value)))
        throw Diverged("loss became non-finite in epoch " + std::to_string(epoch));
      model.backward(l.grad, ws);
      opt.step(model.params());
    }

    const auto train_ev = evaluate_split(model, manifest, Split::train, cache, batch);
    const auto val_ev = evaluate_split(model, manifest, Split::val, cache, batch);
    history.push_back(EpochRecord{epoch, train_ev.loss, train_ev.accuracy, val_ev.loss,
                                  val_ev.accuracy});
    if (on_epoch) on_epoch(history.back());
  }
  return history;
}

}  // namespace leukonet
