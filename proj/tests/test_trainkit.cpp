#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "leukonet/checkpoint.hpp"
#include "leukonet/split.hpp"
#include "leukonet/train.hpp"
#include "testutil.hpp"

using namespace leukonet;
using testutil::TempDir;

namespace {

std::vector<DatasetRecord> synthetic_records(std::size_t cancer, std::size_t normal) {
  std::vector<DatasetRecord> records;
  for (std::size_t i = 0; i < cancer + normal; ++i) {
    DatasetRecord r;
    r.label = i < cancer ? 1 : 0;
    r.path = std::string(i < cancer ? "cancer/" : "normal/") + "img" + std::to_string(i) + ".png";
    r.content_hash = std::to_string(i);
    records.push_back(std::move(r));
  }
  return records;
}

ModelGraph<float> micro_sigmoid_net(std::uint64_t seed, std::size_t side = 8) {
  std::vector<LayerSpec> layers{LayerSpec::flatten(), LayerSpec::dense(8), LayerSpec::relu(),
                                LayerSpec::dense(1), LayerSpec::sigmoid()};
  return ModelGraph<float>("micro_sigmoid", side, HeadKind::sigmoid_1, std::move(layers), seed);
}

}  // namespace

// ------------------------------------------------------------------ split

TEST_CASE("3030 records split 60/20/20 into exactly 1818/606/606", "[trainkit]") {
  const auto records = synthetic_records(1550, 1480);
  for (const bool stratify : {true, false}) {
    const auto split = split_dataset(records, {0.6, 0.2, 0.2}, 17, stratify);
    const auto sizes = split_sizes(split);
    CHECK(sizes[0] == 1818);
    CHECK(sizes[1] == 606);
    CHECK(sizes[2] == 606);
  }
}

TEST_CASE("five records floor to 3/1/1", "[trainkit]") {
  const auto records = synthetic_records(3, 2);
  const auto split = split_dataset(records, {0.6, 0.2, 0.2}, 1, false);
  const auto sizes = split_sizes(split);
  CHECK(sizes[0] == 3);
  CHECK(sizes[1] == 1);
  CHECK(sizes[2] == 1);
}

TEST_CASE("ratios that do not sum to one are rejected", "[trainkit]") {
  const auto records = synthetic_records(2, 2);
  CHECK_THROWS_AS(split_dataset(records, {0.6, 0.2, 0.1}, 1, true), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset(records, {0.8, 0.2, 0.0}, 1, true), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset({}, {0.6, 0.2, 0.2}, 1, true), EmptyClass);
}

TEST_CASE("splits partition the records and respect class proportions", "[trainkit]") {
  CounterRng rng(55);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t c = 3 + rng.below(160);
    const std::size_t n = 3 + rng.below(160);
    const auto records = synthetic_records(c, n);
    const auto split = split_dataset(records, {0.6, 0.2, 0.2}, rng.next_u64(), true);

    REQUIRE(split.size() == records.size());
    std::array<std::array<std::size_t, 3>, 2> per_class{};  // [label][split]
    for (const auto& r : split) {
      REQUIRE(r.split != Split::unassigned);
      std::size_t si = r.split == Split::train ? 0 : r.split == Split::val ? 1 : 2;
      ++per_class[static_cast<std::size_t>(r.label)][si];
    }
    for (std::size_t label = 0; label < 2; ++label) {
      const double total = static_cast<double>(label == 1 ? c : n);
      CHECK(std::abs(static_cast<double>(per_class[label][1]) - 0.2 * total) <= 1.0);
      CHECK(std::abs(static_cast<double>(per_class[label][2]) - 0.2 * total) <= 1.0);
      CHECK(per_class[label][0] + per_class[label][1] + per_class[label][2] ==
            static_cast<std::size_t>(total));
    }
  }
}

TEST_CASE("split assignment is deterministic in the seed", "[trainkit]") {
  const auto records = synthetic_records(40, 40);
  const auto a = split_dataset(records, {0.6, 0.2, 0.2}, 9, true);
  const auto b = split_dataset(records, {0.6, 0.2, 0.2}, 9, true);
  const auto c = split_dataset(records, {0.6, 0.2, 0.2}, 10, true);
  CHECK(a == b);
  CHECK(a != c);
}

// ------------------------------------------------------------------ fit

TEST_CASE("one epoch on a one-sample train split yields one finite record", "[trainkit]") {
  TempDir data("fit1");
  testutil::write_separable_corpus(data.path(), 1, 8, 60);
  auto records = scan_dataset(data.path());
  REQUIRE(records.size() == 2);
  records[0].split = Split::train;
  records[1].split = Split::val;

  auto model = micro_sigmoid_net(1);
  TrainConfig config;
  config.epochs = 1;
  config.batch_size = 4;
  const auto history = fit(config, records, model, data.path());
  REQUIRE(history.size() == 1);
  CHECK(history[0].epoch == 1);
  CHECK(std::isfinite(history[0].train_loss));
  CHECK(history[0].train_loss >= 0.0);
  CHECK(history[0].train_accuracy >= 0.0);
  CHECK(history[0].train_accuracy <= 1.0);
}

TEST_CASE("fit requires nonempty train and val splits", "[trainkit]") {
  TempDir data("fit2");
  testutil::write_separable_corpus(data.path(), 1, 8, 61);
  auto records = scan_dataset(data.path());
  records[0].split = Split::train;
  records[1].split = Split::test;  // no val

  auto model = micro_sigmoid_net(2);
  TrainConfig config;
  config.epochs = 1;
  CHECK_THROWS_AS(fit(config, records, model, data.path()), EmptyInput);
}

TEST_CASE("identical seed and config reproduce the training trajectory", "[trainkit]") {
  TempDir data("fitdet");
  testutil::write_separable_corpus(data.path(), 6, 8, 62);
  auto records = scan_dataset(data.path());
  records = split_dataset(std::move(records), {0.6, 0.2, 0.2}, 3, true);

  TrainConfig config;
  config.epochs = 3;
  config.batch_size = 4;
  config.seed = 11;

  auto model_a = micro_sigmoid_net(11);
  const auto hist_a = fit(config, records, model_a, data.path());
  auto model_b = micro_sigmoid_net(11);
  const auto hist_b = fit(config, records, model_b, data.path());

  CHECK(hist_a == hist_b);
  for (std::size_t i = 0; i < model_a.params().size(); ++i)
    CHECK(model_a.params()[i].value.data == model_b.params()[i].value.data);
}

TEST_CASE("a separable micro problem is memorized quickly", "[trainkit]") {
  TempDir data("fitsep");
  testutil::write_separable_corpus(data.path(), 6, 8, 63);
  auto records = scan_dataset(data.path());
  records = split_dataset(std::move(records), {0.6, 0.2, 0.2}, 5, true);

  auto model = micro_sigmoid_net(4);
  TrainConfig config;
  config.epochs = 60;
  config.batch_size = 4;
  config.learning_rate = 2e-3;
  const auto history = fit(config, records, model, data.path());
  CHECK(history.back().train_accuracy == 1.0);
}

TEST_CASE("a non-finite loss aborts with Diverged", "[trainkit]") {
  TempDir data("fitdiv");
  testutil::write_separable_corpus(data.path(), 5, 8, 64);
  auto records = scan_dataset(data.path());
  records = split_dataset(std::move(records), {0.6, 0.2, 0.2}, 6, true);

  auto model = micro_sigmoid_net(5);
  model.params()[0].value[0] = std::numeric_limits<float>::quiet_NaN();
  TrainConfig config;
  config.epochs = 2;
  config.batch_size = 8;
  CHECK_THROWS_AS(fit(config, records, model, data.path()), Diverged);
}

// ------------------------------------------------------------------ history csv

TEST_CASE("history csv carries the documented header and one row per epoch", "[trainkit]") {
  std::vector<EpochRecord> records{{1, 0.5, 0.75, 0.6, 0.7}, {2, 0.25, 0.875, 0.5, 0.8}};
  const std::string csv = history_csv(records);
  CHECK(csv.rfind("epoch,train_loss,train_acc,val_loss,val_acc\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("\n1,0.5,0.75,0.6,0.7\n") != std::string::npos);
}

// ------------------------------------------------------------------ checkpoints

TEST_CASE("checkpoint round trip is bitwise on parameters and records", "[trainkit]") {
  TempDir dir("ckpt");
  auto model = micro_sigmoid_net(21);
  // dirty the parameters so we are not just reloading the init
  for (auto& p : model.params())
    for (auto& v : p.value.data) v += 0.125f;
  const std::vector<EpochRecord> records{{1, 0.31, 0.5, 0.42, 0.5},
                                         {2, 0.11223344556677, 1.0, 0.2, 1.0}};
  save_checkpoint(model, records, dir.path());

  CHECK(checkpoint_precision(dir.path()) == "single");
  auto [loaded, loaded_records] = load_checkpoint<float>(dir.path());
  CHECK(loaded.name() == model.name());
  CHECK(loaded_records == records);
  REQUIRE(loaded.params().size() == model.params().size());
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    CHECK(loaded.params()[i].name == model.params()[i].name);
    CHECK(loaded.params()[i].value.data == model.params()[i].value.data);
  }

  Tensor<float> x({2, 3, 8, 8});
  CounterRng rng(77);
  for (auto& v : x.data) v = static_cast<float>(rng.next_double());
  CHECK(model.forward(x).data == loaded.forward(x).data);
}

TEST_CASE("double-precision checkpoints round trip too", "[trainkit]") {
  TempDir dir("ckptd");
  std::vector<LayerSpec> layers{LayerSpec::flatten(), LayerSpec::dense(1), LayerSpec::sigmoid()};
  ModelGraph<double> model("micro_d", 2, HeadKind::sigmoid_1, std::move(layers), 3, 1);
  save_checkpoint(model, {}, dir.path());
  CHECK(checkpoint_precision(dir.path()) == "double");
  auto [loaded, records] = load_checkpoint<double>(dir.path());
  CHECK(records.empty());
  CHECK(loaded.params()[0].value.data == model.params()[0].value.data);

  // asking for the wrong scalar type must not silently reinterpret blobs
  CHECK_THROWS_AS(load_checkpoint<float>(dir.path()), ManifestCorrupt);
}

TEST_CASE("truncated blobs are rejected as ManifestCorrupt", "[trainkit]") {
  TempDir dir("ckpttr");
  auto model = micro_sigmoid_net(22);
  save_checkpoint(model, {}, dir.path());

  const auto blob = dir.path() / "dense1.weight.bin";
  const auto size = std::filesystem::file_size(blob);
  std::filesystem::resize_file(blob, size - 4);
  CHECK_THROWS_AS(load_checkpoint<float>(dir.path()), ManifestCorrupt);
}

TEST_CASE("future manifest versions are rejected as VersionMismatch", "[trainkit]") {
  TempDir dir("ckptv");
  auto model = micro_sigmoid_net(23);
  save_checkpoint(model, {}, dir.path());

  const auto manifest_path = dir.path() / "manifest.json";
  nlohmann::json manifest;
  {
    std::ifstream in(manifest_path);
    in >> manifest;
  }
  manifest["format_version"] = kCheckpointFormatVersion + 1;
  {
    std::ofstream out(manifest_path, std::ios::trunc);
    out << manifest.dump(2);
  }
  CHECK_THROWS_AS(load_checkpoint<float>(dir.path()), VersionMismatch);
  CHECK_THROWS_AS(checkpoint_precision(dir.path()), VersionMismatch);
}

TEST_CASE("missing checkpoint directory raises IoFailure", "[trainkit]") {
  CHECK_THROWS_AS(load_checkpoint<float>("/nonexistent/ckpt"), IoFailure);
}

// ------------------------------------------------------------------ cache

TEST_CASE("the image cache resizes to the model input size", "[trainkit]") {
  TempDir data("cache");
  testutil::write_separable_corpus(data.path(), 1, 16, 65);
  ImageCache<float> cache(data.path(), 8);
  const auto& t = cache.get("normal/img_0000.png");
  CHECK(t.shape == std::vector<std::size_t>{1, 3, 8, 8});
  // second lookup returns the cached tensor
  CHECK(&cache.get("normal/img_0000.png") == &t);
}
