// Command-line front end wiring the pipeline stages together:
// prepare -> augment -> train -> eval -> predict.
//
// Exit codes: 0 success, 1 input/configuration error, 2 numerical divergence.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "leukonet/leukonet.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void emit_run_config(const ordered_json& config, const fs::path& out_dir) {
  std::cout << "config=" << config.dump() << "\n";
  if (out_dir.empty()) return;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream out(out_dir / "run-config.json", std::ios::trunc);
  if (!out) throw leukonet::IoFailure("cannot write run-config.json in " + out_dir.string());
  out << config.dump(2) << "\n";
}

template <typename F>
auto with_precision(const std::string& precision, F&& f) {
  if (precision == "single") return f(float{});
  if (precision == "double") return f(double{});
  throw std::invalid_argument("precision must be 'single' or 'double'");
}

// ---------------------------------------------------------------- prepare

struct PrepareOptions {
  std::string in, out;
  int size = 256;
  bool no_median = false, no_sharpen = false;
  int threads = 1;
};

void run_prepare(const PrepareOptions& opt) {
  leukonet::set_num_threads(opt.threads);
  emit_run_config({{"command", "prepare"},
                   {"in", opt.in},
                   {"out", opt.out},
                   {"size", opt.size},
                   {"median", !opt.no_median},
                   {"sharpen", !opt.no_sharpen},
                   {"threads", opt.threads}},
                  opt.out);

  auto records = leukonet::scan_dataset(opt.in);
  auto [kept, removed] = leukonet::dedup(records);

  fs::create_directories(fs::path(opt.out) / leukonet::kClassDirs[0]);
  fs::create_directories(fs::path(opt.out) / leukonet::kClassDirs[1]);

  std::set<std::string> out_names;
  std::vector<std::string> out_paths(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const fs::path rel(kept[i].path);
    out_paths[i] = (rel.parent_path() / (rel.stem().string() + ".png")).generic_string();
    if (!out_names.insert(out_paths[i]).second)
      throw leukonet::IoFailure("output name collision for " + kept[i].path);
  }

  leukonet::PreprocessConfig cfg;
  cfg.target_size = opt.size;
  cfg.apply_median = !opt.no_median;
  cfg.apply_sharpen = !opt.no_sharpen;

  std::string failure;
  std::mutex failure_mutex;
  leukonet::parallel_for(kept.size(), [&](std::size_t begin, std::size_t end) {
    try {
      for (std::size_t i = begin; i < end; ++i) {
        const leukonet::ImageU8 img = leukonet::load_image(fs::path(opt.in) / kept[i].path);
        leukonet::save_image(leukonet::prepare_image(img, cfg), fs::path(opt.out) / out_paths[i]);
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (failure.empty()) failure = e.what();
    }
  });
  if (!failure.empty()) throw leukonet::IoFailure(failure);

  std::cout << "kept=" << kept.size() << " removed=" << removed.size() << "\n";
}

// ---------------------------------------------------------------- augment

struct AugmentOptions {
  std::string in, out;
  std::uint64_t seed = 0;
  std::string target_per_class;  // "N" or "CANCER,NORMAL"
  int per_image = 0;
  double shift_max = 0.10, zoom_lo = 0.90, zoom_hi = 1.10, shear_max = 0.20;
  int threads = 1;
};

void run_augment(const AugmentOptions& opt) {
  leukonet::set_num_threads(opt.threads);
  emit_run_config({{"command", "augment"},
                   {"in", opt.in},
                   {"out", opt.out},
                   {"seed", opt.seed},
                   {"target_per_class", opt.target_per_class},
                   {"per_image", opt.per_image},
                   {"shift_max", opt.shift_max},
                   {"zoom", {opt.zoom_lo, opt.zoom_hi}},
                   {"shear_max", opt.shear_max},
                   {"threads", opt.threads}},
                  opt.out);

  auto sources = leukonet::scan_dataset(opt.in);

  leukonet::AugmentPlan plan;
  plan.seed = opt.seed;
  plan.per_image = opt.per_image;
  plan.ranges.shift_max = opt.shift_max;
  plan.ranges.zoom_lo = opt.zoom_lo;
  plan.ranges.zoom_hi = opt.zoom_hi;
  plan.ranges.shear_max = opt.shear_max;

  std::vector<leukonet::DatasetRecord> emitted;
  if (!opt.target_per_class.empty()) {
    std::array<std::size_t, 2> targets{};  // [normal, cancer]
    const auto comma = opt.target_per_class.find(',');
    try {
      if (comma == std::string::npos) {
        targets[0] = targets[1] = std::stoull(opt.target_per_class);
      } else {
        targets[1] = std::stoull(opt.target_per_class.substr(0, comma));  // cancer first
        targets[0] = std::stoull(opt.target_per_class.substr(comma + 1));
      }
    } catch (const std::exception&) {
      throw std::invalid_argument("--target-per-class expects N or CANCER,NORMAL counts");
    }
    emitted = leukonet::generate_to_targets(plan, sources, targets, opt.in, opt.out);
  } else {
    emitted = leukonet::generate(plan, sources, opt.in, opt.out);
  }

  std::size_t cancer = 0, normal = 0;
  for (const auto& r : emitted) (r.label == 1 ? cancer : normal)++;

  std::ofstream plan_out(fs::path(opt.out) / "augment-plan.json", std::ios::trunc);
  if (!plan_out) throw leukonet::IoFailure("cannot write augment-plan.json");
  plan_out << leukonet::augment_plan_json(plan, normal, cancer).dump(2) << "\n";

  std::cout << "emitted_cancer=" << cancer << " emitted_normal=" << normal << "\n";
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string arch = "thanh_net";
  std::string data, out;
  std::string ratios = "0.6,0.2,0.2";
  int epochs = -1;  // -1: per-architecture default
  int batch = 128;
  double lr = 1e-3;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
  std::string precision = "single";
  bool no_stratify = false;
  bool snapshot_per_epoch = false;
  int threads = 1;
};

leukonet::SplitRatios parse_ratios(const std::string& s) {
  leukonet::SplitRatios r;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &r.train, &r.val, &r.test) != 3)
    throw std::invalid_argument("--ratios expects TRAIN,VAL,TEST");
  return r;
}

int default_epochs(const std::string& arch) {
  if (arch == "basic_cnn") return 17;
  if (arch == "alexnet_sigmoid") return 12;
  return 10;  // thanh_net
}

void run_train(const TrainOptions& opt) {
  leukonet::set_num_threads(opt.threads);
  const int epochs = opt.epochs > 0 ? opt.epochs : default_epochs(opt.arch);
  emit_run_config({{"command", "train"},
                   {"arch", opt.arch},
                   {"data", opt.data},
                   {"out", opt.out},
                   {"ratios", opt.ratios},
                   {"epochs", epochs},
                   {"batch", opt.batch},
                   {"lr", opt.lr},
                   {"optimizer", opt.optimizer},
                   {"seed", opt.seed},
                   {"precision", opt.precision},
                   {"stratify", !opt.no_stratify},
                   {"snapshot_per_epoch", opt.snapshot_per_epoch},
                   {"threads", opt.threads}},
                  opt.out);

  auto records = leukonet::scan_dataset(opt.data);
  records = leukonet::split_dataset(std::move(records), parse_ratios(opt.ratios), opt.seed,
                                    !opt.no_stratify);
  const auto sizes = leukonet::split_sizes(records);
  std::cout << "split=" << sizes[0] << "/" << sizes[1] << "/" << sizes[2] << "\n";
  leukonet::save_manifest(records, fs::path(opt.out) / "dataset-manifest.json");

  leukonet::TrainConfig config;
  config.arch = opt.arch;
  config.epochs = epochs;
  config.batch_size = opt.batch;
  config.learning_rate = opt.lr;
  config.optimizer = leukonet::optimizer_kind_from_name(opt.optimizer);
  config.seed = opt.seed;

  with_precision(opt.precision, [&](auto tag) {
    using T = decltype(tag);
    auto model = leukonet::build_by_name<T>(opt.arch, opt.seed);
    std::vector<leukonet::EpochRecord> so_far;
    const auto history = leukonet::fit(
        config, records, model, opt.data, nullptr,
        [&](const leukonet::EpochRecord& r) {
          std::cout << "epoch=" << r.epoch << " train_loss=" << r.train_loss
                    << " train_acc=" << r.train_accuracy << " val_loss=" << r.val_loss
                    << " val_acc=" << r.val_accuracy << "\n"
                    << std::flush;
          so_far.push_back(r);
          if (opt.snapshot_per_epoch) {
            char sub[32];
            std::snprintf(sub, sizeof(sub), "epoch_%03d", r.epoch);
            leukonet::save_checkpoint(model, so_far, fs::path(opt.out) / sub);
          }
        });

    leukonet::save_checkpoint(model, history, opt.out);
    leukonet::save_history(history, fs::path(opt.out) / "history.csv");
    std::cout << "train_acc=" << history.back().train_accuracy
              << " val_acc=" << history.back().val_accuracy << "\n";
  });
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string model, data;
  std::string split = "test";
  std::string report = "report.json";
  std::string curves;
  double threshold = 0.5;
  int threads = 1;
};

void run_eval(const EvalOptions& opt) {
  leukonet::set_num_threads(opt.threads);
  const fs::path report_path(opt.report);
  emit_run_config({{"command", "eval"},
                   {"model", opt.model},
                   {"data", opt.data},
                   {"split", opt.split},
                   {"report", opt.report},
                   {"curves", opt.curves},
                   {"threshold", opt.threshold},
                   {"threads", opt.threads}},
                  report_path.parent_path().empty() ? fs::path(".")
                                                    : report_path.parent_path());

  const auto records = leukonet::load_manifest(fs::path(opt.model) / "dataset-manifest.json");
  const leukonet::Split split = leukonet::split_from_name(opt.split);

  const std::string precision = leukonet::checkpoint_precision(opt.model);
  with_precision(precision, [&](auto tag) {
    using T = decltype(tag);
    auto [model, history] = leukonet::load_checkpoint<T>(opt.model);
    leukonet::ImageCache<T> cache(opt.data, static_cast<int>(model.input_size()));
    const auto ev = leukonet::evaluate_split(model, records, split, cache, 128, opt.threshold);

    const auto matrix = leukonet::confusion(ev.labels, ev.predictions);
    const auto rep = leukonet::report(matrix);
    std::cout << leukonet::format_confusion(matrix) << leukonet::format_report_table(rep);
    std::cout << "accuracy=" << rep.accuracy << " loss=" << ev.loss << "\n";

    leukonet::export_report(rep, report_path);
    if (!opt.curves.empty()) leukonet::export_curves(history, opt.curves);
  });
}

// ---------------------------------------------------------------- predict

struct PredictOptions {
  std::string model, image;
  double threshold = 0.5;
  bool no_median = false, no_sharpen = false;
  int threads = 1;
};

void run_predict(const PredictOptions& opt) {
  leukonet::set_num_threads(opt.threads);
  emit_run_config({{"command", "predict"},
                   {"model", opt.model},
                   {"image", opt.image},
                   {"threshold", opt.threshold},
                   {"median", !opt.no_median},
                   {"sharpen", !opt.no_sharpen},
                   {"threads", opt.threads}},
                  {});

  const auto t0 = std::chrono::steady_clock::now();
  const std::string precision = leukonet::checkpoint_precision(opt.model);
  with_precision(precision, [&](auto tag) {
    using T = decltype(tag);
    auto [model, history] = leukonet::load_checkpoint<T>(opt.model);

    leukonet::PreprocessConfig cfg;
    cfg.apply_median = !opt.no_median;
    cfg.apply_sharpen = !opt.no_sharpen;
    cfg.model_input_size = static_cast<int>(model.input_size());

    leukonet::ImageU8 img = leukonet::prepare_image(leukonet::load_image(opt.image), cfg);
    img = leukonet::resize_nearest(img, cfg.model_input_size, cfg.model_input_size);
    const auto probs = model.forward(leukonet::to_tensor<T>(img));

    const int label = model.predict_labels(probs, opt.threshold)[0];
    const double p_cancer = model.head() == leukonet::HeadKind::sigmoid_1
                                ? static_cast<double>(probs[0])
                                : static_cast<double>(probs[1]);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    char line[96];
    std::snprintf(line, sizeof(line), "label=%s p=%.6f ms=%.3f\n",
                  label == 1 ? "cancer" : "normal", p_cancer, ms);
    std::cout << line;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blood-smear leukemia classification pipeline"};
  app.require_subcommand(1);

  PrepareOptions prep;
  auto* prepare = app.add_subcommand("prepare", "dedup, resize, and filter a raw corpus");
  prepare->add_option("--in", prep.in, "input corpus root (cancer/ + normal/)")->required();
  prepare->add_option("--out", prep.out, "output corpus root")->required();
  prepare->add_option("--size", prep.size, "square resize edge")->default_val(256);
  prepare->add_flag("--no-median", prep.no_median, "skip the 3x3 median filter");
  prepare->add_flag("--no-sharpen", prep.no_sharpen, "skip the 3x3 sharpen filter");
  prepare->add_option("--threads", prep.threads, "worker threads")->default_val(1);
  prepare->callback([&] { run_prepare(prep); });

  AugmentOptions aug;
  auto* augment = app.add_subcommand("augment", "expand a prepared corpus");
  augment->add_option("--in", aug.in, "prepared corpus root")->required();
  augment->add_option("--out", aug.out, "augmented corpus root")->required();
  augment->add_option("--seed", aug.seed, "augmentation seed")->default_val(0);
  augment->add_option("--target-per-class", aug.target_per_class,
                      "total images per class: N for both, or CANCER,NORMAL");
  augment->add_option("--per-image", aug.per_image, "uniform variants per source image")
      ->default_val(0);
  augment->add_option("--shift-max", aug.shift_max, "max |shift| fraction")->default_val(0.10);
  augment->add_option("--zoom-lo", aug.zoom_lo, "zoom range lower bound")->default_val(0.90);
  augment->add_option("--zoom-hi", aug.zoom_hi, "zoom range upper bound")->default_val(1.10);
  augment->add_option("--shear-max", aug.shear_max, "max |shear| factor")->default_val(0.20);
  augment->add_option("--threads", aug.threads, "worker threads")->default_val(1);
  augment->callback([&] { run_augment(aug); });

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "split a corpus and train one architecture");
  train->add_option("--arch", tr.arch, "basic_cnn | alexnet_sigmoid | thanh_net")
      ->check(CLI::IsMember({"basic_cnn", "alexnet_sigmoid", "thanh_net"}))
      ->default_val("thanh_net");
  train->add_option("--data", tr.data, "corpus root")->required();
  train->add_option("--out", tr.out, "checkpoint directory")->required();
  train->add_option("--ratios", tr.ratios, "train,val,test ratios")->default_val("0.6,0.2,0.2");
  train->add_option("--epochs", tr.epochs, "epochs (default: 17/12/10 by architecture)");
  train->add_option("--batch", tr.batch, "mini-batch size")->default_val(128);
  train->add_option("--lr", tr.lr, "learning rate")->default_val(1e-3);
  train->add_option("--optimizer", tr.optimizer, "adam | sgd")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->default_val("adam");
  train->add_option("--seed", tr.seed, "split/init/shuffle seed")->default_val(0);
  train->add_option("--precision", tr.precision, "single | double")
      ->check(CLI::IsMember({"single", "double"}))
      ->default_val("single");
  train->add_flag("--no-stratify", tr.no_stratify, "split globally instead of per class");
  train->add_flag("--snapshot-per-epoch", tr.snapshot_per_epoch,
                  "also save a checkpoint after every epoch");
  train->add_option("--threads", tr.threads, "worker threads")->default_val(1);
  train->callback([&] { run_train(tr); });

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a stored split");
  eval->add_option("--model", ev.model, "checkpoint directory")->required();
  eval->add_option("--data", ev.data, "corpus root the manifest paths refer to")->required();
  eval->add_option("--split", ev.split, "train | val | test")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->default_val("test");
  eval->add_option("--report", ev.report, "report JSON path")->default_val("report.json");
  eval->add_option("--curves", ev.curves, "also export accuracy/loss curves CSV");
  eval->add_option("--threshold", ev.threshold, "sigmoid decision threshold")->default_val(0.5);
  eval->add_option("--threads", ev.threads, "worker threads")->default_val(1);
  eval->callback([&] { run_eval(ev); });

  PredictOptions pr;
  auto* predict = app.add_subcommand("predict", "classify a single image");
  predict->add_option("--model", pr.model, "checkpoint directory")->required();
  predict->add_option("--image", pr.image, "image to classify")->required();
  predict->add_option("--threshold", pr.threshold, "sigmoid decision threshold")
      ->default_val(0.5);
  predict->add_flag("--no-median", pr.no_median, "skip the 3x3 median filter");
  predict->add_flag("--no-sharpen", pr.no_sharpen, "skip the 3x3 sharpen filter");
  predict->add_option("--threads", pr.threads, "worker threads")->default_val(1);
  predict->callback([&] { run_predict(pr); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const leukonet::Diverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
