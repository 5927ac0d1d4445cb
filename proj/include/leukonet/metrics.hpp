#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "leukonet/errors.hpp"
#include "leukonet/history.hpp"

namespace leukonet {

/// 2x2 true-vs-predicted counts. Class 0 is normal, class 1 cancer.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, 2>, 2> counts{};  // [true][pred]
  static constexpr std::array<const char*, 2> class_names{"normal", "cancer"};

  std::int64_t total() const {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
  }
  std::int64_t diagonal() const { return counts[0][0] + counts[1][1]; }
};

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::int64_t support = 0;
};

struct MetricsReport {
  ConfusionMatrix matrix;
  std::array<ClassMetrics, 2> per_class;
  double accuracy = 0;
};

inline ConfusionMatrix confusion(const std::vector<int>& truth,
                                 const std::vector<int>& predicted) {
  if (truth.size() != predicted.size())
    throw LengthMismatch("label vectors differ in length");
  if (truth.empty()) throw EmptyInput("no labels to tabulate");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((truth[i] != 0 && truth[i] != 1) || (predicted[i] != 0 && predicted[i] != 1))
      throw std::invalid_argument("labels must be 0 or 1");
    ++m.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return m;
}

namespace detail {

inline double safe_ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }

}  // namespace detail

/// Per class c: precision = TP/(TP+FP), recall = TP/(TP+FN),
/// f1 = 2PR/(P+R), support = row sum; accuracy = trace/total.
/// Degenerate 0/0 ratios are defined as 0.
inline MetricsReport report(const ConfusionMatrix& matrix) {
  if (matrix.total() == 0) throw EmptyInput("confusion matrix is empty");
  MetricsReport r;
  r.matrix = matrix;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto tp = static_cast<double>(matrix.counts[c][c]);
    const auto fp = static_cast<double>(matrix.counts[1 - c][c]);
    const auto fn = static_cast<double>(matrix.counts[c][1 - c]);
    ClassMetrics& m = r.per_class[c];
    m.precision = detail::safe_ratio(tp, tp + fp);
    m.recall = detail::safe_ratio(tp, tp + fn);
    m.f1 = detail::safe_ratio(2 * m.precision * m.recall, m.precision + m.recall);
    m.support = matrix.counts[c][0] + matrix.counts[c][1];
  }
  r.accuracy = static_cast<double>(matrix.diagonal()) / static_cast<double>(matrix.total());
  return r;
}

inline nlohmann::ordered_json report_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["matrix"] = {{r.matrix.counts[0][0], r.matrix.counts[0][1]},
                 {r.matrix.counts[1][0], r.matrix.counts[1][1]}};
  j["classes"] = {"normal", "cancer"};
  j["per_class"] = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < 2; ++c) {
    j["per_class"][ConfusionMatrix::class_names[c]] = {
        {"precision", r.per_class[c].precision},
        {"recall", r.per_class[c].recall},
        {"f1", r.per_class[c].f1},
        {"support", r.per_class[c].support}};
  }
  j["accuracy"] = r.accuracy;
  return j;
}

/// report.json; byte-stable for identical inputs.
inline void export_report(const MetricsReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot write report: " + path.string());
  out << report_json(r).dump(2) << "\n";
  if (!out) throw IoFailure("short write: " + path.string());
}

/// Accuracy/loss curves as CSV: epoch,train_acc,val_acc,train_loss,val_loss.
inline void export_curves(const std::vector<EpochRecord>& records,
                          const std::filesystem::path& path) {
  if (records.empty()) throw EmptyInput("no epoch records to export");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot write curves: " + path.string());
  out << "epoch,train_acc,val_acc,train_loss,val_loss\n";
  for (const auto& rec : records) {
    out << rec.epoch << "," << detail::format_double(rec.train_accuracy) << ","
        << detail::format_double(rec.val_accuracy) << ","
        << detail::format_double(rec.train_loss) << ","
        << detail::format_double(rec.val_loss) << "\n";
  }
  if (!out) throw IoFailure("short write: " + path.string());
}

/// The per-class table in the paper's layout. The header line is exactly
/// "precision recall f1-score support".
inline std::string format_report_table(const MetricsReport& r) {
  std::string out = "precision recall f1-score support\n";
  char line[128];
  for (std::size_t c = 0; c < 2; ++c) {
    std::snprintf(line, sizeof(line), "%s %.4f %.4f %.4f %lld\n",
                  ConfusionMatrix::class_names[c], r.per_class[c].precision,
                  r.per_class[c].recall, r.per_class[c].f1,
                  static_cast<long long>(r.per_class[c].support));
    out += line;
  }
  std::snprintf(line, sizeof(line), "accuracy %.4f\n", r.accuracy);
  out += line;
  return out;
}

inline std::string format_confusion(const ConfusionMatrix& m) {
  std::string out = "confusion matrix (rows true, cols predicted; normal, cancer)\n";
  char line[96];
  for (std::size_t c = 0; c < 2; ++c) {
    std::snprintf(line, sizeof(line), "%s %lld %lld\n", ConfusionMatrix::class_names[c],
                  static_cast<long long>(m.counts[c][0]),
                  static_cast<long long>(m.counts[c][1]));
    out += line;
  }
  return out;
}

}  // namespace leukonet
