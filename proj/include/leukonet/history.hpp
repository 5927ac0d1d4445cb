#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "leukonet/errors.hpp"

namespace leukonet {

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double train_accuracy = 0;
  double val_loss = 0;
  double val_accuracy = 0;

  bool operator==(const EpochRecord&) const = default;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

/// `history.csv` written next to checkpoints:
/// epoch,train_loss,train_acc,val_loss,val_acc
inline std::string history_csv(const std::vector<EpochRecord>& records) {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (const auto& r : records) {
    out += std::to_string(r.epoch) + "," + detail::format_double(r.train_loss) + "," +
           detail::format_double(r.train_accuracy) + "," +
           detail::format_double(r.val_loss) + "," +
           detail::format_double(r.val_accuracy) + "\n";
  }
  return out;
}

inline void save_history(const std::vector<EpochRecord>& records,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot write history: " + path.string());
  out << history_csv(records);
  if (!out) throw IoFailure("short write: " + path.string());
}

}  // namespace leukonet
