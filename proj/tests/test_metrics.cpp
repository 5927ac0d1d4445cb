#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "leukonet/metrics.hpp"
#include "leukonet/rng.hpp"
#include "testutil.hpp"

using namespace leukonet;
using testutil::TempDir;

namespace {

std::string file_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("perfect predictions leave the off-diagonal empty", "[evalkit]") {
  const std::vector<int> y{1, 0, 1, 1, 0};
  const auto m = confusion(y, y);
  CHECK(m.counts[0][1] == 0);
  CHECK(m.counts[1][0] == 0);
  CHECK(m.counts[0][0] == 2);
  CHECK(m.counts[1][1] == 3);
  CHECK(report(m).accuracy == 1.0);
}

TEST_CASE("confusion validates its inputs", "[evalkit]") {
  CHECK_THROWS_AS(confusion({1, 0}, {1}), LengthMismatch);
  CHECK_THROWS_AS(confusion({}, {}), EmptyInput);
  CHECK_THROWS_AS(confusion({2}, {0}), std::invalid_argument);
}

TEST_CASE("two mismatched labels count into the right cells", "[evalkit]") {
  const auto m = confusion({1, 0}, {0, 1});
  CHECK(m.counts[1][0] == 1);
  CHECK(m.counts[0][1] == 1);
  CHECK(m.counts[0][0] == 0);
  CHECK(m.counts[1][1] == 0);
}

TEST_CASE("the reported test matrix reproduces its published metrics", "[evalkit]") {
  // 369 cancer->cancer, 11 cancer->normal, 301 normal->normal, 19 normal->cancer
  const auto [truth, pred] = testutil::labels_from_matrix({{{301, 19}, {11, 369}}});
  const auto m = confusion(truth, pred);
  CHECK(m.counts[1][1] == 369);
  CHECK(m.counts[1][0] == 11);
  CHECK(m.counts[0][0] == 301);
  CHECK(m.counts[0][1] == 19);
  CHECK(m.total() == 700);

  const auto r = report(m);
  CHECK(r.accuracy == 670.0 / 700.0);
  CHECK(r.per_class[1].precision == 369.0 / 388.0);  // ~0.9510
  CHECK(r.per_class[1].recall == 369.0 / 380.0);     // ~0.9711
  CHECK(r.per_class[0].precision == 301.0 / 312.0);
  CHECK(r.per_class[0].recall == 301.0 / 320.0);
  CHECK(r.per_class[0].support == 320);
  CHECK(r.per_class[1].support == 380);

  // against the independent pairwise recount
  const auto o = testutil::recount_metrics(truth, pred);
  CHECK(std::abs(r.accuracy - o.accuracy) < 1e-12);
  for (int c = 0; c < 2; ++c) {
    CHECK(std::abs(r.per_class[c].precision - o.precision[c]) < 1e-12);
    CHECK(std::abs(r.per_class[c].recall - o.recall[c]) < 1e-12);
    CHECK(std::abs(r.per_class[c].f1 - o.f1[c]) < 1e-12);
    CHECK(r.per_class[c].support == o.support[c]);
  }
}

TEST_CASE("a diagonal matrix scores ones across the board", "[evalkit]") {
  ConfusionMatrix m;
  m.counts = {{{40, 0}, {0, 60}}};
  const auto r = report(m);
  for (int c = 0; c < 2; ++c) {
    CHECK(r.per_class[c].precision == 1.0);
    CHECK(r.per_class[c].recall == 1.0);
    CHECK(r.per_class[c].f1 == 1.0);
  }
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("degenerate classifiers use the 0/0 -> 0 convention", "[evalkit]") {
  // everything predicted normal: cancer has no predictions at all
  ConfusionMatrix all_normal;
  all_normal.counts = {{{150, 0}, {480, 0}}};
  const auto r = report(all_normal);
  CHECK(r.per_class[1].precision == 0.0);  // 0/0
  CHECK(r.per_class[1].recall == 0.0);     // 0/480
  CHECK(r.per_class[1].f1 == 0.0);
  CHECK(r.per_class[0].precision == 150.0 / 630.0);  // prevalence of normal
  CHECK(r.per_class[0].recall == 1.0);

  // the published failing-model matrix: cancer precision/recall/f1 all 0.00
  const auto [truth, pred] = testutil::labels_from_matrix({{{157, 163}, {380, 0}}});
  const auto rf = report(confusion(truth, pred));
  CHECK(rf.per_class[1].precision == 0.0);
  CHECK(rf.per_class[1].recall == 0.0);
  CHECK(rf.per_class[1].f1 == 0.0);
  const auto o = testutil::recount_metrics(truth, pred);
  CHECK(rf.per_class[0].precision == o.precision[0]);
  CHECK(rf.per_class[0].recall == o.recall[0]);
}

TEST_CASE("report matches the brute-force recount on random vectors", "[evalkit]") {
  CounterRng rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(10000);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.below(2));
      pred[i] = static_cast<int>(rng.below(2));
    }
    const auto r = report(confusion(truth, pred));
    const auto o = testutil::recount_metrics(truth, pred);
    REQUIRE(r.accuracy == o.accuracy);
    for (int c = 0; c < 2; ++c) {
      REQUIRE(r.per_class[c].precision == o.precision[c]);
      REQUIRE(r.per_class[c].recall == o.recall[c]);
      REQUIRE(r.per_class[c].f1 == o.f1[c]);
      REQUIRE(r.per_class[c].support == o.support[c]);
    }
    // harmonic mean sits between precision and recall
    for (int c = 0; c < 2; ++c) {
      if (r.per_class[c].precision + r.per_class[c].recall > 0) {
        REQUIRE(r.per_class[c].f1 >=
                std::min(r.per_class[c].precision, r.per_class[c].recall) - 1e-15);
        REQUIRE(r.per_class[c].f1 <=
                std::max(r.per_class[c].precision, r.per_class[c].recall) + 1e-15);
      }
    }
  }
}

TEST_CASE("report.json is byte-stable and carries the documented schema", "[evalkit]") {
  TempDir tmp("report");
  const auto [truth, pred] = testutil::labels_from_matrix({{{30, 4}, {2, 44}}});
  const auto r = report(confusion(truth, pred));
  export_report(r, tmp / "a.json");
  export_report(r, tmp / "b.json");
  const std::string a = file_text(tmp / "a.json");
  CHECK(a == file_text(tmp / "b.json"));

  const auto parsed = nlohmann::json::parse(a);
  CHECK(parsed.at("matrix")[0][0] == 30);
  CHECK(parsed.at("classes") == nlohmann::json({"normal", "cancer"}));
  CHECK(parsed.at("per_class").contains("normal"));
  CHECK(parsed.at("per_class").contains("cancer"));
  CHECK(parsed.at("per_class").at("cancer").at("support") == 46);
  CHECK(parsed.at("accuracy").get<double>() == r.accuracy);
}

TEST_CASE("curves export has a header row plus one row per epoch", "[evalkit]") {
  TempDir tmp("curves");
  std::vector<EpochRecord> records;
  for (int e = 1; e <= 17; ++e)
    records.push_back({e, 1.0 / e, 0.5 + 0.02 * e, 1.2 / e, 0.5 + 0.015 * e});
  export_curves(records, tmp / "c.csv");

  const std::string csv = file_text(tmp / "c.csv");
  CHECK(csv.rfind("epoch,train_acc,val_acc,train_loss,val_loss\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 18);

  CHECK_THROWS_AS(export_curves({}, tmp / "empty.csv"), EmptyInput);
}

TEST_CASE("the printed table uses the paper's column header", "[evalkit]") {
  const auto [truth, pred] = testutil::labels_from_matrix({{{10, 2}, {1, 12}}});
  const auto r = report(confusion(truth, pred));
  const std::string table = format_report_table(r);
  CHECK(table.rfind("precision recall f1-score support\n", 0) == 0);
  CHECK(table.find("normal ") != std::string::npos);
  CHECK(table.find("cancer ") != std::string::npos);
}
