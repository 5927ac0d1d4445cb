#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leukonet/dataset.hpp"
#include "leukonet/errors.hpp"
#include "leukonet/image.hpp"
#include "leukonet/image_codec.hpp"
#include "leukonet/parallel.hpp"
#include "leukonet/pixel_hash.hpp"
#include "leukonet/rng.hpp"

namespace leukonet {

// ------------------------------------------------------------ transforms

enum class FlipAxis { horizontal, vertical };

inline ImageU8 flip(const ImageU8& img, FlipAxis axis) {
  ImageU8 out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const int sx = axis == FlipAxis::horizontal ? img.width - 1 - x : x;
      const int sy = axis == FlipAxis::vertical ? img.height - 1 - y : y;
      for (int c = 0; c < ImageU8::channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  return out;
}

/// Forward affine map from source to output coordinates:
/// x' = a x + b y + c, y' = d x + e y + f.
struct AffineMap {
  double a = 1, b = 0, c = 0;
  double d = 0, e = 1, f = 0;
};

/// Inverse-mapping nearest-neighbor sampler. For each output pixel the
/// inverse map locates the source position; it is rounded to the nearest
/// integer pixel (halves toward +inf) and clamped to the raster, so vacated
/// regions replicate the nearest edge. Output dimensions equal input
/// dimensions and no new pixel values are created.
inline ImageU8 affine_nearest(const ImageU8& img, const AffineMap& m) {
  const double det = m.a * m.e - m.b * m.d;
  if (std::abs(det) < 1e-12)
    throw SingularTransform("affine map is not invertible (det ~ 0)");
  const double ia = m.e / det, ib = -m.b / det;
  const double id = -m.d / det, ie = m.a / det;

  ImageU8 out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double rx = x - m.c, ry = y - m.f;
      const double sxf = ia * rx + ib * ry;
      const double syf = id * rx + ie * ry;
      const int sx = std::clamp(static_cast<int>(std::floor(sxf + 0.5)), 0, img.width - 1);
      const int sy = std::clamp(static_cast<int>(std::floor(syf + 0.5)), 0, img.height - 1);
      for (int c = 0; c < ImageU8::channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

/// Translation by (dx*W, dy*H) pixels; dimensions unchanged, vacated region
/// filled by the replicate rule.
inline ImageU8 shift(const ImageU8& img, double dx, double dy) {
  if (std::abs(dx) > 0.5 || std::abs(dy) > 0.5)
    throw std::invalid_argument("shift fractions must lie in [-0.5, 0.5]");
  if (dx == 0.0 && dy == 0.0) return img;
  AffineMap m;
  m.c = dx * img.width;
  m.f = dy * img.height;
  return affine_nearest(img, m);
}

/// Scales about the image center; factor > 1 magnifies the central region.
inline ImageU8 zoom(const ImageU8& img, double factor) {
  if (factor < 0.5 || factor > 2.0)
    throw std::invalid_argument("zoom factor must lie in [0.5, 2.0]");
  if (factor == 1.0) return img;
  const double cx = (img.width - 1) / 2.0;
  const double cy = (img.height - 1) / 2.0;
  AffineMap m;
  m.a = factor;
  m.e = factor;
  m.c = cx * (1.0 - factor);
  m.f = cy * (1.0 - factor);
  return affine_nearest(img, m);
}

/// Horizontal shear about the vertical midline: x' = x + k*(y - H/2).
/// Centering keeps the raster fully defined (replicate fill at the edges),
/// so there is no black space or padding.
inline ImageU8 shear(const ImageU8& img, double k) {
  if (std::abs(k) > 0.5) throw std::invalid_argument("shear factor must lie in [-0.5, 0.5]");
  if (k == 0.0) return img;
  AffineMap m;
  m.b = k;
  m.c = -k * img.height / 2.0;
  return affine_nearest(img, m);
}

// ------------------------------------------------------------ plans

enum class AugmentKind { flip_h, flip_v, shift, zoom, shear };

inline const char* augment_kind_name(AugmentKind k) {
  switch (k) {
    case AugmentKind::flip_h: return "flip_h";
    case AugmentKind::flip_v: return "flip_v";
    case AugmentKind::shift: return "shift";
    case AugmentKind::zoom: return "zoom";
    default: return "shear";
  }
}

struct AugmentOp {
  AugmentKind kind = AugmentKind::flip_h;
  double dx = 0, dy = 0;   // shift fractions
  double scale = 1;        // zoom factor
  double shear_k = 0;      // shear factor along x
};

inline ImageU8 apply_augment(const ImageU8& img, const AugmentOp& op) {
  switch (op.kind) {
    case AugmentKind::flip_h: return flip(img, FlipAxis::horizontal);
    case AugmentKind::flip_v: return flip(img, FlipAxis::vertical);
    case AugmentKind::shift: return shift(img, op.dx, op.dy);
    case AugmentKind::zoom: return zoom(img, op.scale);
    default: return shear(img, op.shear_k);
  }
}

/// Sampling ranges. Defaults are conservative so cells stay in frame.
struct AugmentRanges {
  double shift_max = 0.10;   // |dx|, |dy| upper bound, at most 0.2
  double zoom_lo = 0.90;     // within [0.8, 1.25]
  double zoom_hi = 1.10;
  double shear_max = 0.20;   // |k| upper bound, at most 0.3

  void validate() const {
    if (shift_max < 0 || shift_max > 0.2)
      throw std::invalid_argument("shift range must lie within [0, 0.2]");
    if (zoom_lo < 0.8 || zoom_hi > 1.25 || zoom_lo > zoom_hi)
      throw std::invalid_argument("zoom range must lie within [0.8, 1.25]");
    if (shear_max < 0 || shear_max > 0.3)
      throw std::invalid_argument("shear range must lie within [0, 0.3]");
  }
};

struct AugmentPlan {
  std::uint64_t seed = 0;
  int per_image = 0;  // augmented variants per source (uniform mode)
  std::vector<AugmentKind> op_pool = {AugmentKind::flip_h, AugmentKind::flip_v,
                                      AugmentKind::shift, AugmentKind::zoom,
                                      AugmentKind::shear};
  AugmentRanges ranges;
};

/// Parameters for variant `variant_idx` of source `source_idx`. A pure
/// function of (seed, source, variant): regeneration order never matters.
inline AugmentOp draw_augment_op(const AugmentPlan& plan, std::uint64_t source_idx,
                                 std::uint64_t variant_idx) {
  CounterRng rng(plan.seed, source_idx, variant_idx);
  AugmentOp op;
  op.kind = plan.op_pool[rng.below(plan.op_pool.size())];
  switch (op.kind) {
    case AugmentKind::shift:
      op.dx = rng.uniform(-plan.ranges.shift_max, plan.ranges.shift_max);
      op.dy = rng.uniform(-plan.ranges.shift_max, plan.ranges.shift_max);
      break;
    case AugmentKind::zoom:
      op.scale = rng.uniform(plan.ranges.zoom_lo, plan.ranges.zoom_hi);
      break;
    case AugmentKind::shear:
      op.shear_k = rng.uniform(-plan.ranges.shear_max, plan.ranges.shear_max);
      break;
    default:
      break;
  }
  return op;
}

namespace detail {

inline std::string variant_name(const std::filesystem::path& rel, int variant_idx) {
  const std::filesystem::path p(rel);
  std::string n = std::to_string(variant_idx);
  while (n.size() < 3) n.insert(n.begin(), '0');
  return (p.parent_path() / (p.stem().string() + "_aug" + n + ".png")).generic_string();
}

/// Copies originals and writes `counts[i]` augmented variants per source.
/// Sources are processed in parallel; every output is fully determined by
/// (plan.seed, source order), so equal seeds give byte-identical corpora.
inline std::vector<DatasetRecord> emit_augmented(
    const AugmentPlan& plan, const std::vector<DatasetRecord>& sources,
    const std::vector<int>& counts, const std::filesystem::path& in_root,
    const std::filesystem::path& out_root) {
  namespace fs = std::filesystem;
  if (sources.empty()) throw EmptyInput("no source records to augment");
  plan.ranges.validate();

  fs::create_directories(out_root / kClassDirs[0]);
  fs::create_directories(out_root / kClassDirs[1]);

  std::set<std::string> names;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (!names.insert(sources[i].path).second)
      throw std::invalid_argument("duplicate source path: " + sources[i].path);
    for (int v = 0; v < counts[i]; ++v)
      if (!names.insert(variant_name(sources[i].path, v)).second)
        throw std::invalid_argument("augmented name collides: " +
                                    variant_name(sources[i].path, v));
  }

  std::vector<std::vector<DatasetRecord>> per_source(sources.size());
  std::string failure;
  std::mutex failure_mutex;
  parallel_for(sources.size(), [&](std::size_t begin, std::size_t end) {
    try {
      for (std::size_t i = begin; i < end; ++i) {
        const DatasetRecord& src = sources[i];
        std::error_code ec;
        fs::copy_file(in_root / src.path, out_root / src.path,
                      fs::copy_options::overwrite_existing, ec);
        if (ec) throw IoFailure("cannot copy " + src.path + ": " + ec.message());

        DatasetRecord original = src;
        original.split = Split::unassigned;
        per_source[i].push_back(std::move(original));

        if (counts[i] == 0) continue;
        const ImageU8 img = load_image(in_root / src.path);
        for (int v = 0; v < counts[i]; ++v) {
          const AugmentOp op = draw_augment_op(plan, i, static_cast<std::uint64_t>(v));
          const ImageU8 aug = apply_augment(img, op);
          DatasetRecord rec;
          rec.path = variant_name(src.path, v);
          rec.label = src.label;
          rec.split = Split::unassigned;
          rec.content_hash = pixel_hash(aug);
          save_image(aug, out_root / rec.path);
          per_source[i].push_back(std::move(rec));
        }
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (failure.empty()) failure = e.what();
    }
  });
  if (!failure.empty()) throw IoFailure(failure);

  std::vector<DatasetRecord> records;
  for (auto& group : per_source)
    for (auto& r : group) records.push_back(std::move(r));
  return records;
}

}  // namespace detail

/// Uniform expansion: plan.per_image variants per source, originals pass
/// through. Output count = |sources| * (1 + per_image).
inline std::vector<DatasetRecord> generate(const AugmentPlan& plan,
                                           const std::vector<DatasetRecord>& sources,
                                           const std::filesystem::path& in_root,
                                           const std::filesystem::path& out_root) {
  if (plan.per_image < 0) throw std::invalid_argument("per_image must be >= 0");
  return detail::emit_augmented(plan, sources,
                                std::vector<int>(sources.size(), plan.per_image),
                                in_root, out_root);
}

/// Per-class targeted expansion. Each class's sources receive
/// floor((target-S)/S) variants, the first (target-S) mod S sources one
/// extra, so emitted class counts hit the targets exactly.
inline std::vector<DatasetRecord> generate_to_targets(
    const AugmentPlan& plan, const std::vector<DatasetRecord>& sources,
    const std::array<std::size_t, 2>& class_targets,
    const std::filesystem::path& in_root, const std::filesystem::path& out_root) {
  std::array<std::size_t, 2> class_sizes{0, 0};
  for (const auto& s : sources) ++class_sizes[static_cast<std::size_t>(s.label)];

  std::array<std::size_t, 2> base{}, extra{};
  for (std::size_t label = 0; label < 2; ++label) {
    const std::size_t n = class_sizes[label];
    const std::size_t target = class_targets[label];
    if (n == 0) {
      if (target != 0) throw EmptyClass(std::string("no sources for class ") + kClassDirs[label]);
      continue;
    }
    if (target < n)
      throw std::invalid_argument(std::string("target for class ") + kClassDirs[label] +
                                  " is below its source count");
    base[label] = (target - n) / n;
    extra[label] = (target - n) % n;
  }

  std::vector<int> counts(sources.size(), 0);
  std::array<std::size_t, 2> seen{0, 0};
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto label = static_cast<std::size_t>(sources[i].label);
    counts[i] = static_cast<int>(base[label] + (seen[label] < extra[label] ? 1 : 0));
    ++seen[label];
  }
  return detail::emit_augmented(plan, sources, counts, in_root, out_root);
}

/// Provenance record written beside an augmented corpus.
inline nlohmann::ordered_json augment_plan_json(const AugmentPlan& plan,
                                                std::size_t normal_count,
                                                std::size_t cancer_count) {
  nlohmann::ordered_json pool = nlohmann::ordered_json::array();
  for (AugmentKind k : plan.op_pool) pool.push_back(augment_kind_name(k));
  return {{"seed", plan.seed},
          {"per_image", plan.per_image},
          {"op_pool", pool},
          {"ranges",
           {{"shift_max", plan.ranges.shift_max},
            {"zoom", {plan.ranges.zoom_lo, plan.ranges.zoom_hi}},
            {"shear_max", plan.ranges.shear_max}}},
          {"emitted", {{"normal", normal_count}, {"cancer", cancer_count}}}};
}

}  // namespace leukonet
