#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <fstream>
#include <vector>

#include <png.h>

#include "leukonet/dataset.hpp"
#include "leukonet/image_codec.hpp"
#include "leukonet/pixel_hash.hpp"
#include "testutil.hpp"

using namespace leukonet;
using testutil::TempDir;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// Test-only grayscale PNG writer; the library itself only emits RGB.
void write_gray_png(const std::filesystem::path& path, int w, int h,
                    const std::vector<std::uint8_t>& gray) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  REQUIRE(fp != nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  REQUIRE(setjmp(png_jmpbuf(png)) == 0);
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y)
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(gray.data() + static_cast<std::size_t>(y) * w);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

TEST_CASE("P6 decode is identity on raw pixel bytes", "[imageio]") {
  TempDir tmp("ppm");
  const std::vector<std::uint8_t> pixels = {0,  0,  0,  255, 255, 255,
                                            10, 20, 30, 0,   0,   0};
  std::vector<std::uint8_t> file = {'P', '6', '\n', '2', ' ', '2', '\n',
                                    '2', '5', '5', '\n'};
  file.insert(file.end(), pixels.begin(), pixels.end());
  write_bytes(tmp / "a.ppm", file);

  const ImageU8 img = load_image(tmp / "a.ppm");
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.data == pixels);
}

TEST_CASE("PPM header may contain comments", "[imageio]") {
  TempDir tmp("ppmc");
  std::vector<std::uint8_t> file;
  const std::string header = "P6\n# a comment\n1 1\n255\n";
  file.assign(header.begin(), header.end());
  file.insert(file.end(), {9, 8, 7});
  write_bytes(tmp / "c.ppm", file);
  const ImageU8 img = load_image(tmp / "c.ppm");
  CHECK(img.data == std::vector<std::uint8_t>{9, 8, 7});
}

TEST_CASE("3x1 image saved as PPM is an 11-byte header plus 9 pixel bytes", "[imageio]") {
  // header by hand: "P6\n" (3) + "3 1\n" (4) + "255\n" (4) = 11 bytes
  TempDir tmp("ppm31");
  ImageU8 img(3, 1);
  for (int i = 0; i < 9; ++i) img.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i * 7);
  save_image(img, tmp / "x.ppm");

  const auto bytes = detail::read_file_bytes(tmp / "x.ppm");
  REQUIRE(bytes.size() == 11 + 9);
  const std::string header(bytes.begin(), bytes.begin() + 11);
  CHECK(header == "P6\n3 1\n255\n");
  CHECK(std::vector<std::uint8_t>(bytes.begin() + 11, bytes.end()) == img.data);
}

TEST_CASE("grayscale PNG is promoted to RGB by channel replication", "[imageio]") {
  TempDir tmp("gray");
  write_gray_png(tmp / "g.png", 1, 1, {7});
  const ImageU8 img = load_image(tmp / "g.png");
  CHECK(img.width == 1);
  CHECK(img.height == 1);
  CHECK(img.data == std::vector<std::uint8_t>{7, 7, 7});
}

TEST_CASE("truncated PNG raises CorruptImage", "[imageio]") {
  TempDir tmp("trunc");
  CounterRng rng(11);
  save_image(testutil::random_image(rng, 16, 16), tmp / "ok.png");
  auto bytes = detail::read_file_bytes(tmp / "ok.png");
  bytes.resize(40);  // signature + IHDR survive, the pixel stream does not
  write_bytes(tmp / "bad.png", bytes);
  CHECK_THROWS_AS(load_image(tmp / "bad.png"), CorruptImage);
}

TEST_CASE("unknown magic bytes raise UnsupportedFormat", "[imageio]") {
  TempDir tmp("magic");
  write_bytes(tmp / "h.dat", {'J', 'U', 'N', 'K', 1, 2, 3});
  CHECK_THROWS_AS(load_image(tmp / "h.dat"), UnsupportedFormat);
}

TEST_CASE("missing file raises IoFailure", "[imageio]") {
  CHECK_THROWS_AS(load_image("/nonexistent/nowhere.png"), IoFailure);
}

TEST_CASE("save into a missing directory raises IoFailure", "[imageio]") {
  ImageU8 img(2, 2);
  CHECK_THROWS_AS(save_image(img, "/nonexistent/dir/x.png"), IoFailure);
  CHECK_THROWS_AS(save_image(img, "/nonexistent/dir/x.ppm"), IoFailure);
  CHECK_THROWS_AS(save_image(img, "/nonexistent/dir/x.bmp"), IoFailure);
}

TEST_CASE("save/load round trip is pixel identical for all formats", "[imageio]") {
  TempDir tmp("rt");
  CounterRng rng(42);
  for (int trial = 0; trial < 8; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(33));
    const int h = 1 + static_cast<int>(rng.below(33));
    const ImageU8 img = testutil::random_image(rng, w, h);
    for (const char* ext : {"png", "bmp", "ppm"}) {
      const auto p = tmp / ("rt_" + std::to_string(trial) + "." + ext);
      save_image(img, p);
      const ImageU8 back = load_image(p);
      REQUIRE(back == img);
    }
  }
}

TEST_CASE("BMP with odd width exercises row padding", "[imageio]") {
  TempDir tmp("pad");
  CounterRng rng(7);
  const ImageU8 img = testutil::random_image(rng, 3, 2);
  save_image(img, tmp / "p.bmp");
  CHECK(load_image(tmp / "p.bmp") == img);
}

TEST_CASE("pixel hash tracks pixel equality", "[imageio]") {
  CounterRng rng(5);
  const ImageU8 a = testutil::random_image(rng, 9, 5);
  ImageU8 b = a;
  CHECK(pixel_hash(a) == pixel_hash(b));
  b.data[17] ^= 1;
  CHECK(pixel_hash(a) != pixel_hash(b));

  // same byte stream, different shape
  ImageU8 c(5, 9);
  c.data = a.data;
  CHECK(pixel_hash(a) != pixel_hash(c));
}

TEST_CASE("hash is a function of pixels, not encoding", "[imageio]") {
  TempDir tmp("enc");
  CounterRng rng(6);
  const ImageU8 img = testutil::random_image(rng, 12, 8);
  save_image(img, tmp / "x.png");
  save_image(img, tmp / "x.ppm");
  CHECK(pixel_hash(load_image(tmp / "x.png")) == pixel_hash(load_image(tmp / "x.ppm")));
}

TEST_CASE("scan_dataset labels by directory and sorts by path", "[imageio]") {
  TempDir tmp("scan");
  std::filesystem::create_directories(tmp / "cancer");
  std::filesystem::create_directories(tmp / "normal");
  CounterRng rng(9);
  save_image(testutil::random_image(rng, 4, 4), tmp / "cancer/a.png");
  save_image(testutil::random_image(rng, 4, 4), tmp / "cancer/b.png");
  save_image(testutil::random_image(rng, 4, 4), tmp / "normal/c.png");

  const auto records = scan_dataset(tmp.path());
  REQUIRE(records.size() == 3);
  CHECK(records[0].path == "cancer/a.png");
  CHECK(records[1].path == "cancer/b.png");
  CHECK(records[2].path == "normal/c.png");
  CHECK(records[0].label == 1);
  CHECK(records[1].label == 1);
  CHECK(records[2].label == 0);
  for (const auto& r : records) {
    CHECK(r.split == Split::unassigned);
    CHECK(r.content_hash.size() == 64);
  }

  // same tree, same order
  CHECK(scan_dataset(tmp.path()) == records);
}

TEST_CASE("scan_dataset rejects a class with no decodable images", "[imageio]") {
  TempDir tmp("empty");
  std::filesystem::create_directories(tmp / "cancer");
  std::filesystem::create_directories(tmp / "normal");
  CounterRng rng(10);
  save_image(testutil::random_image(rng, 4, 4), tmp / "cancer/a.png");
  CHECK_THROWS_AS(scan_dataset(tmp.path()), EmptyClass);
}

TEST_CASE("dedup keeps the lexicographically first path per hash", "[imageio]") {
  TempDir tmp("dd");
  std::filesystem::create_directories(tmp / "cancer");
  std::filesystem::create_directories(tmp / "normal");
  CounterRng rng(12);
  const ImageU8 dup = testutil::random_image(rng, 6, 6);
  save_image(dup, tmp / "cancer/z_copy.png");
  save_image(dup, tmp / "cancer/a_orig.png");
  save_image(testutil::random_image(rng, 6, 6), tmp / "normal/n.png");

  const auto records = scan_dataset(tmp.path());
  const auto [kept, removed] = dedup(records);
  REQUIRE(kept.size() == 2);
  REQUIRE(removed.size() == 1);
  CHECK(kept[0].path == "cancer/a_orig.png");
  CHECK(removed[0].path == "cancer/z_copy.png");

  // kept and removed partition the input
  CHECK(kept.size() + removed.size() == records.size());

  // idempotent: a second pass removes nothing
  const auto [kept2, removed2] = dedup(kept);
  CHECK(kept2 == kept);
  CHECK(removed2.empty());
}

TEST_CASE("dedup on all-distinct records removes nothing", "[imageio]") {
  std::vector<DatasetRecord> records;
  for (int i = 0; i < 5; ++i)
    records.push_back({"cancer/img" + std::to_string(i) + ".png", 1, Split::unassigned,
                       "hash" + std::to_string(i)});
  const auto [kept, removed] = dedup(records);
  CHECK(kept == records);
  CHECK(removed.empty());
}

TEST_CASE("manifest round trips through JSON", "[imageio]") {
  TempDir tmp("mani");
  std::vector<DatasetRecord> records = {
      {"cancer/a.png", 1, Split::train, std::string(64, 'a')},
      {"normal/b.png", 0, Split::test, std::string(64, 'b')},
      {"normal/c.png", 0, Split::unassigned, std::string(64, 'c')}};
  save_manifest(records, tmp / "m.json");
  CHECK(load_manifest(tmp / "m.json") == records);
}
