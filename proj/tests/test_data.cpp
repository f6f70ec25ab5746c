#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "doctest.h"
#include "saas/data.hpp"
#include "saas/errors.hpp"
#include "saas/nn_core.hpp"
#include "saas/saas_core.hpp"

using namespace saas;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("saas_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void put32(std::ofstream& o, std::uint32_t v) {
  const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
  o.write(b, 4);
}

void write_idx_images(const fs::path& p, std::uint32_t magic, std::uint32_t n, std::uint32_t rows,
                      std::uint32_t cols, const std::vector<unsigned char>& px) {
  std::ofstream o(p, std::ios::binary);
  put32(o, magic);
  put32(o, n);
  put32(o, rows);
  put32(o, cols);
  o.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

void write_idx_labels(const fs::path& p, std::uint32_t n, const std::vector<unsigned char>& y) {
  std::ofstream o(p, std::ios::binary);
  put32(o, 0x00000801);
  put32(o, n);
  o.write(reinterpret_cast<const char*>(y.data()), static_cast<std::streamsize>(y.size()));
}

struct IdxFixture {
  fs::path dir, images, labels;
  std::vector<unsigned char> pixels, y;
  IdxFixture() : dir(temp_dir("idx")), images(dir / "img.idx"), labels(dir / "lab.idx") {
    for (int i = 0; i < 10 * 16; ++i) pixels.push_back(static_cast<unsigned char>((i * 37 + 11) % 256));
    for (int i = 0; i < 10; ++i) y.push_back(static_cast<unsigned char>(i % 3));
    write_idx_images(images, 0x00000803, 10, 4, 4, pixels);
    write_idx_labels(labels, 10, y);
  }
};

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("two moons: determinism and noiseless geometry") {
  const auto a = make_two_moons(100, 0.1, 5);
  const auto b = make_two_moons(100, 0.1, 5);
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);
  CHECK(a.K == 2);
  CHECK(std::count(a.y.begin(), a.y.end(), 0) == 50);

  const auto c = make_two_moons(200, 0.0, 3);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double x = c.X(i, 0), y = c.X(i, 1);
    if (c.y[i] == 0) {
      CHECK(std::hypot(x, y) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(y >= -1e-12);
    } else {
      CHECK(std::hypot(x - 1.0, y - 0.5) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(y <= 0.5 + 1e-12);
    }
  }
  CHECK_THROWS_AS(make_two_moons(1, 0.1, 1), ValidationError);
}

TEST_CASE("two moons is learnable with full labels") {
  const auto ds = make_two_moons(400, 0.1, 17);
  const std::vector<std::size_t> arch{2, 32, 32, 2};
  const std::uint64_t seed = 4;
  auto p = init_params(arch, seed);
  auto opt = make_optimizer(p, 0.1, 0.9, 0.0);
  const Matrix T = one_hot(ds.y, 2);
  for (int e = 0; e < 200; ++e) {
    const auto sched = epoch_batches(ds.size(), 50, 1000 + e);
    for (const auto& b : sched.batches) {
      const auto g = grads(p, gather_rows(ds.X, b), gather_rows(T, b), 0.0, false);
      apply_sgd_step(p, g.grad, opt, 0);
    }
  }
  CHECK(1.0 - error_rate(p, ds) >= 0.95);
}

TEST_CASE("blobs") {
  Matrix centers(2, 2);
  centers(1, 0) = 10.0;
  const auto ds = make_blobs(400, centers, 1.0, 3);
  // Separated by 10 sigma: threshold at the midpoint is a linear probe.
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) hits += (ds.X(i, 0) > 5.0) == (ds.y[i] == 1);
  CHECK(static_cast<double>(hits) / ds.size() >= 0.99);

  Matrix c3(3, 2);
  c3(1, 0) = 5.0;
  c3(2, 1) = 5.0;
  const auto tiny = make_blobs(3, c3, 0.5, 1);
  std::vector<int> ys = tiny.y;
  std::sort(ys.begin(), ys.end());
  CHECK(ys == std::vector<int>{0, 1, 2});
  CHECK(make_blobs(50, c3, 0.5, 9).X == make_blobs(50, c3, 0.5, 9).X);
  CHECK_THROWS_AS(make_blobs(10, Matrix(1, 2), 1.0, 1), ValidationError);
}

TEST_CASE("load_idx reads the fixture") {
  IdxFixture f;
  const auto ds = load_idx(f.images, f.labels);
  REQUIRE(ds.size() == 10);
  CHECK(ds.dim() == 16);
  CHECK(ds.K == 3);
  for (std::size_t i = 0; i < 10; ++i) {
    double expected = 0.0;
    for (std::size_t j = 0; j < 16; ++j) expected += f.pixels[i * 16 + j];
    double got = 0.0;
    for (std::size_t j = 0; j < 16; ++j) got += ds.X(i, j);
    CHECK(got * 255.0 == doctest::Approx(expected).epsilon(1e-12));
    CHECK(ds.y[i] == f.y[i]);
  }
}

TEST_CASE("load_idx errors") {
  IdxFixture f;
  SUBCASE("wrong magic names the file") {
    write_idx_images(f.images, 0x00000802, 10, 4, 4, f.pixels);
    try {
      load_idx(f.images, f.labels);
      FAIL("expected IdxFormatError");
    } catch (const IdxFormatError& e) {
      CHECK(std::string(e.what()).find(f.images.string()) != std::string::npos);
    }
  }
  SUBCASE("empty label file") {
    write_idx_labels(f.labels, 0, {});
    CHECK_THROWS_AS(load_idx(f.images, f.labels), IdxCountMismatchError);
  }
  SUBCASE("truncated pixels") {
    auto px = f.pixels;
    px.resize(px.size() - 3);
    write_idx_images(f.images, 0x00000803, 10, 4, 4, px);
    CHECK_THROWS_AS(load_idx(f.images, f.labels), IdxTruncatedError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_idx(f.dir / "nope", f.labels), IdxFormatError); }
}

TEST_CASE("csv round trip") {
  const auto dir = temp_dir("csv");
  const auto ds = make_two_moons(20, 0.1, 2);
  save_csv(ds, dir / "d.csv");
  const auto back = load_csv(dir / "d.csv");
  CHECK(back.X == ds.X);
  CHECK(back.y == ds.y);
  std::ofstream(dir / "bad.csv") << "a,b,label\n1,2,0\n";
  CHECK_THROWS_AS(load_csv(dir / "bad.csv"), ValidationError);
}

TEST_CASE("split: balanced counts, boundaries, disjointness") {
  const auto ds = make_two_moons(200, 0.1, 1);
  const auto s = split(ds, {6, 100, 20, 30}, {}, 9);
  CHECK(std::count(s.labeled.y.begin(), s.labeled.y.end(), 0) == 3);
  CHECK(std::count(s.labeled.y.begin(), s.labeled.y.end(), 1) == 3);
  CHECK(s.n_unlabeled() == 100);
  CHECK(s.validation.size() == 20);
  CHECK(s.test.size() == 30);
  for (std::size_t i = 0; i < s.n_unlabeled(); ++i)
    CHECK(s.unlabeled_true_y[i] == ds.y[s.unlabeled_idx[i]]);

  const auto all = split(ds, {200, 0, 0, 0}, {}, 3);
  CHECK(all.n_unlabeled() == 0);
  CHECK(all.labeled.size() == 200);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto t = split(ds, {10, 80, 30, 0}, {}, seed);
    std::vector<std::size_t> idx;
    for (const auto* v : {&t.labeled_idx, &t.unlabeled_idx, &t.validation_idx, &t.test_idx})
      idx.insert(idx.end(), v->begin(), v->end());
    CHECK(as_set(idx).size() == idx.size());
    CHECK(idx.size() == 200);
  }

  const auto u = split(ds, {6, 50, 0, 10}, {true, true}, 4);
  CHECK(u.n_unlabeled() == 56);
  CHECK_THROWS_AS(split(ds, {100, 100, 10, 0}, {}, 1), ValidationError);
  CHECK_THROWS_AS(split(ds, {5, 10, 0, 0}, {}, 1), ValidationError);
}

TEST_CASE("split: first three sets ignore the unlabeled count") {
  const auto ds = make_two_moons(500, 0.1, 1);
  const auto a = split(ds, {6, 50, 20, 100}, {}, 8);
  const auto b = split(ds, {6, 300, 20, 100}, {}, 8);
  CHECK(a.labeled_idx == b.labeled_idx);
  CHECK(a.validation_idx == b.validation_idx);
  CHECK(a.test_idx == b.test_idx);
}

TEST_CASE("corrupt_labels") {
  std::vector<int> y(10);
  for (int i = 0; i < 10; ++i) y[i] = i % 3;
  CHECK(corrupt_labels(y, 0.0, 3, 1) == y);
  const auto all = corrupt_labels(y, 1.0, 3, 1);
  for (int i = 0; i < 10; ++i) CHECK(all[i] != y[i]);
  const auto half = corrupt_labels(y, 0.5, 3, 2);
  int changed = 0;
  for (int i = 0; i < 10; ++i) changed += half[i] != y[i];
  CHECK(changed == 5);
  const auto uni = corrupt_labels(std::vector<int>(1000, 0), 1.0, 2, 3, CorruptionMode::uniform);
  const auto ones = std::count(uni.begin(), uni.end(), 1);
  CHECK(ones > 400);
  CHECK(ones < 600);
  CHECK_THROWS_AS(corrupt_labels(y, 1.5, 3, 1), ValidationError);
}

TEST_CASE("augmentation") {
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  CHECK(apply_augmentation(IdentityAug{}, x, 3) == x);
  CHECK(apply_augmentation(GaussianJitter{0.0}, x, 3) == x);
  CHECK(apply_augmentation(GaussianJitter{0.5}, x, 3) == apply_augmentation(GaussianJitter{0.5}, x, 3));
  CHECK(apply_augmentation(GaussianJitter{0.5}, x, 3) != apply_augmentation(GaussianJitter{0.5}, x, 4));

  std::vector<double> img(9, 0.0);
  img[1 * 3 + 1] = 1.0;
  const auto moved = translate_image(img, 1, 0);
  std::vector<double> expected(9, 0.0);
  expected[1 * 3 + 2] = 1.0;
  CHECK(moved == expected);
  CHECK(translate_image(img, 2, 0) == std::vector<double>(9, 0.0));
  CHECK(flip_horizontal(moved)[1 * 3 + 0] == 1.0);
  CHECK_THROWS_AS(translate_image(std::vector<double>(5, 0.0), 1, 0), DimensionError);
  CHECK_THROWS_AS(validate(AugmentationSpec{GaussianJitter{-1.0}}), ValidationError);

  Matrix X(3, 4);
  X.data.assign(12, 0.5);
  CHECK(augment_rows(IdentityAug{}, X, 1) == X);
  const auto j = augment_rows(GaussianJitter{0.1}, X, 1);
  CHECK(j.row(0)[0] != j.row(1)[0]);
}

TEST_CASE("batches") {
  const auto s = epoch_batches(10, 3, 1);
  std::vector<std::size_t> sizes, seen;
  for (const auto& b : s.batches) {
    sizes.push_back(b.size());
    seen.insert(seen.end(), b.begin(), b.end());
  }
  CHECK(sizes == std::vector<std::size_t>{3, 3, 3, 1});
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(seen[i] == i);
  CHECK_THROWS_AS(epoch_batches(10, 0, 1), ValidationError);

  int distinct = 0;
  for (std::uint64_t t = 0; t < 20; ++t)
    distinct += epoch_batches(50, 50, 2 * t).batches != epoch_batches(50, 50, 2 * t + 1).batches;
  CHECK(distinct == 20);

  BatchStream stream(10, 4, 7);
  CHECK(stream.steps_per_epoch() == 3);
  std::vector<std::size_t> first;
  first = stream.next();
  const std::size_t pass = stream.epochs_started();
  for (int i = 0; i < 2; ++i) {
    const auto& b = stream.next();
    first.insert(first.end(), b.begin(), b.end());
  }
  CHECK(stream.epochs_started() == pass);
  stream.next();
  CHECK(stream.epochs_started() == pass + 1);
  std::sort(first.begin(), first.end());
  CHECK(as_set(first).size() == 10);
}
