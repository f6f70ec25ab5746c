#include "saas/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "saas/errors.hpp"

namespace saas {

namespace {

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

Dataset shuffled(Dataset ds, std::uint64_t seed) {
  const auto perm = permutation(ds.size(), seed);
  Dataset out = subset(ds, perm);
  out.name = std::move(ds.name);
  return out;
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxFormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

void validate(const Dataset& ds) {
  if (ds.y.empty()) throw ValidationError("dataset '" + ds.name + "' is empty");
  if (ds.X.rows != ds.y.size()) throw DimensionError("dataset feature/label count mismatch");
  for (int label : ds.y)
    if (label < 0 || static_cast<std::size_t>(label) >= ds.K)
      throw ValidationError("dataset '" + ds.name + "' has a label outside [0, K)");
  for (double v : ds.X.data)
    if (!std::isfinite(v)) throw ValidationError("dataset '" + ds.name + "' has non-finite features");
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.X = gather_rows(ds.X, indices);
  out.y.reserve(indices.size());
  for (auto i : indices) out.y.push_back(ds.y[i]);
  out.K = ds.K;
  out.name = ds.name;
  return out;
}

Dataset make_two_moons(std::size_t n, double noise_sigma, std::uint64_t seed) {
  if (n < 2) throw ValidationError("make_two_moons needs n >= 2");
  if (!(noise_sigma >= 0.0)) throw ValidationError("make_two_moons needs noise_sigma >= 0");
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset ds{Matrix(n, 2), std::vector<int>(n), 2, "two_moons"};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double t = angle(rng);
    double x, y;
    if (label == 0) {
      x = std::cos(t);
      y = std::sin(t);
    } else {
      x = 1.0 - std::cos(t);
      y = 0.5 - std::sin(t);
    }
    if (noise_sigma > 0.0) {
      x += noise_sigma * noise(rng);
      y += noise_sigma * noise(rng);
    }
    ds.X(i, 0) = x;
    ds.X(i, 1) = y;
    ds.y[i] = label;
  }
  return shuffled(std::move(ds), sub_seed(seed, 1));
}

Dataset make_blobs(std::size_t n, const Matrix& centers, double sigma, std::uint64_t seed) {
  if (centers.rows < 2) throw ValidationError("make_blobs needs at least 2 centers");
  if (centers.cols == 0) throw DimensionError("make_blobs centers have zero dimension");
  if (n == 0) throw ValidationError("make_blobs needs n >= 1");
  if (!(sigma >= 0.0)) throw ValidationError("make_blobs needs sigma >= 0");
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t K = centers.rows, d = centers.cols;
  Dataset ds{Matrix(n, d), std::vector<int>(n), K, "blobs"};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % K;
    for (std::size_t j = 0; j < d; ++j) ds.X(i, j) = centers(k, j) + sigma * noise(rng);
    ds.y[i] = static_cast<int>(k);
  }
  return shuffled(std::move(ds), sub_seed(seed, 1));
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (img.size() < 4 || be32(img, 0) != 0x00000803)
    throw IdxFormatError("bad IDX image magic in " + images_path.string());
  if (lab.size() < 4 || be32(lab, 0) != 0x00000801)
    throw IdxFormatError("bad IDX label magic in " + labels_path.string());
  if (img.size() < 16) throw IdxTruncatedError("truncated IDX image header in " + images_path.string());
  if (lab.size() < 8) throw IdxTruncatedError("truncated IDX label header in " + labels_path.string());
  const std::size_t n_img = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  const std::size_t n_lab = be32(lab, 4);
  if (n_img != n_lab) {
    throw IdxCountMismatchError("IDX count mismatch: " + std::to_string(n_img) + " images in " +
                                images_path.string() + ", " + std::to_string(n_lab) +
                                " labels in " + labels_path.string());
  }
  const std::size_t d = rows * cols;
  if (img.size() < 16 + n_img * d)
    throw IdxTruncatedError("truncated IDX image data in " + images_path.string());
  if (lab.size() < 8 + n_lab) throw IdxTruncatedError("truncated IDX label data in " + labels_path.string());
  if (n_img == 0) throw IdxCountMismatchError("IDX files contain no samples");

  Dataset ds{Matrix(n_img, d), std::vector<int>(n_img), 0, images_path.stem().string()};
  for (std::size_t i = 0; i < n_img * d; ++i) ds.X.data[i] = img[16 + i] / 255.0;
  int max_label = 0;
  for (std::size_t i = 0; i < n_lab; ++i) {
    ds.y[i] = lab[8 + i];
    max_label = std::max(max_label, ds.y[i]);
  }
  ds.K = static_cast<std::size_t>(max_label) + 1;
  return ds;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": missing header");
  std::size_t d = 0;
  {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cols;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() < 2 || cols.back() != "label")
      throw ValidationError(path.string() + ": header must be f0..f{d-1},label");
    d = cols.size() - 1;
    for (std::size_t j = 0; j < d; ++j)
      if (cols[j] != "f" + std::to_string(j))
        throw ValidationError(path.string() + ": unexpected header column '" + cols[j] + "'");
  }
  Dataset ds;
  ds.name = path.stem().string();
  std::vector<double> values;
  std::size_t lineno = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t j = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        if (j < d) {
          values.push_back(std::stod(cell));
        } else if (j == d) {
          ds.y.push_back(std::stoi(cell));
          max_label = std::max(max_label, ds.y.back());
        }
      } catch (const std::exception&) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      ++j;
    }
    if (j != d + 1)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
  }
  ds.X = Matrix(ds.y.size(), d);
  ds.X.data = std::move(values);
  ds.K = static_cast<std::size_t>(max_label + 1);
  validate(ds);
  return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (std::size_t j = 0; j < ds.dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.X(i, j));
      out << buf << ',';
    }
    out << ds.y[i] << '\n';
  }
}

DatasetSplit split(const Dataset& ds, const SplitSizes& sizes, const SplitOptions& opts,
                   std::uint64_t seed) {
  validate(ds);
  const std::size_t N = ds.size();
  const std::size_t fixed = sizes.labeled + sizes.unlabeled + sizes.validation + sizes.test;
  if (fixed > N) {
    throw ValidationError("split oversubscribed: " + std::to_string(fixed) + " requested from " +
                          std::to_string(N) + " samples");
  }
  if (opts.balanced && sizes.labeled % ds.K != 0) {
    throw ValidationError("balanced split needs K (" + std::to_string(ds.K) +
                          ") to divide n_labeled (" + std::to_string(sizes.labeled) + ")");
  }
  const auto perm = permutation(N, seed);
  std::vector<bool> used(N, false);
  DatasetSplit s;
  s.K = ds.K;

  if (opts.balanced) {
    const std::size_t per_class = sizes.labeled / ds.K;
    std::vector<std::size_t> taken(ds.K, 0);
    for (auto i : perm) {
      const auto c = static_cast<std::size_t>(ds.y[i]);
      if (taken[c] < per_class) {
        ++taken[c];
        s.labeled_idx.push_back(i);
        used[i] = true;
      }
    }
    for (std::size_t c = 0; c < ds.K; ++c)
      if (taken[c] < per_class)
        throw ValidationError("balanced split infeasible: class " + std::to_string(c) +
                              " has fewer than " + std::to_string(per_class) + " samples");
  } else {
    for (std::size_t k = 0; k < sizes.labeled; ++k) {
      s.labeled_idx.push_back(perm[k]);
      used[perm[k]] = true;
    }
  }

  std::vector<std::size_t> rest;
  for (auto i : perm)
    if (!used[i]) rest.push_back(i);
  auto it = rest.begin();
  s.validation_idx.assign(it, it + static_cast<std::ptrdiff_t>(sizes.validation));
  it += static_cast<std::ptrdiff_t>(sizes.validation);
  const std::size_t remaining = static_cast<std::size_t>(rest.end() - it);
  const std::size_t n_test = sizes.test > 0 ? sizes.test : remaining - sizes.unlabeled;
  s.test_idx.assign(it, it + static_cast<std::ptrdiff_t>(n_test));
  it += static_cast<std::ptrdiff_t>(n_test);
  s.unlabeled_idx.assign(it, it + static_cast<std::ptrdiff_t>(sizes.unlabeled));
  if (opts.union_labeled)
    s.unlabeled_idx.insert(s.unlabeled_idx.end(), s.labeled_idx.begin(), s.labeled_idx.end());

  s.labeled = subset(ds, s.labeled_idx);
  s.validation = subset(ds, s.validation_idx);
  s.test = subset(ds, s.test_idx);
  const Dataset u = subset(ds, s.unlabeled_idx);
  s.unlabeled_X = u.X;
  s.unlabeled_true_y = u.y;
  return s;
}

std::vector<int> corrupt_labels(const std::vector<int>& y, double fraction, std::size_t K,
                                std::uint64_t seed, CorruptionMode mode) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw ValidationError("corruption fraction must be in [0, 1]");
  const std::size_t count =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(y.size())));
  if (count == 0) return y;
  if (K < 2) throw ValidationError("label corruption needs K >= 2");
  const auto perm = permutation(y.size(), seed);
  Rng rng(sub_seed(seed, 1));
  std::vector<int> out = y;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = perm[k];
    if (mode == CorruptionMode::wrong_class) {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(K) - 2);
      int c = pick(rng);
      if (c >= y[i]) ++c;
      out[i] = c;
    } else {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(K) - 1);
      out[i] = pick(rng);
    }
  }
  return out;
}

void validate(const AugmentationSpec& spec) {
  if (const auto* j = std::get_if<GaussianJitter>(&spec); j && !(j->sigma >= 0.0))
    throw ValidationError("gaussian_jitter sigma must be >= 0");
  if (const auto* t = std::get_if<TranslateFlip>(&spec); t && t->max_shift < 0)
    throw ValidationError("translate_flip max_shift must be >= 0");
}

bool is_identity(const AugmentationSpec& spec) {
  if (std::holds_alternative<IdentityAug>(spec)) return true;
  if (const auto* j = std::get_if<GaussianJitter>(&spec)) return j->sigma == 0.0;
  const auto& t = std::get<TranslateFlip>(spec);
  return t.max_shift == 0 && !t.flip;
}

namespace {

std::size_t image_side(std::size_t d) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
  if (side * side != d || d == 0)
    throw DimensionError("image transform needs a square image, got " + std::to_string(d) + " values");
  return side;
}

}  // namespace

std::vector<double> translate_image(std::span<const double> x, int dx, int dy) {
  const auto side = static_cast<long>(image_side(x.size()));
  std::vector<double> out(x.size(), 0.0);
  for (long r = 0; r < side; ++r) {
    for (long c = 0; c < side; ++c) {
      const long sr = r - dy, sc = c - dx;
      if (sr >= 0 && sr < side && sc >= 0 && sc < side)
        out[static_cast<std::size_t>(r * side + c)] = x[static_cast<std::size_t>(sr * side + sc)];
    }
  }
  return out;
}

std::vector<double> flip_horizontal(std::span<const double> x) {
  const std::size_t side = image_side(x.size());
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) out[r * side + c] = x[r * side + (side - 1 - c)];
  return out;
}

std::vector<double> apply_augmentation(const AugmentationSpec& spec, std::span<const double> x,
                                       std::uint64_t seed) {
  validate(spec);
  Rng rng(seed);
  return std::visit(
      [&](const auto& s) -> std::vector<double> {
        using T = std::decay_t<decltype(s)>;
        std::vector<double> out(x.begin(), x.end());
        if constexpr (std::is_same_v<T, GaussianJitter>) {
          if (s.sigma > 0.0) {
            std::normal_distribution<double> noise(0.0, s.sigma);
            for (double& v : out) v += noise(rng);
          }
        } else if constexpr (std::is_same_v<T, TranslateFlip>) {
          image_side(x.size());
          std::uniform_int_distribution<int> shift(-s.max_shift, s.max_shift);
          const int dx = shift(rng), dy = shift(rng);
          if (dx != 0 || dy != 0) out = translate_image(out, dx, dy);
          if (s.flip && std::bernoulli_distribution(0.5)(rng)) out = flip_horizontal(out);
        }
        return out;
      },
      spec);
}

Matrix augment_rows(const AugmentationSpec& spec, const Matrix& X, std::uint64_t seed) {
  if (is_identity(spec)) return X;
  Matrix out(X.rows, X.cols);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto row = apply_augmentation(spec, X.row(i), sub_seed(seed, i));
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

BatchSchedule epoch_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
  const auto perm = permutation(n, seed);
  BatchSchedule s;
  s.batch_size = batch_size;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    s.batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                           perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return s;
}

BatchStream::BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), seed_(seed),
      schedule_(epoch_batches(n, batch_size, sub_seed(seed, 0))) {
  if (n == 0) throw ValidationError("BatchStream over an empty set");
}

const std::vector<std::size_t>& BatchStream::next() {
  if (pos_ == schedule_.batches.size()) {
    ++epoch_;
    schedule_ = epoch_batches(n_, batch_size_, sub_seed(seed_, epoch_));
    pos_ = 0;
  }
  return schedule_.batches[pos_++];
}

}  // namespace saas
