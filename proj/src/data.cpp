#include "milr/data.hpp"
#include "milr/sharpness.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <memory>

namespace milr {

void Dataset::validate() const {
  if (static_cast<int>(labels.size()) != n()) throw DataError("dataset: label count does not match sample count");
  std::vector<char> seen(n(), 0);
  for (const auto* split : {&train_idx, &val_idx})
    for (int i : *split) {
      if (i < 0 || i >= n()) throw DataError("dataset: split index out of range");
      if (seen[i]++) throw DataError("dataset: splits overlap at sample " + std::to_string(i));
    }
  for (int i = 0; i < n(); ++i)
    if (!seen[i]) throw DataError("dataset: sample " + std::to_string(i) + " in no split");
  for (int c : labels)
    if (c < 0 || c >= classes) throw DataError("dataset: label out of range");
  if (!features.allFinite()) throw DataError("dataset: non-finite features");
}

Dataset gen_gaussian(const GaussianSpec& spec, Rng& rng) {
  if (spec.d < 1 || spec.per_class_train < 1 || spec.per_class_val < 1)
    throw ConfigError("gaussian spec: counts and dimension must be positive");
  const int d = spec.d, per = spec.per_class_train + spec.per_class_val;
  Dataset ds;
  ds.classes = 2;
  ds.source = std::string(spec.anisotropic ? "gaussian-anisotropic" : "gaussian-isotropic") +
              " d=" + std::to_string(d) + " seed=" + std::to_string(rng.seed());
  ds.features.resize(d, 2 * per);
  std::vector<Vec<double>> means(2);
  std::vector<Mat<double>> factors(2);
  for (int c = 0; c < 2; ++c) means[c] = spec.mean_scale * gaussian_vector<double>(d, rng);
  if (spec.anisotropic)
    for (int c = 0; c < 2; ++c) {
      // covariance A A^T / d with A standard normal: PSD by construction
      factors[c].resize(d, d);
      for (int j = 0; j < d; ++j) factors[c].col(j) = gaussian_vector<double>(d, rng);
      factors[c] /= std::sqrt(double(d));
    }
  int col = 0;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < per; ++i, ++col) {
      Vec<double> e = gaussian_vector<double>(d, rng);
      ds.features.col(col) = means[c] + (spec.anisotropic ? Vec<double>(factors[c] * e) : e);
      ds.labels.push_back(c);
      (i < spec.per_class_train ? ds.train_idx : ds.val_idx).push_back(col);
    }
  return ds;
}

Dataset gen_gaussian(const GaussianSpec& spec) {
  Rng rng(spec.seed);
  return gen_gaussian(spec, rng);
}

namespace {

class GzFile {
 public:
  explicit GzFile(const std::string& path) : path_(path), f_(gzopen(path.c_str(), "rb")) {
    if (!f_) throw DataError("cannot open " + path);
  }
  ~GzFile() { gzclose(f_); }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;

  void read(void* buf, std::size_t n, const char* what) {
    auto* p = static_cast<unsigned char*>(buf);
    while (n > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
      const int got = gzread(f_, p, chunk);
      if (got <= 0) throw DataError(path_ + ": truncated " + what);
      p += got;
      n -= static_cast<std::size_t>(got);
    }
  }
  std::uint32_t be32(const char* what) {
    unsigned char b[4];
    read(b, 4, what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | b[3];
  }
  int try_read(void* buf, unsigned n) { return gzread(f_, buf, n); }

 private:
  std::string path_;
  gzFile f_;
};

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  GzFile img(images_path), lab(labels_path);
  const std::uint32_t im = img.be32("header");
  if (im != 2051) throw DataError(images_path + ": bad image magic " + std::to_string(im) + " (expected 2051)");
  const std::uint32_t lm = lab.be32("header");
  if (lm != 2049) throw DataError(labels_path + ": bad label magic " + std::to_string(lm) + " (expected 2049)");
  const std::uint32_t n = img.be32("header"), rows = img.be32("header"), cols = img.be32("header");
  const std::uint32_t nl = lab.be32("header");
  if (n != nl)
    throw DataError("count mismatch: " + std::to_string(n) + " images vs " + std::to_string(nl) + " labels");
  const std::size_t dim = std::size_t(rows) * cols;
  std::vector<unsigned char> pix(dim * n), lbl(n);
  img.read(pix.data(), pix.size(), "image payload");
  lab.read(lbl.data(), lbl.size(), "label payload");
  Dataset ds;
  ds.source = images_path;
  ds.features.resize(static_cast<Eigen::Index>(dim), n);
  int maxc = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) ds.features(j, i) = pix[i * dim + j] / 255.0;
    ds.labels.push_back(lbl[i]);
    maxc = std::max<int>(maxc, lbl[i]);
    ds.train_idx.push_back(static_cast<int>(i));
  }
  ds.classes = std::max(10, maxc + 1);
  return ds;
}

namespace {

Dataset concat_as_splits(const Dataset& tr, const Dataset& te) {
  if (tr.d() != te.d()) throw DataError("train/test feature dimensions differ");
  Dataset ds;
  ds.classes = std::max(tr.classes, te.classes);
  ds.source = tr.source + "+" + te.source;
  ds.features.resize(tr.d(), tr.n() + te.n());
  ds.features << tr.features, te.features;
  ds.labels = tr.labels;
  ds.labels.insert(ds.labels.end(), te.labels.begin(), te.labels.end());
  for (int i = 0; i < tr.n(); ++i) ds.train_idx.push_back(i);
  for (int i = 0; i < te.n(); ++i) ds.val_idx.push_back(tr.n() + i);
  return ds;
}

Dataset load_cifar_file(const std::string& path) {
  GzFile f(path);
  Dataset ds;
  ds.classes = 10;
  ds.source = path;
  std::vector<Vec<double>> cols;
  unsigned char rec[3073];
  for (;;) {
    const int got = f.try_read(rec, sizeof rec);
    if (got == 0) break;
    if (got != static_cast<int>(sizeof rec)) throw DataError(path + ": truncated record");
    if (rec[0] > 9) throw DataError(path + ": label byte out of range");
    Vec<double> x(3072);
    for (int j = 0; j < 3072; ++j) x[j] = rec[j + 1] / 255.0;
    cols.push_back(std::move(x));
    ds.labels.push_back(rec[0]);
  }
  ds.features.resize(3072, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    ds.features.col(static_cast<Eigen::Index>(i)) = cols[i];
    ds.train_idx.push_back(static_cast<int>(i));
  }
  return ds;
}

}  // namespace

Dataset load_mnist(const std::string& train_images, const std::string& train_labels, const std::string& test_images,
                   const std::string& test_labels) {
  auto ds = concat_as_splits(load_mnist_idx(train_images, train_labels), load_mnist_idx(test_images, test_labels));
  ds.source += " (validation = standard test split)";
  return ds;
}

Dataset load_cifar10_bin(const std::vector<std::string>& train_files, const std::string& test_file) {
  if (train_files.empty()) throw ConfigError("cifar10: no training batches given");
  Dataset tr = load_cifar_file(train_files[0]);
  for (std::size_t i = 1; i < train_files.size(); ++i) {
    Dataset more = load_cifar_file(train_files[i]);
    Dataset joined = concat_as_splits(tr, more);
    joined.train_idx.insert(joined.train_idx.end(), joined.val_idx.begin(), joined.val_idx.end());
    joined.val_idx.clear();
    tr = std::move(joined);
  }
  return concat_as_splits(tr, load_cifar_file(test_file));
}

Mat<double> encode_targets(const Dataset& ds, LossKind loss) {
  for (int c : ds.labels)
    if (c < 0 || c >= ds.classes) throw DataError("encode_targets: class index " + std::to_string(c) + " out of range");
  if (loss == LossKind::CrossEntropy) {
    Mat<double> t(1, ds.n());
    for (int i = 0; i < ds.n(); ++i) t(0, i) = ds.labels[i];
    return t;
  }
  Mat<double> t = Mat<double>::Zero(ds.classes, ds.n());
  for (int i = 0; i < ds.n(); ++i) t(ds.labels[i], i) = 1.0;
  return t;
}

BatchD make_batch(const Dataset& ds, const std::vector<int>& idx, LossKind loss) {
  BatchD b;
  b.inputs.resize(ds.d(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) b.inputs.col(static_cast<Eigen::Index>(j)) = ds.features.col(idx[j]);
  if (loss == LossKind::CrossEntropy) {
    b.labels.reserve(idx.size());
    for (int i : idx) b.labels.push_back(ds.labels[i]);
  } else {
    b.targets = Mat<double>::Zero(ds.classes, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) b.targets(ds.labels[idx[j]], static_cast<Eigen::Index>(j)) = 1.0;
  }
  return b;
}

namespace {

void put_u64(std::ostream& o, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  o.write(reinterpret_cast<const char*>(b), 8);
}
std::uint64_t get_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError(path + ": truncated cache header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}
void put_ints(std::ostream& o, const std::vector<int>& v) {
  for (int x : v) {
    const auto u = static_cast<std::uint32_t>(x);
    unsigned char b[4] = {static_cast<unsigned char>(u), static_cast<unsigned char>(u >> 8),
                          static_cast<unsigned char>(u >> 16), static_cast<unsigned char>(u >> 24)};
    o.write(reinterpret_cast<const char*>(b), 4);
  }
}
std::vector<int> get_ints(std::istream& in, std::uint64_t n, const std::string& path) {
  std::vector<int> v(n);
  for (auto& x : v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError(path + ": truncated cache payload");
    x = static_cast<int>(std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
                         std::uint32_t(b[3]) << 24);
  }
  return v;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw DataError("cannot write " + path);
  o.write("MILRDS01", 8);
  for (std::uint64_t v : {std::uint64_t(ds.n()), std::uint64_t(ds.d()), std::uint64_t(ds.classes),
                          std::uint64_t(ds.train_idx.size()), std::uint64_t(ds.val_idx.size()),
                          std::uint64_t(ds.source.size())})
    put_u64(o, v);
  o.write(ds.source.data(), static_cast<std::streamsize>(ds.source.size()));
  put_ints(o, ds.labels);
  put_ints(o, ds.train_idx);
  put_ints(o, ds.val_idx);
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, ds.features.data() + i, 8);
    put_u64(o, bits);
  }
  if (!o) throw DataError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, "MILRDS01", 8) != 0) throw DataError(path + ": not a dataset cache");
  const auto n = get_u64(in, path), d = get_u64(in, path), classes = get_u64(in, path);
  const auto ntr = get_u64(in, path), nva = get_u64(in, path), slen = get_u64(in, path);
  if (n > (1ull << 31) || d > (1ull << 24) || ntr + nva != n || slen > (1u << 20))
    throw DataError(path + ": inconsistent cache header");
  Dataset ds;
  ds.classes = static_cast<int>(classes);
  ds.source.resize(slen);
  if (!in.read(ds.source.data(), static_cast<std::streamsize>(slen))) throw DataError(path + ": truncated cache");
  ds.labels = get_ints(in, n, path);
  ds.train_idx = get_ints(in, ntr, path);
  ds.val_idx = get_ints(in, nva, path);
  ds.features.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) {
    const std::uint64_t bits = get_u64(in, path);
    std::memcpy(ds.features.data() + i, &bits, 8);
  }
  ds.validate();
  return ds;
}

}  // namespace milr
