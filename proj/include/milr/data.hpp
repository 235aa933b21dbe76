#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "milr/autodiff.hpp"
#include "milr/rng.hpp"

namespace milr {

// Features are stored one sample per column (d x N), the layout the trainer consumes.
struct Dataset {
  Mat<double> features;
  std::vector<int> labels;
  std::vector<int> train_idx;
  std::vector<int> val_idx;
  int classes = 0;
  std::string source;

  int d() const { return static_cast<int>(features.rows()); }
  int n() const { return static_cast<int>(features.cols()); }
  void validate() const;
};

struct GaussianSpec {
  int d = 100;
  int per_class_train = 9000;
  int per_class_val = 1000;
  bool anisotropic = false;
  std::uint64_t seed = 0;
  double mean_scale = 1.0;  // class means ~ N(0, mean_scale^2 I)
};

Dataset gen_gaussian(const GaussianSpec& spec, Rng& rng);
Dataset gen_gaussian(const GaussianSpec& spec);

// IDX (big-endian; image magic 2051, label magic 2049); gzip-compressed files are
// read transparently. Every sample lands in the train split.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);
// Standard train files become the train split, test files the validation split.
Dataset load_mnist(const std::string& train_images, const std::string& train_labels, const std::string& test_images,
                   const std::string& test_labels);
// CIFAR-10 binary batches (label byte + 3072 pixel bytes per record), pixels scaled to [0,1].
Dataset load_cifar10_bin(const std::vector<std::string>& train_files, const std::string& test_file);

// MSE: one-hot columns (classes x N); cross-entropy: a 1 x N row of class indices.
Mat<double> encode_targets(const Dataset& ds, LossKind loss);
BatchD make_batch(const Dataset& ds, const std::vector<int>& idx, LossKind loss);

// Binary cache: "MILRDS01", then u64 counts (N, d, classes, n_train, n_val, source length),
// source bytes, int32 labels, int32 train indices, int32 val indices, float64 features
// column by column. Little-endian.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace milr
