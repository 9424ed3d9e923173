#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ordino {

// HWC pixels.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;

  std::size_t size() const { return pixels.size(); }
  double& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }
};

// A sample carries either decoded pixels or a file reference decoded on use.
struct OrdinalSample {
  std::shared_ptr<const Image> image;
  std::filesystem::path path;
  int rank_index = 0;
  double rank_value = 0.0;
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.0;
  double test = 0.2;
};

struct DatasetSpec {
  std::size_t num_classes = 0;
  std::vector<double> label_values;  // defaults to 0..M-1 when empty
  std::vector<std::size_t> counts;   // per class
  SplitFractions split;
  std::uint64_t seed = 0;
  std::size_t image_size = 32;

  void validate() const;
};

struct Dataset {
  std::vector<OrdinalSample> samples;
  std::vector<double> label_values;
  std::size_t image_height = 0;
  std::size_t image_width = 0;
  std::size_t channels = 1;
  // Random horizontal flips while training on this set.
  bool hflip = false;

  std::size_t size() const { return samples.size(); }
  std::size_t num_classes() const { return label_values.size(); }
  std::size_t pixels_per_image() const { return image_height * image_width * channels; }
  std::vector<std::size_t> histogram() const;
  // Copy of the metadata with the given samples.
  Dataset with_samples(std::vector<OrdinalSample> samples) const;
};

// Each image renders the latent t = rank/(M-1) as a horizontally centred bar
// (anti-aliased, length t * width) across the middle half of the rows, plus
// i.i.d. Gaussian pixel noise.
Dataset generate_synthetic(const DatasetSpec& spec, double noise_sigma, std::uint64_t seed);

struct DatasetSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Stratified split by class; evaluation splits never flip.
DatasetSplits split_dataset(const Dataset& data, const SplitFractions& fractions, std::uint64_t seed);

// Labels CSV "path,rank_value" (paths relative to root). Images are decoded
// lazily and resized to image_size × image_size.
Dataset load_image_folder(const std::filesystem::path& root, const std::filesystem::path& labels_file,
                          std::span<const double> label_values, std::size_t image_size, std::size_t channels = 3);

// Pixels of a sample at the dataset geometry (decoding and resizing if needed).
Image sample_pixels(const Dataset& data, const OrdinalSample& sample);

Dataset few_shot_subsample(const Dataset& data, std::size_t shots, std::uint64_t seed);
Dataset distribution_shift_subsample(const Dataset& data, std::size_t reduced_classes, double reduced_percent,
                                     std::uint64_t seed);
std::pair<Dataset, Dataset> kfold_split(const Dataset& data, std::size_t folds, std::size_t fold_index,
                                        std::uint64_t seed);

// images/<index>.pgm|ppm plus labels.csv at root.
void write_dataset(const Dataset& data, const std::filesystem::path& root);

// Netpbm (P2/P3/P5/P6) I/O, pixel values scaled to [0, 1].
Image read_netpbm(const std::filesystem::path& path);
void write_netpbm(const Image& image, const std::filesystem::path& path);
Image resize_bilinear(const Image& src, std::size_t height, std::size_t width);
Image convert_channels(const Image& src, std::size_t channels);
void flip_horizontal(Image& image);

}  // namespace ordino
