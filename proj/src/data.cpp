#include "ordino/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "ordino/error.hpp"
#include "ordino/rng.hpp"

namespace ordino {

namespace fs = std::filesystem;

void DatasetSpec::validate() const {
  require(num_classes >= 2, ErrorCode::kInvalidArgument, "dataset needs at least two classes");
  require(label_values.empty() || label_values.size() == num_classes, ErrorCode::kInvalidArgument,
          "label_values must list one value per class");
  for (std::size_t i = 1; i < label_values.size(); ++i)
    require(label_values[i] > label_values[i - 1], ErrorCode::kInvalidArgument,
            "label_values must be strictly increasing");
  require(counts.size() == num_classes, ErrorCode::kInvalidArgument, "counts must list one count per class");
  for (std::size_t c : counts) require(c >= 1, ErrorCode::kInvalidArgument, "every class needs at least one sample");
  require(split.train >= 0 && split.val >= 0 && split.test >= 0 &&
              std::abs(split.train + split.val + split.test - 1.0) < 1e-9,
          ErrorCode::kInvalidArgument, "split fractions must be non-negative and sum to 1");
  require(image_size >= 2, ErrorCode::kInvalidArgument, "image_size must be at least 2");
}

std::vector<std::size_t> Dataset::histogram() const {
  std::vector<std::size_t> h(num_classes(), 0);
  for (const auto& s : samples) ++h.at(static_cast<std::size_t>(s.rank_index));
  return h;
}

Dataset Dataset::with_samples(std::vector<OrdinalSample> s) const {
  Dataset out;
  out.samples = std::move(s);
  out.label_values = label_values;
  out.image_height = image_height;
  out.image_width = image_width;
  out.channels = channels;
  out.hflip = hflip;
  return out;
}

Dataset generate_synthetic(const DatasetSpec& spec, double noise_sigma, std::uint64_t seed) {
  spec.validate();
  require(noise_sigma >= 0.0, ErrorCode::kInvalidArgument, "noise_sigma must be non-negative");
  const std::size_t m = spec.num_classes;
  const std::size_t size = spec.image_size;
  Dataset out;
  out.label_values = spec.label_values;
  if (out.label_values.empty())
    for (std::size_t i = 0; i < m; ++i) out.label_values.push_back(static_cast<double>(i));
  out.image_height = out.image_width = size;
  out.channels = 1;
  out.hflip = true;

  auto rng = make_rng(seed, "synthetic-noise");
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t band_lo = size / 4, band_hi = size - size / 4;
  for (std::size_t c = 0; c < m; ++c) {
    const double t = static_cast<double>(c) / static_cast<double>(m - 1);
    const double len = t * static_cast<double>(size);
    const double a = (static_cast<double>(size) - len) / 2.0, b = a + len;
    Image clean{size, size, 1, std::vector<double>(size * size, 0.0)};
    for (std::size_t y = band_lo; y < band_hi; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double cover = std::min(b, static_cast<double>(x + 1)) - std::max(a, static_cast<double>(x));
        clean.at(y, x, 0) = std::max(0.0, cover);
      }
    for (std::size_t i = 0; i < spec.counts[c]; ++i) {
      auto img = std::make_shared<Image>(clean);
      if (noise_sigma > 0.0)
        for (double& p : img->pixels) p += noise_sigma * noise(rng);
      OrdinalSample s;
      s.image = std::move(img);
      s.rank_index = static_cast<int>(c);
      s.rank_value = out.label_values[c];
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

namespace {

// Sample indices grouped by class, each group shuffled under the stream.
std::vector<std::vector<std::size_t>> shuffled_by_class(const Dataset& data, std::mt19937_64& rng) {
  std::vector<std::vector<std::size_t>> groups(data.num_classes());
  for (std::size_t i = 0; i < data.samples.size(); ++i)
    groups.at(static_cast<std::size_t>(data.samples[i].rank_index)).push_back(i);
  for (auto& g : groups) std::shuffle(g.begin(), g.end(), rng);
  return groups;
}

Dataset gather(const Dataset& data, std::vector<std::size_t> idx) {
  std::sort(idx.begin(), idx.end());
  std::vector<OrdinalSample> s;
  s.reserve(idx.size());
  for (std::size_t i : idx) s.push_back(data.samples[i]);
  return data.with_samples(std::move(s));
}

}  // namespace

DatasetSplits split_dataset(const Dataset& data, const SplitFractions& fractions, std::uint64_t seed) {
  require(std::abs(fractions.train + fractions.val + fractions.test - 1.0) < 1e-9, ErrorCode::kInvalidArgument,
          "split fractions must sum to 1");
  auto rng = make_rng(seed, "split");
  std::vector<std::size_t> tr, va, te;
  for (const auto& g : shuffled_by_class(data, rng)) {
    const auto n = static_cast<double>(g.size());
    const auto n_test = static_cast<std::size_t>(std::llround(fractions.test * n));
    const auto n_val = std::min(g.size() - n_test, static_cast<std::size_t>(std::llround(fractions.val * n)));
    for (std::size_t i = 0; i < g.size(); ++i) (i < n_test ? te : i < n_test + n_val ? va : tr).push_back(g[i]);
  }
  DatasetSplits out{gather(data, tr), gather(data, va), gather(data, te)};
  out.val.hflip = out.test.hflip = false;
  return out;
}

Dataset few_shot_subsample(const Dataset& data, std::size_t shots, std::uint64_t seed) {
  require(shots >= 1, ErrorCode::kInvalidArgument, "few-shot k must be at least 1");
  auto rng = make_rng(seed, "few-shot");
  std::vector<std::size_t> keep;
  for (const auto& g : shuffled_by_class(data, rng))
    keep.insert(keep.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(std::min(shots, g.size())));
  return gather(data, std::move(keep));
}

Dataset distribution_shift_subsample(const Dataset& data, std::size_t reduced_classes, double reduced_percent,
                                     std::uint64_t seed) {
  require(reduced_classes <= data.num_classes(), ErrorCode::kInvalidArgument,
          "cannot reduce more classes than the dataset has");
  require(reduced_percent >= 0.0 && reduced_percent <= 100.0, ErrorCode::kInvalidArgument,
          "reduced sample percentage must lie in [0, 100]");
  auto rng = make_rng(seed, "distribution-shift");
  std::vector<std::size_t> classes(data.num_classes());
  std::iota(classes.begin(), classes.end(), 0);
  std::shuffle(classes.begin(), classes.end(), rng);
  std::vector<bool> reduced(data.num_classes(), false);
  for (std::size_t i = 0; i < reduced_classes; ++i) reduced[classes[i]] = true;

  std::vector<std::size_t> keep;
  const auto groups = shuffled_by_class(data, rng);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& g = groups[c];
    std::size_t retain = g.size();
    if (reduced[c]) {
      // ceil(n (100 - p) / 100), guarded against representation error.
      const double exact = static_cast<double>(g.size()) * (100.0 - reduced_percent) / 100.0;
      retain = static_cast<std::size_t>(std::ceil(exact - 1e-9));
    }
    keep.insert(keep.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(retain));
  }
  return gather(data, std::move(keep));
}

std::pair<Dataset, Dataset> kfold_split(const Dataset& data, std::size_t folds, std::size_t fold_index,
                                        std::uint64_t seed) {
  require(folds >= 2, ErrorCode::kInvalidArgument, "k-fold needs k >= 2");
  require(fold_index < folds, ErrorCode::kOutOfRange, "fold index out of range");
  auto rng = make_rng(seed, "kfold");
  std::vector<std::size_t> train, test;
  std::size_t offset = 0;
  for (const auto& g : shuffled_by_class(data, rng)) {
    for (std::size_t i = 0; i < g.size(); ++i) ((offset + i) % folds == fold_index ? test : train).push_back(g[i]);
    offset += g.size();
  }
  auto out = std::make_pair(gather(data, train), gather(data, test));
  out.second.hflip = false;
  return out;
}

// ---------------------------------------------------------------------------
// Image files

namespace {

void skip_ws_and_comments(std::istream& is) {
  for (;;) {
    const int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      return;
    }
  }
}

std::size_t read_header_int(std::istream& is, const fs::path& path) {
  skip_ws_and_comments(is);
  long long v = -1;
  is >> v;
  require(static_cast<bool>(is) && v > 0, ErrorCode::kParse, "bad netpbm header in " + path.string());
  return static_cast<std::size_t>(v);
}

}  // namespace

Image read_netpbm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot open image " + path.string());
  char magic[2] = {0, 0};
  is.read(magic, 2);
  require(magic[0] == 'P' && (magic[1] == '2' || magic[1] == '3' || magic[1] == '5' || magic[1] == '6'),
          ErrorCode::kParse, "unsupported image format (need PGM/PPM): " + path.string());
  Image img;
  img.channels = (magic[1] == '3' || magic[1] == '6') ? 3 : 1;
  img.width = read_header_int(is, path);
  img.height = read_header_int(is, path);
  const std::size_t maxval = read_header_int(is, path);
  require(maxval <= 65535, ErrorCode::kParse, "bad netpbm maxval in " + path.string());
  const std::size_t n = img.width * img.height * img.channels;
  img.pixels.resize(n);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (magic[1] == '5' || magic[1] == '6') {
    is.get();
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(n * bytes);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(static_cast<std::size_t>(is.gcount()) == raw.size(), ErrorCode::kParse,
            "truncated image data in " + path.string());
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = bytes == 2 ? (raw[2 * i] << 8u) | raw[2 * i + 1] : raw[i];
      img.pixels[i] = v * scale;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      long long v = -1;
      is >> v;
      require(static_cast<bool>(is) && v >= 0, ErrorCode::kParse, "truncated image data in " + path.string());
      img.pixels[i] = static_cast<double>(v) * scale;
    }
  }
  return img;
}

void write_netpbm(const Image& image, const fs::path& path) {
  require(image.channels == 1 || image.channels == 3, ErrorCode::kInvalidArgument,
          "netpbm output needs 1 or 3 channels");
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot write image " + path.string());
  os << (image.channels == 1 ? "P5" : "P6") << "\n" << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> raw(image.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<unsigned char>(std::lround(255.0 * std::clamp(image.pixels[i], 0.0, 1.0)));
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

Image resize_bilinear(const Image& src, std::size_t height, std::size_t width) {
  if (src.height == height && src.width == width) return src;
  require(src.height > 0 && src.width > 0, ErrorCode::kInvalidArgument, "cannot resize an empty image");
  Image out{height, width, src.channels, std::vector<double>(height * width * src.channels)};
  const double sy = static_cast<double>(src.height) / static_cast<double>(height);
  const double sx = static_cast<double>(src.width) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx =
          std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < src.channels; ++c) {
        const double top = src.at(y0, x0, c) * (1 - wx) + src.at(y0, x1, c) * wx;
        const double bot = src.at(y1, x0, c) * (1 - wx) + src.at(y1, x1, c) * wx;
        out.at(y, x, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

Image convert_channels(const Image& src, std::size_t channels) {
  if (src.channels == channels) return src;
  require(channels == 1 || channels == 3, ErrorCode::kInvalidArgument, "only 1 or 3 channels are supported");
  Image out{src.height, src.width, channels, std::vector<double>(src.height * src.width * channels)};
  for (std::size_t p = 0; p < src.height * src.width; ++p) {
    if (channels == 1) {
      double s = 0.0;
      for (std::size_t c = 0; c < src.channels; ++c) s += src.pixels[p * src.channels + c];
      out.pixels[p] = s / static_cast<double>(src.channels);
    } else {
      for (std::size_t c = 0; c < 3; ++c) out.pixels[p * 3 + c] = src.pixels[p * src.channels];
    }
  }
  return out;
}

void flip_horizontal(Image& image) {
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width / 2; ++x)
      for (std::size_t c = 0; c < image.channels; ++c)
        std::swap(image.at(y, x, c), image.at(y, image.width - 1 - x, c));
}

Dataset load_image_folder(const fs::path& root, const fs::path& labels_file, std::span<const double> label_values,
                          std::size_t image_size, std::size_t channels) {
  require(label_values.size() >= 2, ErrorCode::kInvalidArgument, "at least two label values are required");
  require(image_size >= 2, ErrorCode::kInvalidArgument, "image_size must be at least 2");
  std::ifstream is(labels_file);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot open labels file " + labels_file.string());
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorCode::kParse, "labels file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "path,rank_value", ErrorCode::kParse, "labels file must start with header 'path,rank_value'");

  Dataset out;
  out.label_values.assign(label_values.begin(), label_values.end());
  out.image_height = out.image_width = image_size;
  out.channels = channels;
  out.hflip = true;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    require(comma != std::string::npos, ErrorCode::kParse, "labels row " + std::to_string(row) + ": expected 'path,rank_value'");
    const std::string rel = line.substr(0, comma);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(line.substr(comma + 1), &used);
      require(used == line.size() - comma - 1, ErrorCode::kParse, "trailing characters");
    } catch (const std::exception&) {
      fail(ErrorCode::kParse, "labels row " + std::to_string(row) + ": unparseable rank value '" +
                                  line.substr(comma + 1) + "'");
    }
    auto it = std::find_if(label_values.begin(), label_values.end(),
                           [value](double v) { return std::abs(v - value) < 1e-9; });
    require(it != label_values.end(), ErrorCode::kOutOfRange,
            "labels row " + std::to_string(row) + ": rank value " + line.substr(comma + 1) +
                " is outside the declared labels [" + std::to_string(label_values.front()) + ", " +
                std::to_string(label_values.back()) + "]");
    const fs::path full = root / rel;
    require(fs::exists(full), ErrorCode::kIo, "labels row " + std::to_string(row) + ": missing image " + full.string());
    OrdinalSample s;
    s.path = full;
    s.rank_index = static_cast<int>(it - label_values.begin());
    s.rank_value = *it;
    out.samples.push_back(std::move(s));
  }
  return out;
}

Image sample_pixels(const Dataset& data, const OrdinalSample& sample) {
  Image img = sample.image ? *sample.image : read_netpbm(sample.path);
  img = convert_channels(img, data.channels);
  return resize_bilinear(img, data.image_height, data.image_width);
}

void write_dataset(const Dataset& data, const fs::path& root) {
  fs::create_directories(root / "images");
  std::ofstream labels(root / "labels.csv");
  require(static_cast<bool>(labels), ErrorCode::kIo, "cannot write " + (root / "labels.csv").string());
  labels << "path,rank_value\n";
  const char* ext = data.channels == 1 ? ".pgm" : ".ppm";
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    std::ostringstream name;
    name << "images/" << i << ext;
    write_netpbm(sample_pixels(data, data.samples[i]), root / name.str());
    labels << name.str() << "," << data.samples[i].rank_value << "\n";
  }
}

}  // namespace ordino
