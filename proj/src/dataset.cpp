#include "mvreplay/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "mvreplay/rng.hpp"

namespace mvreplay {

namespace fs = std::filesystem;

namespace {

constexpr int kCifarSide = 32;
constexpr int kCifarChannels = 3;
constexpr std::size_t kCifarPixels = kCifarSide * kCifarSide * kCifarChannels;  // 3072
constexpr std::size_t kCifarRecord = kCifarPixels + 1;

void read_cifar_file(const fs::path& file, std::vector<LabeledExample>& out,
                     std::int64_t& next_id) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file: " + file.string());
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (bytes == 0 || bytes % kCifarRecord != 0) {
    throw std::runtime_error("malformed native-binary file (size " + std::to_string(bytes) +
                             " is not a multiple of " + std::to_string(kCifarRecord) +
                             "): " + file.string());
  }
  const std::size_t n = bytes / kCifarRecord;
  std::vector<unsigned char> record(kCifarRecord);
  out.reserve(out.size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(kCifarRecord));
    if (!in) throw std::runtime_error("unreadable record in " + file.string());
    LabeledExample ex;
    ex.id = next_id++;
    ex.label = HiddenLabel(record[0]);
    ex.image = Image(kCifarSide, kCifarSide, kCifarChannels);
    for (std::size_t p = 0; p < kCifarPixels; ++p) {
      ex.image.data[p] = static_cast<float>(record[p + 1]) / 255.0f;
    }
    out.push_back(std::move(ex));
  }
}

std::vector<LabeledExample> load_native_binary(const fs::path& path, Split split,
                                               std::int64_t id_base) {
  std::int64_t next_id = id_base;
  std::vector<LabeledExample> out;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    if (split == Split::train) {
      for (int i = 1; i <= 5; ++i) {
        fs::path f = path / ("data_batch_" + std::to_string(i) + ".bin");
        if (fs::exists(f)) files.push_back(f);
      }
    } else {
      fs::path f = path / "test_batch.bin";
      if (fs::exists(f)) files.push_back(f);
    }
    if (files.empty()) throw std::runtime_error("no examples found under " + path.string());
    for (const auto& f : files) read_cifar_file(f, out, next_id);
  } else if (fs::exists(path)) {
    read_cifar_file(path, out, next_id);
  } else {
    throw std::runtime_error("dataset path does not exist: " + path.string());
  }
  if (out.empty()) throw std::runtime_error("no examples found under " + path.string());
  return out;
}

std::vector<LabeledExample> load_image_directory(const fs::path& root, std::int64_t id_base) {
  if (!fs::is_directory(root)) {
    throw std::runtime_error("dataset path is not a directory: " + root.string());
  }
  std::map<std::string, std::vector<fs::path>> by_class;  // sorted class names
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    auto& files = by_class[entry.path().filename().string()];
    for (const auto& f : fs::directory_iterator(entry.path())) {
      if (f.is_regular_file()) files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
  }
  std::vector<LabeledExample> out;
  std::int64_t next_id = id_base;
  int class_id = 0;
  int expect_h = -1, expect_w = -1;
  for (const auto& [name, files] : by_class) {
    for (const auto& file : files) {
      cv::Mat bgr = cv::imread(file.string(), cv::IMREAD_COLOR);
      if (bgr.empty()) throw std::runtime_error("unreadable image file: " + file.string());
      if (expect_h < 0) {
        expect_h = bgr.rows;
        expect_w = bgr.cols;
      } else if (bgr.rows != expect_h || bgr.cols != expect_w) {
        throw std::runtime_error("inconsistent image dimensions: " + file.string());
      }
      LabeledExample ex;
      ex.id = next_id++;
      ex.label = HiddenLabel(class_id);
      ex.image = Image(bgr.rows, bgr.cols, 3);
      for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
          ex.image.at(0, y, x) = static_cast<float>(row[x][2]) / 255.0f;  // R
          ex.image.at(1, y, x) = static_cast<float>(row[x][1]) / 255.0f;  // G
          ex.image.at(2, y, x) = static_cast<float>(row[x][0]) / 255.0f;  // B
        }
      }
      out.push_back(std::move(ex));
    }
    ++class_id;
  }
  if (out.empty()) throw std::runtime_error("no examples found under " + root.string());
  return out;
}

}  // namespace

std::vector<LabeledExample> load_dataset(const fs::path& path, DatasetFormat format,
                                         Split split, std::int64_t id_base) {
  switch (format) {
    case DatasetFormat::native_binary:
      return load_native_binary(path, split, id_base);
    case DatasetFormat::image_directory:
      return load_image_directory(path, id_base);
  }
  throw std::invalid_argument("unknown dataset format");
}

std::vector<LabeledExample> subsample_per_class(const std::vector<LabeledExample>& examples,
                                                int per_class, std::uint64_t seed) {
  if (per_class <= 0) throw std::invalid_argument("subsample_per_class: per_class must be >= 1");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    by_class[examples[i].label.unseal()].push_back(i);
  }
  std::vector<std::size_t> keep;
  for (auto& [cls, idx] : by_class) {
    Rng rng = Rng::substream(seed, "subsample", static_cast<std::uint64_t>(cls));
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
    }
    const std::size_t take = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(per_class));
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(keep.begin(), keep.end());
  std::vector<LabeledExample> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(examples[i]);
  return out;
}

}  // namespace mvreplay
