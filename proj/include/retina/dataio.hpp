/**
 * Copyright 2026 The Retina Screening Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef RETINA_DATAIO_HPP_
#define RETINA_DATAIO_HPP_

#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "retina/error.hpp"
#include "retina/image.hpp"

namespace retina {

inline constexpr int kNumGrades = 5;

/// DR severity level, 0 (none) through 4 (proliferative).
class Grade {
 public:
  constexpr Grade() = default;

  static Grade from_int(int value) {
    if (value < 0 || value >= kNumGrades) {
      fail(ErrorKind::MalformedRow, "grade " + std::to_string(value) + " outside 0-4");
    }
    return Grade(value);
  }

  constexpr int value() const { return value_; }
  constexpr auto operator<=>(const Grade&) const = default;

 private:
  constexpr explicit Grade(int value) : value_(value) {}
  int value_ = 0;
};

enum class EyeSide { left, right };

constexpr std::string_view to_string(EyeSide eye) { return eye == EyeSide::left ? "left" : "right"; }

struct ImageId {
  std::uint64_t patient = 0;
  EyeSide eye = EyeSide::left;

  std::string str() const { return std::to_string(patient) + "_" + std::string(to_string(eye)); }
  auto operator<=>(const ImageId&) const = default;
};

/// Parses "<patient>_<left|right>", splitting on the final underscore.
inline ImageId parse_image_id(std::string_view stem) {
  const auto bad = [&] { fail(ErrorKind::MalformedId, "'" + std::string(stem) + "'"); };
  const auto cut = stem.rfind('_');
  if (cut == std::string_view::npos || cut == 0) bad();
  const std::string_view number = stem.substr(0, cut);
  const std::string_view side = stem.substr(cut + 1);

  ImageId id;
  const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), id.patient);
  if (ec != std::errc{} || end != number.data() + number.size()) bad();
  if (side == "left") {
    id.eye = EyeSide::left;
  } else if (side == "right") {
    id.eye = EyeSide::right;
  } else {
    bad();
  }
  return id;
}

struct LabeledImage {
  ImageId id;
  Grade grade;
  Image pixels;
};

class LabelManifest {
 public:
  /// Throws DuplicateId if the id is already present.
  void add(const ImageId& id, Grade grade) {
    if (!entries_.emplace(id, grade).second) fail(ErrorKind::DuplicateId, id.str());
    ++counts_[static_cast<std::size_t>(grade.value())];
  }

  const std::map<ImageId, Grade>& entries() const { return entries_; }
  const std::array<std::size_t, kNumGrades>& counts() const { return counts_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(const ImageId& id) const { return entries_.contains(id); }
  Grade grade(const ImageId& id) const { return entries_.at(id); }

  friend bool operator==(const LabelManifest&, const LabelManifest&) = default;

 private:
  std::map<ImageId, Grade> entries_;
  std::array<std::size_t, kNumGrades> counts_{};
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Reads a "image,level" labels CSV.
inline LabelManifest load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::MissingFile, path.string());

  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::MalformedRow, path.string() + ": missing header");
  std::string_view header = detail::trim(line);
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  if (header != "image,level") {
    fail(ErrorKind::MalformedRow, path.string() + ": expected header 'image,level'");
  }

  LabelManifest manifest;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    const auto cols = detail::split(line);
    if (cols.size() != 2) fail(ErrorKind::MalformedRow, where + ": expected 2 columns");

    ImageId id;
    try {
      id = parse_image_id(cols[0]);
    } catch (const Error& e) {
      fail(ErrorKind::MalformedRow, where + ": " + e.what());
    }
    int level = -1;
    const auto [end, ec] = std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), level);
    if (ec != std::errc{} || end != cols[1].data() + cols[1].size()) {
      fail(ErrorKind::MalformedRow, where + ": unparsable grade '" + std::string(cols[1]) + "'");
    }
    if (level < 0 || level >= kNumGrades) {
      fail(ErrorKind::MalformedRow, where + ": grade " + std::to_string(level) + " outside 0-4");
    }
    manifest.add(id, Grade::from_int(level));
  }
  return manifest;
}

inline void save_labels(const LabelManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << "image,level\n";
  for (const auto& [id, grade] : manifest.entries()) out << id.str() << ',' << grade.value() << '\n';
  if (!out) fail(ErrorKind::IoError, "write failed: " + path.string());
}

/// Decodes a PNG or JPEG into RGB unit-interval intensities (v / 255).
inline Image load_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) fail(ErrorKind::MissingFile, path.string());

  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) fail(ErrorKind::DecodeError, path.string() + ": empty file");

  cv::Mat decoded;
  try {
    decoded = cv::imdecode(bytes, cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    decoded.release();
  }
  if (decoded.empty() || decoded.type() != CV_8UC3) fail(ErrorKind::DecodeError, path.string());

  Image img(decoded.rows, decoded.cols);
  for (int r = 0; r < decoded.rows; ++r) {
    const auto* row = decoded.ptr<cv::Vec3b>(r);
    for (int c = 0; c < decoded.cols; ++c) {
      // OpenCV stores BGR.
      img.set_rgb(r, c, row[c][2] / 255.0f, row[c][1] / 255.0f, row[c][0] / 255.0f);
    }
  }
  return img;
}

/// Writes an 8-bit PNG, rounding each intensity to the nearest v / 255.
inline void save_png(const Image& img, const std::filesystem::path& path) {
  cv::Mat mat(img.height(), img.width(), CV_8UC3);
  const auto quantize = [](float v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  };
  for (int r = 0; r < img.height(); ++r) {
    auto* row = mat.ptr<cv::Vec3b>(r);
    for (int c = 0; c < img.width(); ++c) {
      row[c] = cv::Vec3b(quantize(img.at(r, c, 2)), quantize(img.at(r, c, 1)), quantize(img.at(r, c, 0)));
    }
  }
  std::vector<unsigned char> buffer;
  if (!cv::imencode(".png", mat, buffer)) fail(ErrorKind::IoError, "PNG encode failed: " + path.string());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
}

inline bool is_image_extension(std::string ext) {
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

struct ImageFile {
  ImageId id;
  std::filesystem::path path;
};

/// Lists "<patient>_<eye>.<png|jpg|jpeg>" files in a directory, sorted by id.
/// Anything else is skipped with a warning on `log`.
inline std::vector<ImageFile> list_image_files(const std::filesystem::path& dir, std::ostream& log = std::cerr) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) fail(ErrorKind::MissingFile, dir.string());
  std::map<ImageId, std::filesystem::path> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto& p = entry.path();
    if (p.filename() == "labels.csv" || p.filename() == "provenance.toml") continue;
    if (!is_image_extension(p.extension().string())) {
      log << "warning: skipping " << p.filename().string() << " (not an image)\n";
      continue;
    }
    try {
      const ImageId id = parse_image_id(p.stem().string());
      if (!found.emplace(id, p).second) log << "warning: skipping duplicate " << p.filename().string() << "\n";
    } catch (const Error&) {
      log << "warning: skipping " << p.filename().string() << " (unrecognised name)\n";
    }
  }
  std::vector<ImageFile> files;
  files.reserve(found.size());
  for (auto& [id, path] : found) files.push_back({id, path});
  return files;
}

}  // namespace retina

#endif  // RETINA_DATAIO_HPP_
