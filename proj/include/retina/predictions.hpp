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
#ifndef RETINA_PREDICTIONS_HPP_
#define RETINA_PREDICTIONS_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "retina/dataio.hpp"
#include "retina/error.hpp"
#include "retina/nnet.hpp"

namespace retina {

/// Per-image class probabilities plus the grade reported for it.
struct PredictionRow {
  ProbabilityVector probabilities{};
  Grade level;
};

using PredictionTable = std::map<ImageId, PredictionRow>;

/// Reads "image,p0,p1,p2,p3,p4[,level]". Without a level column the grade
/// is the argmax of the probabilities.
inline PredictionTable load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::MissingFile, path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::MalformedRow, path.string() + ": missing header");
  std::string_view header = detail::trim(line);
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  bool has_level = false;
  if (header == "image,p0,p1,p2,p3,p4,level") {
    has_level = true;
  } else if (header != "image,p0,p1,p2,p3,p4") {
    fail(ErrorKind::MalformedRow, path.string() + ": expected header 'image,p0,p1,p2,p3,p4[,level]'");
  }

  PredictionTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    const auto cols = detail::split(line);
    if (cols.size() != (has_level ? 7u : 6u)) fail(ErrorKind::MalformedRow, where + ": wrong column count");
    ImageId id;
    try {
      id = parse_image_id(cols[0]);
    } catch (const Error& e) {
      fail(ErrorKind::MalformedRow, where + ": " + e.what());
    }
    PredictionRow row;
    for (int k = 0; k < kNumGrades; ++k) {
      const std::string cell(cols[static_cast<std::size_t>(k) + 1]);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !(v >= 0.0 && v <= 1.0)) {
        fail(ErrorKind::MalformedRow, where + ": bad probability '" + cell + "'");
      }
      row.probabilities[static_cast<std::size_t>(k)] = v;
    }
    if (has_level) {
      const std::string cell(cols[6]);
      if (cell.size() != 1 || cell[0] < '0' || cell[0] > '4') {
        fail(ErrorKind::MalformedRow, where + ": bad level '" + cell + "'");
      }
      row.level = Grade::from_int(cell[0] - '0');
    } else {
      row.level = predicted_grade(row.probabilities);
    }
    if (!table.emplace(id, row).second) fail(ErrorKind::DuplicateId, where + ": " + id.str());
  }
  return table;
}

inline void save_predictions(const PredictionTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << "image,p0,p1,p2,p3,p4,level\n";
  char buf[32];
  for (const auto& [id, row] : table) {
    out << id.str();
    for (const double p : row.probabilities) {
      std::snprintf(buf, sizeof buf, "%.9g", p);
      out << ',' << buf;
    }
    out << ',' << row.level.value() << '\n';
  }
  if (!out) fail(ErrorKind::IoError, "write failed: " + path.string());
}

}  // namespace retina

#endif  // RETINA_PREDICTIONS_HPP_
