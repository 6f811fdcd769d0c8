// Copyright 2026 The grnboost Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "grnboost/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "grnboost/common.hpp"

namespace grnboost {

namespace {

using Row = std::vector<std::string>;

// RFC 4180 records: comma separated, double-quoted fields may contain commas,
// newlines and doubled quotes. Returns (line number, fields) per record.
std::vector<std::pair<int, Row>> parse_records(const std::string& text,
                                               const std::string& source) {
  std::vector<std::pair<int, Row>> records;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  int line = 1;
  int record_line = 1;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = row.size() == 1 && row[0].empty();
    if (!blank) records.emplace_back(record_line, std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw DataError(source + ":" + std::to_string(line) +
                          ": stray quote inside unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) {
    throw DataError(source + ":" + std::to_string(line) +
                    ": unterminated quoted field");
  }
  if (!field.empty() || !row.empty()) end_record();
  return records;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

bool all_digits(const std::string& s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

void fnv_mix_u64(std::uint64_t& h, std::uint64_t v) { fnv_mix(h, &v, sizeof(v)); }

void fnv_mix_string(std::uint64_t& h, const std::string& s) {
  fnv_mix_u64(h, s.size());
  fnv_mix(h, s.data(), s.size());
}

std::vector<std::string> default_names(int q) {
  std::vector<std::string> names;
  for (int j = 0; j < q; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

}  // namespace

void check_targets(const Dataset& data, Task task, int classes) {
  for (std::size_t i = 0; i < data.targets.size(); ++i) {
    const double t = data.targets[i];
    const std::string where = "target of sample " + std::to_string(i);
    if (!std::isfinite(t)) throw DataError(where + " is not finite");
    if (task == Task::Binary && t != 0.0 && t != 1.0) {
      throw DataError(where + " is " + format_double(t) +
                      "; binary targets must be 0 or 1");
    }
    if (task == Task::Multiclass) {
      if (t < 0.0 || t != std::floor(t) || (classes > 0 && t >= classes)) {
        throw DataError(where + " is " + format_double(t) +
                        "; class targets must be integers in [0, " +
                        std::to_string(classes) + ")");
      }
    }
  }
}

Dataset parse_csv(std::istream& in, const CsvOptions& options,
                  const std::string& source) {
  const std::string text{std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>()};
  auto records = parse_records(text, source);
  if (records.empty()) throw DataError(source + ": empty file");

  std::vector<std::string> names;
  std::size_t first_data = 0;
  const std::size_t width = records[0].second.size();
  if (options.has_header) {
    for (const auto& n : records[0].second) names.push_back(trim(n));
    first_data = 1;
  } else {
    names = default_names(static_cast<int>(width));
  }
  if (width < 2) {
    throw DataError(source + ": need at least one feature and one target column");
  }
  if (records.size() <= first_data) throw DataError(source + ": no data rows");

  std::size_t target = width - 1;
  if (!options.target_column.empty()) {
    const auto it = std::find(names.begin(), names.end(), options.target_column);
    if (it != names.end()) {
      target = static_cast<std::size_t>(it - names.begin());
    } else if (all_digits(options.target_column) &&
               std::stoul(options.target_column) < width) {
      target = std::stoul(options.target_column);
    } else {
      throw DataError(source + ": target column '" + options.target_column +
                      "' not found");
    }
  }

  const int n = static_cast<int>(records.size() - first_data);
  const int q = static_cast<int>(width) - 1;
  Dataset data;
  data.target_name = names[target];
  for (std::size_t j = 0; j < width; ++j) {
    if (j != target) data.feature_names.push_back(names[j]);
  }
  std::vector<double> features;
  features.reserve(static_cast<std::size_t>(n) * q);
  data.targets.reserve(static_cast<std::size_t>(n));

  for (std::size_t r = first_data; r < records.size(); ++r) {
    const auto& [line, fields] = records[r];
    const std::string where = source + ":" + std::to_string(line);
    if (fields.size() != width) {
      throw DataError(where + ": expected " + std::to_string(width) +
                      " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < width; ++j) {
      const std::string cell = trim(fields[j]);
      const std::string column = "column '" + names[j] + "'";
      if (cell.empty()) throw DataError(where + ": missing value in " + column);
      double v = 0.0;
      try {
        v = parse_double(cell);
      } catch (const InvalidArgument&) {
        throw DataError(where + ": cannot parse '" + cell + "' in " + column);
      }
      if (!std::isfinite(v)) {
        throw DataError(where + ": non-finite value '" + cell + "' in " + column);
      }
      if (j == target) {
        data.targets.push_back(v);
      } else {
        features.push_back(v);
      }
    }
  }
  data.features = FeatureMatrix(n, q, std::move(features));
  check_targets(data, options.task, options.classes);
  return data;
}

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  return parse_csv(in, options, path);
}

void write_csv(const Dataset& data, std::ostream& out) {
  const int q = data.n_features();
  const auto names = data.feature_names.size() == static_cast<std::size_t>(q)
                         ? data.feature_names
                         : default_names(q);
  for (int j = 0; j < q; ++j) out << quote_if_needed(names[j]) << ',';
  out << quote_if_needed(data.target_name) << '\n';
  for (int i = 0; i < data.n_samples(); ++i) {
    for (int j = 0; j < q; ++j) out << full_precision(data.features(i, j)) << ',';
    out << full_precision(data.targets[i]) << '\n';
  }
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  write_csv(data, out);
  if (!out) throw DataError(path + ": write failed");
}

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "regression_smooth") return SynthKind::RegressionSmooth;
  if (name == "binary_blobs") return SynthKind::BinaryBlobs;
  if (name == "multiclass_blobs") return SynthKind::MulticlassBlobs;
  if (name == "charbonnier_wide") return SynthKind::CharbonnierWide;
  throw InvalidArgument("unknown synthetic dataset '" + name + "'");
}

std::string synth_kind_name(SynthKind kind) {
  switch (kind) {
    case SynthKind::RegressionSmooth:
      return "regression_smooth";
    case SynthKind::BinaryBlobs:
      return "binary_blobs";
    case SynthKind::MulticlassBlobs:
      return "multiclass_blobs";
    case SynthKind::CharbonnierWide:
      return "charbonnier_wide";
  }
  return "unknown";
}

Dataset synthesize(SynthKind kind, int n, int q, std::uint64_t seed,
                   int classes) {
  if (n < 2) throw InvalidArgument("synthesize: n must be >= 2");
  if (q < 1) throw InvalidArgument("synthesize: q must be >= 1");
  Rng rng(seed);
  Dataset data;
  data.feature_names = default_names(q);
  data.features = FeatureMatrix(n, q);
  data.targets.assign(static_cast<std::size_t>(n), 0.0);
  FeatureMatrix& x = data.features;
  auto feature = [&](int i, int j) { return j < q ? x(i, j) : 0.0; };

  switch (kind) {
    case SynthKind::RegressionSmooth:
      for (int i = 0; i < n; ++i) {
        double tail = 0.0;
        for (int j = 0; j < q; ++j) {
          x(i, j) = rng.uniform(-2.0, 2.0);
          if (j >= 2) tail += x(i, j) / (j + 1.0);
        }
        data.targets[i] = std::sin(std::numbers::pi * feature(i, 0) / 2.0) +
                          0.5 * feature(i, 1) * feature(i, 1) + 0.3 * tail +
                          0.1 * rng.normal();
      }
      break;
    case SynthKind::BinaryBlobs: {
      // Each class is a pair of blobs placed XOR-fashion in the first two
      // coordinates, with a weaker linear shift in the rest; classes overlap.
      std::vector<double> shift(static_cast<std::size_t>(q));
      for (double& s : shift) s = 0.4 * rng.normal();
      for (int i = 0; i < n; ++i) {
        const int label = i % 2;
        const double side = rng.below(2) == 0 ? -1.0 : 1.0;
        for (int j = 0; j < q; ++j) {
          double centre = 0.0;
          if (j == 0) centre = side;
          else if (j == 1) centre = label == 1 ? side : -side;
          else centre = label == 1 ? shift[j] : -shift[j];
          x(i, j) = centre + 0.9 * rng.normal();
        }
        data.targets[i] = label;
      }
      break;
    }
    case SynthKind::MulticlassBlobs: {
      if (classes < 2) throw InvalidArgument("synthesize: classes must be >= 2");
      std::vector<double> centres(static_cast<std::size_t>(classes) * q);
      for (double& c : centres) c = 1.5 * rng.normal();
      for (int i = 0; i < n; ++i) {
        const int label = i % classes;
        for (int j = 0; j < q; ++j) {
          x(i, j) = centres[static_cast<std::size_t>(label) * q + j] + rng.normal();
        }
        data.targets[i] = label;
      }
      break;
    }
    case SynthKind::CharbonnierWide:
      // |y| >= 2.4 by construction, so a zero or mean start leaves
      // residuals well outside [-1, 1].
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < q; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
        const double sign = feature(i, 0) <= 0.0 ? -1.0 : 1.0;
        data.targets[i] = sign * (3.0 + 2.0 * std::abs(feature(i, 1))) +
                          0.5 * feature(i, 2) + 0.1 * rng.uniform(-1.0, 1.0);
      }
      break;
  }
  return data;
}

Dataset subset(const Dataset& data, std::span<const int> rows) {
  const int q = data.n_features();
  std::vector<double> values;
  values.reserve(rows.size() * static_cast<std::size_t>(q));
  Dataset out;
  out.feature_names = data.feature_names;
  out.target_name = data.target_name;
  for (int r : rows) {
    if (r < 0 || r >= data.n_samples()) {
      throw InvalidArgument("subset: row index out of range");
    }
    const auto row = data.features.row(r);
    values.insert(values.end(), row.begin(), row.end());
    out.targets.push_back(data.targets[r]);
  }
  out.features = FeatureMatrix(static_cast<int>(rows.size()), q, std::move(values));
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double valid_fraction,
                                  std::uint64_t seed) {
  if (!(valid_fraction >= 0.0 && valid_fraction < 1.0)) {
    throw InvalidArgument("valid_fraction must lie in [0, 1)");
  }
  const int n = data.n_samples();
  const int n_valid = static_cast<int>(std::floor(n * valid_fraction + 1e-9));
  if (n - n_valid < 1) throw InvalidArgument("split leaves an empty training set");

  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> valid(perm.begin(), perm.begin() + n_valid);
  std::vector<int> train(perm.begin() + n_valid, perm.end());
  std::sort(valid.begin(), valid.end());
  std::sort(train.begin(), train.end());
  return {subset(data, train), subset(data, valid)};
}

std::uint64_t fingerprint(const Dataset& data) {
  std::uint64_t h = 14695981039346656037ULL;
  fnv_mix_u64(h, static_cast<std::uint64_t>(data.n_samples()));
  fnv_mix_u64(h, static_cast<std::uint64_t>(data.n_features()));
  for (const auto& name : data.feature_names) fnv_mix_string(h, name);
  fnv_mix_string(h, data.target_name);
  for (double v : data.features.values()) fnv_mix_u64(h, std::bit_cast<std::uint64_t>(v));
  for (double v : data.targets) fnv_mix_u64(h, std::bit_cast<std::uint64_t>(v));
  return h;
}

std::string fingerprint_hex(const Dataset& data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fingerprint(data)));
  return buf;
}

}  // namespace grnboost
