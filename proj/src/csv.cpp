#include "cdfag/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cdfag/error.hpp"

namespace cdfag::csv {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<KeyValue> parse_key_values(const std::string& text, ErrorCode error) {
  std::vector<KeyValue> out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no);
    if (eq == std::string::npos) throw Error(error, where + ": expected key = value");
    KeyValue kv{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (kv.key.empty()) throw Error(error, where + ": empty key");
    if (!seen.insert(kv.key).second) throw Error(error, where + ": duplicate key '" + kv.key + "'");
    out.push_back(std::move(kv));
  }
  return out;
}

double parse_double(const std::string& field, const std::string& context) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::ParseError, context + ": '" + field + "' is not a number");
  }
  return v;
}

int parse_int(const std::string& field, const std::string& context) {
  int v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::ParseError, context + ": '" + field + "' is not an integer");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return in;
}

}  // namespace

FeatureSet read_features(const std::string& path) {
  auto in = open(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, path + ": empty file");
  const auto header = split(line);
  if (header.empty() || header[0] != "label") {
    throw Error(ErrorCode::ParseError, path + ": header must start with 'label'");
  }
  const auto dim = static_cast<Index>(header.size() - 1);
  std::vector<std::vector<double>> rows;
  Labels labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split(line);
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (static_cast<Index>(fields.size()) != dim + 1) {
      throw Error(ErrorCode::ParseError, ctx + ": expected " + std::to_string(dim + 1) + " fields");
    }
    const int label = parse_int(fields[0], ctx);
    if (label < kUnlabeled) throw Error(ErrorCode::ParseError, ctx + ": bad label");
    labels.push_back(label);
    std::vector<double> row(static_cast<std::size_t>(dim));
    for (Index j = 0; j < dim; ++j) row[static_cast<std::size_t>(j)] = parse_double(fields[static_cast<std::size_t>(j + 1)], ctx);
    rows.push_back(std::move(row));
  }
  FeatureSet set;
  set.labels = std::move(labels);
  set.features.resize(static_cast<Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index j = 0; j < dim; ++j) set.features(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  if (!set.features.allFinite()) throw Error(ErrorCode::NonFiniteInput, path);
  return set;
}

void write_features(const std::string& path, const FeatureSet& set) {
  validate(set);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << "label";
  for (Index j = 0; j < set.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (Index i = 0; i < set.size(); ++i) {
    out << set.labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < set.dim(); ++j) out << ',' << format_double(set.features(i, j));
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path);
}

std::vector<encoding::DescriptorSet> read_descriptors(const std::string& path) {
  auto in = open(path);
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<double>>> groups;
  std::string line;
  std::size_t line_no = 0;
  Index dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split(line);
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (fields.size() < 2) throw Error(ErrorCode::ParseError, ctx + ": need id and values");
    if (line_no == 1) {
      double probe;
      const auto& f = fields[1];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), probe);
      if (ec != std::errc() || ptr != f.data() + f.size()) continue;  // header
    }
    const auto d = static_cast<Index>(fields.size() - 1);
    if (dim < 0) dim = d;
    if (d != dim) throw Error(ErrorCode::ParseError, ctx + ": inconsistent descriptor width");
    std::vector<double> row(static_cast<std::size_t>(d));
    for (Index j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = parse_double(fields[static_cast<std::size_t>(j + 1)], ctx);
    auto [it, fresh] = groups.try_emplace(fields[0]);
    if (fresh) order.push_back(fields[0]);
    it->second.push_back(std::move(row));
  }
  std::vector<encoding::DescriptorSet> out;
  for (const auto& id : order) {
    const auto& rows = groups[id];
    encoding::DescriptorSet set{id, Matrix(static_cast<Index>(rows.size()), dim)};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (Index j = 0; j < dim; ++j) set.descriptors(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
    if (!set.descriptors.allFinite()) throw Error(ErrorCode::NonFiniteInput, path + " video " + id);
    out.push_back(std::move(set));
  }
  return out;
}

std::vector<encoding::DescriptorSet> read_descriptor_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<encoding::DescriptorSet> out;
  for (const auto& f : files) {
    auto part = read_descriptors(f.string());
    for (auto& p : part) {
      if (!out.empty() && p.descriptors.cols() != out.front().descriptors.cols()) {
        throw Error(ErrorCode::ParseError, f.string() + ": descriptor width differs from earlier files");
      }
      out.push_back(std::move(p));
    }
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "no descriptors under " + dir);
  return out;
}

}  // namespace cdfag::csv
