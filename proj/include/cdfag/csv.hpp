#pragma once

// Text formats exchanged with external tooling.
//
// Feature files: header `label,f0,...,f{D-1}`, one sample per row, label a
// non-negative class id or -1 for unlabeled.
// Descriptor files: no header required, `video_id,v0,...,v{d-1}` per row.

#include <string>
#include <vector>

#include "cdfag/encoding.hpp"
#include "cdfag/error.hpp"
#include "cdfag/types.hpp"

namespace cdfag::csv {

FeatureSet read_features(const std::string& path);
void write_features(const std::string& path, const FeatureSet& set);

/// Groups rows by video id in order of first appearance. A first row whose
/// second field is not numeric is treated as a header and skipped.
std::vector<encoding::DescriptorSet> read_descriptors(const std::string& path);

/// All `*.csv` files of a directory in lexicographic order, concatenated.
std::vector<encoding::DescriptorSet> read_descriptor_dir(const std::string& dir);

std::vector<std::string> split(const std::string& line, char sep = ',');
double parse_double(const std::string& field, const std::string& context);
int parse_int(const std::string& field, const std::string& context);
std::string format_double(double v);

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// `key = value` lines with `#` comments and blank lines skipped. Malformed
/// lines and repeated keys throw `error` naming the line.
std::vector<KeyValue> parse_key_values(const std::string& text, ErrorCode error);

}  // namespace cdfag::csv
