#pragma once

#include "ctlab/tensor.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctlab {

/// Raised for unreadable/unwritable files and malformed file contents.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal that parses back to the same double ('.' separator).
std::string format_double(double v);
double parse_double(const std::string& s);

/// CSV with header `dim0,dim1,...`, one row per line, '\n' endings.
void write_matrix_csv(const std::filesystem::path& path, const Tensor& data);
Tensor read_matrix_csv(const std::filesystem::path& path);

/// Writes `content` to `path` via a temporary file so readers never see a
/// partial file.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ctlab
