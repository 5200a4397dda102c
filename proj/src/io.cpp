#include "ctlab/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ctlab {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::logic_error("format_double failed");
  return std::string(buf, end);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) throw IoError("not a number: '" + s + "'");
  return v;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("cannot write " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot write " + path.string() + ": " + ec.message());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix_csv(const std::filesystem::path& path, const Tensor& data) {
  std::string s;
  for (Index c = 0; c < data.cols(); ++c) {
    if (c > 0) s += ',';
    s += "dim" + std::to_string(c);
  }
  s += '\n';
  for (Index r = 0; r < data.rows(); ++r) {
    for (Index c = 0; c < data.cols(); ++c) {
      if (c > 0) s += ',';
      s += format_double(data(r, c));
    }
    s += '\n';
  }
  write_text_file(path, s);
}

Tensor read_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("dim0", 0) != 0) {
    throw IoError(path.string() + ": missing dim0,dim1,... header");
  }
  const Index cols = static_cast<Index>(std::count(line.begin(), line.end(), ',')) + 1;
  std::vector<double> vals;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::string cell;
    Index n = 0;
    while (std::getline(ls, cell, ',')) {
      vals.push_back(parse_double(cell));
      ++n;
    }
    if (n != cols) {
      throw IoError(path.string() + ": row " + std::to_string(rows + 1) + " has " + std::to_string(n) +
                    " fields, expected " + std::to_string(cols));
    }
    ++rows;
  }
  Tensor t(rows, cols);
  std::copy(vals.begin(), vals.end(), t.data());
  return t;
}

}  // namespace ctlab
