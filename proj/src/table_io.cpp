#include "sparse4d/table_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sparse4d/error.hpp"

namespace sparse4d {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw InvalidArgument("cannot format value");
  return std::string(buf, end);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view s, const std::string& context) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw MalformedFile(context + ": not a number '" + std::string(s) + "'");
  return v;
}

long long parse_int(std::string_view s, const std::string& context) {
  s = trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw MalformedFile(context + ": not an integer '" + std::string(s) + "'");
  return v;
}

NumericTable parse_numeric_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  NumericTable table;
  if (!std::getline(in, line)) throw MalformedFile(source + ": missing header");
  for (auto& h : split(trim(line), ',')) table.header.emplace_back(trim(h));
  const auto cols = table.header.size();
  std::vector<double> flat;
  std::size_t rows = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    const std::string ctx = source + ":" + std::to_string(line_no);
    if (fields.size() != cols)
      throw MalformedFile(ctx + ": expected " + std::to_string(cols) + " fields, got " +
                          std::to_string(fields.size()));
    for (const auto& f : fields) flat.push_back(parse_double(f, ctx));
    ++rows;
  }
  table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * cols + c];
  return table;
}

NumericTable read_numeric_csv(const fs::path& path) {
  return parse_numeric_csv(read_file(path), path.string());
}

std::string format_numeric_csv(const NumericTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      if (c) out += ',';
      out += format_double(table.values(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_numeric_csv(const NumericTable& table, const fs::path& path) {
  write_file_atomic(path, format_numeric_csv(table));
}

std::vector<std::string> indexed_header(const std::string& prefix, std::size_t n) {
  std::vector<std::string> h;
  h.reserve(n);
  for (std::size_t i = 0; i < n; ++i) h.push_back(prefix + "_" + std::to_string(i));
  return h;
}

}  // namespace sparse4d
