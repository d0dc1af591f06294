#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace sparse4d {

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary file and rename, creating parent
/// directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

/// Splits on `sep`, keeping empty fields.
std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

/// Strict numeric parse; throws MalformedFile mentioning `context`.
double parse_double(std::string_view s, const std::string& context);
long long parse_int(std::string_view s, const std::string& context);

struct NumericTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;  // rows x header.size()
};

/// Comma-separated table with one header line. Errors carry line numbers.
NumericTable read_numeric_csv(const std::filesystem::path& path);
NumericTable parse_numeric_csv(const std::string& text, const std::string& source);
std::string format_numeric_csv(const NumericTable& table);
void write_numeric_csv(const NumericTable& table, const std::filesystem::path& path);

/// `prefix_0,prefix_1,...`
std::vector<std::string> indexed_header(const std::string& prefix, std::size_t n);

}  // namespace sparse4d
