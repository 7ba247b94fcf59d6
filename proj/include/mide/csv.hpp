#pragma once

#include <string>
#include <vector>

namespace mide::csv {

/// Split one CSV line on commas. No quoting support; the file formats
/// used here never contain embedded commas.
std::vector<std::string> split(const std::string& line);

/// Strict double parse; throws input_error on garbage, empty fields or
/// trailing characters. Accepts "inf" / "-inf".
double parse_double(const std::string& field, const std::string& context);

/// Strict integer parse with the same error behavior.
long long parse_int(const std::string& field, const std::string& context);

/// Render a double for CSV output. Round-trip exact (%.17g), so reruns of
/// a deterministic command produce byte-identical files. Infinity is
/// spelled "inf".
std::string format_double(double v);

/// Read all lines of a text file; throws input_error if unreadable.
std::vector<std::string> read_lines(const std::string& path);

/// Write a file atomically enough for our purposes (truncate + write).
void write_file(const std::string& path, const std::string& content);

}  // namespace mide::csv
