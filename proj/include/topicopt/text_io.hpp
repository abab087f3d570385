#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace topicopt {

using CsvRow = std::vector<std::string>;

/// RFC-4180 writer: fields holding a comma, quote, CR or LF are quoted and
/// embedded quotes doubled. Lines end with "\n".
std::string csv_line(const CsvRow& fields);
std::string to_csv(const CsvRow& header, const std::vector<CsvRow>& rows);

/// Parses RFC-4180 text (quoted fields may span lines). Throws ParseError.
std::vector<CsvRow> parse_csv(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM|-HH:MM)",
/// Twitter's "Wed Oct 10 20:19:24 +0000 2018" and bare epoch seconds.
/// Returns epoch seconds (UTC).
std::optional<std::int64_t> parse_timestamp(std::string_view text);
/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(std::int64_t epoch_seconds);

std::int64_t epoch_from_civil(int year, unsigned month, unsigned day);
struct CivilDate {
  int year;
  unsigned month;
  unsigned day;
};
CivilDate civil_from_epoch(std::int64_t epoch_seconds);

/// Lines of a UTF-8 list file with "#" comments and blank lines removed;
/// entries are trimmed.
std::vector<std::string> parse_list_file(std::string_view text);

}  // namespace topicopt
