#include "topicopt/text_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include "topicopt/common.hpp"

namespace topicopt {

// ---------------------------------------------------------------------------
// common.hpp helpers

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw DataError("ragged matrix at row " + std::to_string(r));
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

std::vector<std::vector<double>> matrix_to_rows(const Matrix& m) {
  std::vector<std::vector<double>> rows(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) rows[r].assign(m.row(r).begin(), m.row(r).end());
  return rows;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::size_t Rng::below(std::size_t n) {
  if (n == 0) return 0;
  // Lemire's multiply-shift with rejection.
  const unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(n)) % n;
    unsigned __int128 mm = m;
    while (low < threshold) {
      mm = static_cast<unsigned __int128>(next()) * n;
      low = static_cast<std::uint64_t>(mm);
    }
    return static_cast<std::size_t>(mm >> 64);
  }
  return static_cast<std::size_t>(m >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * 3.14159265358979323846 * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return below(weights.size());
  const double target = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return i;
  }
  // Rounding left target at the very top: return the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (stream * 0xd1b54a32d192ed03ULL);
  splitmix64(x);
  return splitmix64(x);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

bool needs_quotes(std::string_view field) {
  return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

}  // namespace

std::string csv_line(const CsvRow& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    const auto& f = fields[i];
    if (needs_quotes(f)) {
      out += '"';
      for (char c : f) {
        if (c == '"') out += '"';
        out += c;
      }
      out += '"';
    } else {
      out += f;
    }
  }
  out += '\n';
  return out;
}

std::string to_csv(const CsvRow& header, const std::vector<CsvRow>& rows) {
  std::string out = csv_line(header);
  for (const auto& r : rows) out += csv_line(r);
  return out;
}

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t column = 0;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    ++column;
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') {
          ++line;
          column = 0;
        }
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty()) throw ParseError("unexpected quote in unquoted CSV field", line, column);
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        column = 0;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted CSV field", line, column);
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

// ---------------------------------------------------------------------------
// files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

std::vector<std::string> parse_list_file(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    if (!line.empty()) out.emplace_back(line);
    start = end + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// timestamps

std::int64_t epoch_from_civil(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  const sys_days d = std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day};
  return static_cast<std::int64_t>(d.time_since_epoch().count()) * 86400;
}

CivilDate civil_from_epoch(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  std::int64_t days = epoch_seconds / 86400;
  if (epoch_seconds % 86400 < 0) --days;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day())};
}

std::string format_timestamp(std::int64_t epoch_seconds) {
  const CivilDate d = civil_from_epoch(epoch_seconds);
  std::int64_t secs = epoch_seconds % 86400;
  if (secs < 0) secs += 86400;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", d.year, d.month, d.day,
                static_cast<int>(secs / 3600), static_cast<int>((secs / 60) % 60), static_cast<int>(secs % 60));
  return buf;
}

namespace {

bool read_int(std::string_view& s, std::size_t digits, int& out) {
  if (s.size() < digits) return false;
  int v = 0;
  for (std::size_t i = 0; i < digits; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  s.remove_prefix(digits);
  return true;
}

bool eat(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

bool valid_date(int y, int mo, int d) {
  using namespace std::chrono;
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                     std::chrono::day{static_cast<unsigned>(d)}}
      .ok();
}

std::optional<std::int64_t> parse_iso(std::string_view s) {
  int y, mo, d;
  if (!read_int(s, 4, y) || !eat(s, '-') || !read_int(s, 2, mo) || !eat(s, '-') || !read_int(s, 2, d)) return {};
  if (!valid_date(y, mo, d)) return {};
  std::int64_t t = epoch_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  if (s.empty()) return t;
  if (!eat(s, 'T') && !eat(s, ' ')) return {};
  int h, mi, sec = 0;
  if (!read_int(s, 2, h) || !eat(s, ':') || !read_int(s, 2, mi)) return {};
  if (eat(s, ':') && !read_int(s, 2, sec)) return {};
  if (h > 23 || mi > 59 || sec > 60) return {};
  t += h * 3600 + mi * 60 + sec;
  if (eat(s, '.'))
    while (!s.empty() && std::isdigit(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  if (s.empty() || eat(s, 'Z')) return s.empty() ? std::optional<std::int64_t>(t) : std::nullopt;
  const char sign = s.front();
  if (sign != '+' && sign != '-') return {};
  s.remove_prefix(1);
  int oh, om = 0;
  if (!read_int(s, 2, oh)) return {};
  eat(s, ':');
  if (!s.empty() && !read_int(s, 2, om)) return {};
  if (!s.empty()) return {};
  const std::int64_t offset = oh * 3600 + om * 60;
  return sign == '+' ? t - offset : t + offset;
}

// "Wed Oct 10 20:19:24 +0000 2018"
std::optional<std::int64_t> parse_twitter(std::string_view s) {
  static constexpr std::array<std::string_view, 12> months = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                              "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  if (s.size() < 30) return {};
  s.remove_prefix(4);  // weekday
  const std::string_view mon = s.substr(0, 3);
  auto it = std::find(months.begin(), months.end(), mon);
  if (it == months.end()) return {};
  s.remove_prefix(3);
  int d, h, mi, sec, oh, om, y;
  if (!eat(s, ' ') || !read_int(s, 2, d) || !eat(s, ' ') || !read_int(s, 2, h) || !eat(s, ':') ||
      !read_int(s, 2, mi) || !eat(s, ':') || !read_int(s, 2, sec) || !eat(s, ' '))
    return {};
  if (s.empty()) return {};
  const char sign = s.front();
  s.remove_prefix(1);
  if ((sign != '+' && sign != '-') || !read_int(s, 2, oh) || !read_int(s, 2, om) || !eat(s, ' ') ||
      !read_int(s, 4, y) || !s.empty())
    return {};
  const int mo = static_cast<int>(it - months.begin()) + 1;
  if (!valid_date(y, mo, d)) return {};
  std::int64_t t = epoch_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) + h * 3600 + mi * 60 + sec;
  const std::int64_t offset = oh * 3600 + om * 60;
  return sign == '+' ? t - offset : t + offset;
}

std::optional<std::int64_t> parse_epoch(std::string_view s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return {};
  return static_cast<std::int64_t>(std::floor(v));
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) return {};
  if (auto t = parse_iso(text)) return t;
  if (auto t = parse_twitter(text)) return t;
  return parse_epoch(text);
}

}  // namespace topicopt
