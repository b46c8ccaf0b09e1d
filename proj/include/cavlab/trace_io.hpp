#pragma once

// Plain-text trace files: a block of "# key: value" metadata lines followed by
// comma-separated rows "t,value[,sigma]".
//
// Times are held in ms in memory and written in us. Numbers are written with
// the shortest decimal form that parses back to the same double; the ms <-> us
// change is a shift of the decimal exponent, applied to the text rather than
// by multiplying, so a written file reloads bit for bit.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "cavlab/core.hpp"
#include "cavlab/error.hpp"

namespace cavlab {

enum class TimeUnit { ms, us };

inline const char* to_string(TimeUnit u) { return u == TimeUnit::ms ? "ms" : "us"; }

inline std::optional<TimeUnit> parse_time_unit(std::string_view s) {
  if (s == "ms") return TimeUnit::ms;
  if (s == "us" || s == "\xCE\xBCs" || s == "\xC2\xB5s") return TimeUnit::us;  // Greek mu, micro sign
  return std::nullopt;
}

/// Shortest decimal text that parses back to exactly x.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc()) throw IoError("cannot format number");
  return {buf, res.ptr};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Strict full-field parse.
inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Rescales a decimal literal by 10^shift by editing its exponent.
inline std::string shift_exponent(std::string_view text, int shift) {
  const auto e = text.find_first_of("eE");
  if (e == std::string_view::npos) return std::string(text) + "e" + std::to_string(shift);
  int exp10 = 0;
  auto tail = text.substr(e + 1);
  if (!tail.empty() && tail.front() == '+') tail.remove_prefix(1);
  const auto res = std::from_chars(tail.data(), tail.data() + tail.size(), exp10);
  if (tail.empty() || res.ec != std::errc() || res.ptr != tail.data() + tail.size())
    throw IoError("malformed exponent in '" + std::string(text) + "'");
  return std::string(text.substr(0, e)) + "e" + std::to_string(exp10 + shift);
}

// Writes d1.d2d3... x 10^exp10 as plain decimal when that stays short.
inline std::string render_decimal(bool negative, const std::string& digits, int exp10) {
  std::string out = negative ? "-" : "";
  const int n = static_cast<int>(digits.size());
  if (exp10 < -6 || exp10 > 20) {
    out += digits.substr(0, 1);
    if (n > 1) out += "." + digits.substr(1);
    return out + "e" + std::to_string(exp10);
  }
  if (exp10 < 0) return out + "0." + std::string(static_cast<std::size_t>(-exp10 - 1), '0') + digits;
  const int int_digits = exp10 + 1;
  if (int_digits >= n) return out + digits + std::string(static_cast<std::size_t>(int_digits - n), '0');
  return out + digits.substr(0, static_cast<std::size_t>(int_digits)) + "." +
         digits.substr(static_cast<std::size_t>(int_digits));
}

}  // namespace detail

/// Decimal text of x * 10^shift, built from the shortest digits of x.
inline std::string format_scaled(double x, int shift) {
  if (x == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific);
  if (res.ec != std::errc()) throw IoError("cannot format number");
  const std::string_view s(buf, static_cast<std::size_t>(res.ptr - buf));
  const bool negative = s.front() == '-';
  const auto mantissa = s.substr(negative ? 1 : 0, s.find('e') - (negative ? 1 : 0));
  std::string digits;
  for (char c : mantissa)
    if (c != '.') digits += c;
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
  int exp10 = 0;
  const auto tail = s.substr(s.find('e') + 1);
  std::from_chars(tail.data() + (tail.front() == '+' ? 1 : 0), tail.data() + tail.size(), exp10);
  return detail::render_decimal(negative, digits, exp10 + shift);
}

/// Ordered key/value header block.
class Metadata {
 public:
  void set(const std::string& key, std::string value) {
    for (auto& kv : entries_)
      if (kv.first == key) {
        kv.second = std::move(value);
        return;
      }
    entries_.emplace_back(key, std::move(value));
  }
  void set(const std::string& key, double value) { set(key, format_number(value)); }

  [[nodiscard]] std::optional<std::string> get(const std::string& key) const {
    for (const auto& kv : entries_)
      if (kv.first == key) return kv.second;
    return std::nullopt;
  }

  [[nodiscard]] std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v) throw ValidationError("header key '" + key + "' is missing");
    return *v;
  }

  [[nodiscard]] double number(const std::string& key) const {
    const auto text = require(key);
    const auto v = detail::parse_double(text);
    if (!v) throw ValidationError("header key '" + key + "' is not a number: '" + text + "'");
    return *v;
  }

  [[nodiscard]] std::optional<double> optional_number(const std::string& key) const {
    if (!get(key)) return std::nullopt;
    return number(key);
  }

  [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  friend bool operator==(const Metadata&, const Metadata&) = default;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct TraceFile {
  Metadata metadata;
  Trace trace;
  TimeUnit time_unit = TimeUnit::us;
};

/// Keys a written trace always carries.
inline const std::vector<std::string>& required_trace_keys() {
  static const std::vector<std::string> keys{"time_unit", "solver", "omega", "gamma", "kappa", "alpha", "nbar"};
  return keys;
}

/// Parses trace text. `source` names the input in error messages.
inline TraceFile parse_trace(std::istream& in, const std::string& source = "<trace>") {
  TraceFile file;
  std::optional<TimeUnit> unit;
  std::vector<double> times, values, sigmas;
  std::vector<std::size_t> row_lines;
  const auto fail = [&](std::size_t line, const std::string& msg) -> IoError {
    return IoError(source + ":" + std::to_string(line) + ": " + msg);
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = detail::trim(line.substr(1));
      const auto colon = body.find(':');
      if (colon == std::string_view::npos) continue;
      const std::string key(detail::trim(body.substr(0, colon)));
      const std::string value(detail::trim(body.substr(colon + 1)));
      if (key.empty()) continue;
      if (key == "time_unit") {
        unit = parse_time_unit(value);
        if (!unit) throw fail(line_no, "time_unit must be ms or us, got '" + value + "'");
      }
      file.metadata.set(key, value);
      continue;
    }
    if (!unit) throw fail(line_no, "data row before a '# time_unit:' header");

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 2 || fields.size() > 3)
      throw fail(line_no, "expected 't,value[,sigma]', got " + std::to_string(fields.size()) + " fields");
    const auto t_text = detail::trim(fields[0]);
    const auto t = detail::parse_double(t_text);
    const auto v = detail::parse_double(fields[1]);
    if (!t || !v || !std::isfinite(*t) || !std::isfinite(*v))
      throw fail(line_no, "malformed row '" + std::string(line) + "'");
    double t_ms = *t;
    if (*unit == TimeUnit::us) t_ms = *detail::parse_double(detail::shift_exponent(t_text, -3));
    if (fields.size() == 3) {
      const auto s = detail::parse_double(fields[2]);
      if (!s || !(*s >= 0.0)) throw fail(line_no, "malformed uncertainty '" + std::string(fields[2]) + "'");
      if (sigmas.size() != times.size()) throw fail(line_no, "uncertainty column present on only some rows");
      sigmas.push_back(*s);
    } else if (!sigmas.empty()) {
      throw fail(line_no, "uncertainty column present on only some rows");
    }
    if (!times.empty()) {
      if (t_ms == times.back()) throw fail(line_no, "duplicate time (also on line " +
                                                      std::to_string(row_lines.back()) + ")");
      if (t_ms < times.back()) throw fail(line_no, "times are not increasing");
    }
    times.push_back(t_ms);
    values.push_back(*v);
    row_lines.push_back(line_no);
  }
  if (!unit) throw IoError(source + ": missing '# time_unit:' header (ms or us)");
  if (times.empty()) throw IoError(source + ": no samples");
  file.time_unit = *unit;
  try {
    file.trace = Trace(std::move(times), std::move(values), Trace::kMeasuredSlack, std::move(sigmas));
  } catch (const ValidationError& e) {
    throw IoError(source + ": " + e.what());
  }
  return file;
}

inline TraceFile read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file '" + path + "'");
  return parse_trace(in, path);
}

/// Times in ms, values unmodified.
inline Trace load_trace(const std::string& path) { return read_trace_file(path).trace; }

inline void write_trace(std::ostream& out, const TraceFile& file) {
  out << "# time_unit: " << to_string(file.time_unit) << '\n';
  for (const auto& [key, value] : file.metadata.entries())
    if (key != "time_unit") out << "# " << key << ": " << value << '\n';
  const auto times = file.trace.times();
  const auto values = file.trace.values();
  const auto sigmas = file.trace.sigmas();
  const int shift = file.time_unit == TimeUnit::us ? 3 : 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    out << format_scaled(times[k], shift) << ',' << format_number(values[k]);
    if (!sigmas.empty()) out << ',' << format_number(sigmas[k]);
    out << '\n';
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline void write_trace_file(const std::string& path, const TraceFile& file) {
  std::ostringstream os;
  write_trace(os, file);
  write_text_file(path, os.str());
}

}  // namespace cavlab
