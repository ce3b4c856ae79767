#include "volchain/domain/text_record.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "volchain/domain/errors.hpp"

namespace volchain {

namespace {

[[noreturn]] void bad_value(std::string_view what, std::string_view text, std::string_view kind) {
  throw ValidationError(std::string(what) + ": expected " + std::string(kind) + ", got '" + std::string(text) + "'");
}

template <class T>
T parse_integral(std::string_view text, std::string_view what, std::string_view kind) {
  T value{};
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  if (text.empty() || (text.size() > 1 && text[0] == '0') || (text.size() > 2 && text.substr(0, 2) == "-0")) {
    bad_value(what, text, kind);
  }
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) bad_value(what, text, kind);
  return value;
}

}  // namespace

std::string format_real(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", value);
  return std::string(buf, static_cast<std::size_t>(n));
}

double parse_real(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) bad_value(what, text, "real");
  return value;
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
  return parse_integral<std::int64_t>(text, what, "integer");
}

std::uint64_t parse_uint(std::string_view text, std::string_view what) {
  return parse_integral<std::uint64_t>(text, what, "unsigned integer");
}

bool parse_bool(std::string_view text, std::string_view what) {
  if (text == "1") return true;
  if (text == "0") return false;
  bad_value(what, text, "0 or 1");
}

void TextRecord::set(std::string key, std::string value) {
  if (key.empty() || key.find_first_of("=\n") != std::string::npos) {
    throw ValidationError("invalid record key '" + key + "'");
  }
  if (value.find('\n') != std::string::npos) {
    throw ValidationError("record value for '" + key + "' contains a newline");
  }
  fields_[std::move(key)] = std::move(value);
}

bool TextRecord::has(std::string_view key) const { return fields_.find(key) != fields_.end(); }

const std::string& TextRecord::get(std::string_view key) const {
  const auto it = fields_.find(key);
  if (it == fields_.end()) throw ValidationError("missing record key '" + std::string(key) + "'");
  return it->second;
}

double TextRecord::get_real(std::string_view key) const { return parse_real(get(key), key); }
std::int64_t TextRecord::get_int(std::string_view key) const { return parse_int(get(key), key); }
std::uint64_t TextRecord::get_uint(std::string_view key) const { return parse_uint(get(key), key); }
bool TextRecord::get_bool(std::string_view key) const { return parse_bool(get(key), key); }
FeatureSet TextRecord::get_features(std::string_view key) const { return FeatureSet::from_text(get(key)); }

void TextRecord::merge_prefixed(std::string_view prefix, const TextRecord& other) {
  for (const auto& [k, v] : other.fields_) set(std::string(prefix) + "." + k, v);
}

TextRecord TextRecord::sub(std::string_view prefix) const {
  TextRecord out;
  const std::string lead = std::string(prefix) + ".";
  for (auto it = fields_.lower_bound(lead); it != fields_.end(); ++it) {
    if (it->first.compare(0, lead.size(), lead) != 0) break;
    out.fields_.emplace(it->first.substr(lead.size()), it->second);
  }
  return out;
}

std::string TextRecord::to_text() const {
  std::string out;
  for (const auto& [k, v] : fields_) {
    out += k;
    out.push_back('=');
    out += v;
    out.push_back('\n');
  }
  return out;
}

TextRecord TextRecord::parse(std::string_view text) {
  TextRecord rec;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no) + ": missing trailing newline");
    }
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key(line.substr(0, eq));
    if (rec.has(key)) throw ValidationError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    rec.fields_.emplace(std::move(key), std::string(line.substr(eq + 1)));
  }
  return rec;
}

}  // namespace volchain
