#include "nsfm/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nsfm/errors.hpp"

namespace nsfm {

namespace {

std::string trim(std::string_view s) {
  auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(s.front())) s.remove_prefix(1);
  while (!s.empty() && issp(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    out.push_back(trim(item));
  }
  return out;
}

}  // namespace

IniDocument IniDocument::parse(const std::string& text,
                               const std::string& source) {
  IniDocument doc;
  doc.source_ = source;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cut = raw.find_first_of("#;");
    const std::string line = trim(std::string_view(raw).substr(0, cut));
    if (line.empty()) {
      continue;
    }
    const std::string at = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(at + ": malformed section header");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      doc.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(at + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(at + ": empty key");
    }
    auto& entries = doc.sections_[section];
    if (entries.count(key) != 0) {
      throw ConfigError(at + ": duplicate key '" + key + "'");
    }
    entries[key] = Entry{value, line_no};
  }
  return doc;
}

IniDocument IniDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path.string());
}

std::string IniDocument::where(const std::string& section,
                               const std::string& key) const {
  const auto s = sections_.find(section);
  std::string at = source_;
  if (s != sections_.end()) {
    const auto e = s->second.find(key);
    if (e != s->second.end()) {
      at += ":" + std::to_string(e->second.line);
    }
  }
  return at + ": [" + section + "] " + key;
}

bool IniDocument::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) != 0;
}

std::optional<std::string> IniDocument::get(const std::string& section,
                                            const std::string& key) const {
  consumed_.emplace(section, key);
  const auto s = sections_.find(section);
  if (s == sections_.end()) {
    return std::nullopt;
  }
  const auto e = s->second.find(key);
  if (e == s->second.end()) {
    return std::nullopt;
  }
  return e->second.value;
}

std::string IniDocument::get_string(const std::string& section,
                                    const std::string& key,
                                    const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

double IniDocument::get_double(const std::string& section,
                               const std::string& key, double fallback) const {
  const auto v = get(section, key);
  if (!v) {
    return fallback;
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size() || !std::isfinite(d)) {
      throw std::invalid_argument("trailing");
    }
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError(where(section, key) + ": '" + *v + "' is not a number");
  }
}

std::uint64_t IniDocument::get_u64(const std::string& section,
                                   const std::string& key,
                                   std::uint64_t fallback) const {
  const auto v = get(section, key);
  if (!v) {
    return fallback;
  }
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError(where(section, key) + ": '" + *v +
                      "' is not a non-negative integer");
  }
  return out;
}

std::size_t IniDocument::get_count(const std::string& section,
                                   const std::string& key,
                                   std::size_t fallback) const {
  return static_cast<std::size_t>(get_u64(section, key, fallback));
}

bool IniDocument::get_bool(const std::string& section, const std::string& key,
                           bool fallback) const {
  const auto v = get(section, key);
  if (!v) {
    return fallback;
  }
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ConfigError(where(section, key) + ": '" + *v + "' is not a boolean");
}

std::vector<double> IniDocument::get_doubles(
    const std::string& section, const std::string& key,
    std::vector<double> fallback) const {
  const auto v = get(section, key);
  if (!v) {
    return fallback;
  }
  std::vector<double> out;
  for (const auto& item : split_list(*v)) {
    const IniDocument one = parse("x = " + item, source_);
    try {
      out.push_back(one.get_double("", "x", 0.0));
    } catch (const ConfigError&) {
      throw ConfigError(where(section, key) + ": '" + item +
                        "' is not a number");
    }
  }
  if (out.empty()) {
    throw ConfigError(where(section, key) + ": empty list");
  }
  return out;
}

std::vector<std::size_t> IniDocument::get_counts(
    const std::string& section, const std::string& key,
    std::vector<std::size_t> fallback) const {
  const auto v = get(section, key);
  if (!v) {
    return fallback;
  }
  std::vector<std::size_t> out;
  for (const auto& item : split_list(*v)) {
    const IniDocument one = parse("x = " + item, source_);
    try {
      out.push_back(one.get_count("", "x", 0));
    } catch (const ConfigError&) {
      throw ConfigError(where(section, key) + ": '" + item +
                        "' is not a non-negative integer");
    }
  }
  if (out.empty()) {
    throw ConfigError(where(section, key) + ": empty list");
  }
  return out;
}

void IniDocument::check_all_consumed() const {
  for (const auto& [section, entries] : sections_) {
    for (const auto& [key, entry] : entries) {
      if (consumed_.count({section, key}) == 0) {
        throw ConfigError(source_ + ":" + std::to_string(entry.line) +
                          ": unknown key '" + key + "' in section [" +
                          section + "]");
      }
    }
  }
}

}  // namespace nsfm
