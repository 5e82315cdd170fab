#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace nsfm {

// Flat "key = value" text grouped under [section] headers. '#' and ';' start
// comments. Keys outside any section belong to section "".
//
// Every typed getter marks its key as consumed; check_all_consumed() then
// reports the first key nobody asked for, which is how unknown keys become
// errors without a separate schema.
class IniDocument {
 public:
  static IniDocument parse(const std::string& text,
                           const std::string& source = "<string>");
  static IniDocument load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;

  std::optional<std::string> get(const std::string& section,
                                 const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  std::size_t get_count(const std::string& section, const std::string& key,
                        std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<double> get_doubles(const std::string& section,
                                  const std::string& key,
                                  std::vector<double> fallback) const;
  std::vector<std::size_t> get_counts(const std::string& section,
                                      const std::string& key,
                                      std::vector<std::size_t> fallback) const;

  void check_all_consumed() const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  std::string where(const std::string& section, const std::string& key) const;

  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  mutable std::set<std::pair<std::string, std::string>> consumed_;
};

}  // namespace nsfm
