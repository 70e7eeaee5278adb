#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace apifeat {

inline constexpr const char* kToolVersion = "apifeat/1.0.0";

// Flat key=value run configuration. Every key has a documented default (see
// default_table()); unknown keys are ConfigErrors so typos fail fast. CLI
// flags override file values. The canonical form materializes every default,
// so the config hash pins the complete effective configuration.
class RunConfig {
public:
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool is_set(const std::string& key) const;

  std::string get(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  // sorted key=value lines with defaults materialized
  std::string canonical() const;
  // fnv-1a of canonical(), hex; recorded in every artifact
  std::string hash() const;

  void dump(const std::filesystem::path& path) const;

  static const std::map<std::string, std::string>& default_table();

private:
  std::map<std::string, std::string> values_;
};

}  // namespace apifeat
