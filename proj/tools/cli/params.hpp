#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace sparsenorm::cli {

// Bad configuration file or flag value; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "key = value" lines under [section] headers.
class Config {
 public:
  using Values = std::map<std::string, std::map<std::string, std::string>>;

  Config() = default;
  explicit Config(Values values) : values_(std::move(values)) {}

  static Config load(const std::string& path);
  static Config from_string(const std::string& text);

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::vector<std::string> keys(const std::string& section) const;
  std::vector<std::string> sections() const;

 private:
  Values values_;
};

void parse_value(const std::string& text, std::string& out);
void parse_value(const std::string& text, double& out);
void parse_value(const std::string& text, std::uint64_t& out);
void parse_value(const std::string& text, bool& out);
template <typename T>
void parse_value(const std::string& text, std::vector<T>& out) {
  out.clear();
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(start, end - start);
    auto a = item.find_first_not_of(" \t");
    auto b = item.find_last_not_of(" \t");
    item = a == std::string::npos ? "" : item.substr(a, b - a + 1);
    if (!item.empty()) {
      T v{};
      parse_value(item, v);
      out.push_back(std::move(v));
    }
    start = end + 1;
  }
}

std::string format_value(const std::string& v);
std::string format_value(double v);
std::string format_value(std::uint64_t v);
std::string format_value(bool v);
template <typename T>
std::string format_value(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_value(v[i]);
  return s;
}

/// Subcommand options that may also come from the config section of the same
/// name. Flags given on the command line win over the file.
class Params {
 public:
  Params(CLI::App* app, std::string section) : app_(app), section_(std::move(section)) {}

  template <typename T>
  CLI::Option* add(const std::string& name, T& var, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + name, var, help)->capture_default_str();
    if constexpr (requires { var.begin(); } && !std::is_same_v<T, std::string>) opt->delimiter(',');
    entries_.push_back({name, opt, [&var](const std::string& s) { parse_value(s, var); },
                        [&var] { return format_value(var); }});
    return opt;
  }

  const std::string& section() const { return section_; }

  // Applies config values for options not given as flags. Unknown keys are errors.
  void resolve(const std::optional<Config>& config);
  // name -> value after resolution, in declaration order.
  std::vector<std::pair<std::string, std::string>> resolved() const;

 private:
  struct Entry {
    std::string name;
    CLI::Option* option;
    std::function<void(const std::string&)> parse;
    std::function<std::string()> format;
  };
  CLI::App* app_;
  std::string section_;
  std::vector<Entry> entries_;
};

}  // namespace sparsenorm::cli
