#include "cli/params.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sparsenorm/csv.hpp"

namespace sparsenorm::cli {

namespace {

Config parse_ini(std::istream& in, const std::string& origin) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  Config::Values values;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(origin + ": key '" + section + "' is outside any [section]");
    for (const auto& [key, value] : body) values[section][key] = value.data();
  }
  return Config(std::move(values));
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_ini(in, path);
}

Config Config::from_string(const std::string& text) {
  std::istringstream in(text);
  return parse_ini(in, "config");
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  auto s = values_.find(section);
  if (s == values_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::vector<std::string> Config::keys(const std::string& section) const {
  std::vector<std::string> out;
  auto s = values_.find(section);
  if (s != values_.end())
    for (const auto& [k, v] : s->second) out.push_back(k);
  return out;
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

void parse_value(const std::string& text, std::string& out) { out = text; }

void parse_value(const std::string& text, double& out) {
  const char* first = text.data();
  if (!text.empty() && text[0] == '+') ++first;
  auto res = std::from_chars(first, text.data() + text.size(), out);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty())
    throw ConfigError("not a number: '" + text + "'");
}

void parse_value(const std::string& text, std::uint64_t& out) {
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty())
    throw ConfigError("not a non-negative integer: '" + text + "'");
}

void parse_value(const std::string& text, bool& out) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") out = true;
  else if (text == "false" || text == "0" || text == "no" || text == "off") out = false;
  else throw ConfigError("not a boolean: '" + text + "'");
}

std::string format_value(const std::string& v) { return v; }
std::string format_value(double v) { return format_double(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }

void Params::resolve(const std::optional<Config>& config) {
  if (!config) return;
  for (const auto& key : config->keys(section_)) {
    bool known = false;
    for (const auto& e : entries_) known |= e.name == key;
    if (!known) throw ConfigError("unknown key '" + key + "' in [" + section_ + "]");
  }
  for (auto& e : entries_) {
    if (e.option->count() > 0) continue;
    if (auto v = config->get(section_, e.name)) {
      try {
        e.parse(*v);
      } catch (const ConfigError& err) {
        throw ConfigError("[" + section_ + "] " + e.name + ": " + err.what());
      }
    }
  }
}

std::vector<std::pair<std::string, std::string>> Params::resolved() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : entries_) out.emplace_back(e.name, e.format());
  return out;
}

}  // namespace sparsenorm::cli
