#include "config.hpp"

#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rfvar/errors.hpp"

namespace rfvar::cli {

namespace pt = boost::property_tree;

ConfigFile parse_config(const std::string& text, const std::string& origin) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  ConfigFile config;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      config.global[key] = node.data();
    } else {
      auto& section = config.sections[key];
      for (const auto& [name, value] : node) section[name] = value.data();
    }
  }
  return config;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

}  // namespace rfvar::cli
