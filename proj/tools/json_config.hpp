#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "superlime/error.hpp"

namespace superlime::cli {

// Fills options of `app` from a JSON object whose keys are long option names
// (or positional names). Arrays become repeated inputs, objects are passed on
// as JSON text. Options already given on the command line win.
inline void apply_json_config(CLI::App& app, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::io_failure, "cannot open config file '" + path.string() + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config file '" + path.string() + "' must hold a JSON object");

  const auto text = [](const nlohmann::ordered_json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
    return v.dump();
  };
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr) opt = app.get_option_no_throw(key);
    if (opt == nullptr || key == "config") {
      throw InvalidArgument("config file '" + path.string() + "': unknown key '" + key + "' for " + app.get_name());
    }
    if (opt->count() > 0) continue;
    std::vector<std::string> inputs;
    if (value.is_array()) {
      for (const auto& v : value) inputs.push_back(text(v));
    } else {
      inputs.push_back(text(value));
    }
    try {
      opt->add_result(inputs);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw InvalidArgument("config file '" + path.string() + "', key '" + key + "': " + e.what());
    }
  }
}

}  // namespace superlime::cli
