#include "json_config.hpp"

#include <algorithm>
#include <istream>

#include "json.hpp"

namespace qtransport::cli {
namespace {

using json = nlohmann::json;

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

// Typed JSON only when it prints back to the identical text, so replaying a
// manifest hands CLI11 exactly the strings it saw the first time.
json typed(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (!v.is_discarded() && !v.is_string() && !v.is_object() && v.dump() == text) return v;
  return text;
}

void collect(const json& obj, const std::vector<std::string>& parents,
             std::vector<CLI::ConfigItem>& items, const CLI::App* root) {
  for (const auto& [key, value] : obj.items()) {
    if (value.is_null()) continue;
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    if (value.is_object()) {
      if (!parents.empty() || root == nullptr ||
          root->get_subcommand_no_throw(key) == nullptr) {
        throw CLI::ConfigError("config section '" + key + "' is not a subcommand");
      }
      collect(value, {key}, items, root);
      continue;
    }
    if (value.is_array()) {
      for (const auto& element : value) {
        if (element.is_structured()) {
          throw CLI::ConfigError("config value of '" + key + "' is nested too deeply");
        }
        item.inputs.push_back(scalar_text(element));
      }
    } else {
      item.inputs.push_back(scalar_text(value));
    }
    items.push_back(std::move(item));
  }
}

}  // namespace

std::string resolved_options_json(const CLI::App& app, const std::vector<std::string>& skip) {
  json j = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
    std::vector<std::string> values;
    if (opt->count() > 0) {
      values = opt->results();
    } else {
      const auto& ex = opt->get_excludes();
      if (std::any_of(ex.begin(), ex.end(), [](const CLI::Option* o) { return o->count() > 0; })) {
        continue;
      }
      const std::string def = opt->get_default_str();
      if (def.empty()) continue;
      j[name] = typed(def);
      continue;
    }
    if (opt->get_expected_max() > 1) {
      json arr = json::array();
      for (const auto& v : values) arr.push_back(typed(v));
      j[name] = std::move(arr);
    } else if (!values.empty()) {
      j[name] = typed(values.back());
    }
  }
  return j.dump(2);
}

std::string JsonConfig::to_config(const CLI::App* app, bool, bool, std::string) const {
  return resolved_options_json(*app, {"help", "config"});
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  json j = json::parse(input, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw CLI::ConfigError("config file is not a JSON object");
  }
  std::string active;
  if (root_ != nullptr) {
    const auto subs = root_->get_subcommands();
    if (!subs.empty()) active = subs.front()->get_name();
  }
  std::vector<std::string> parents;
  if (!active.empty()) parents.push_back(active);

  std::vector<CLI::ConfigItem> items;
  if (j.contains("subcommand") && j.contains("config")) {
    const std::string sub = j["subcommand"].is_string() ? j["subcommand"].get<std::string>() : "";
    if (!active.empty() && sub != active) {
      throw CLI::ConfigError("manifest belongs to subcommand '" + sub + "', not '" + active +
                             "'");
    }
    if (!j["config"].is_object()) throw CLI::ConfigError("manifest config is not an object");
    collect(j["config"], {sub}, items, root_);
    return items;
  }
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      if (key != active) continue;  // sections for other subcommands
      collect(value, {key}, items, root_);
    } else {
      json single = json::object();
      single[key] = value;
      collect(single, parents, items, root_);
    }
  }
  return items;
}

}  // namespace qtransport::cli
