#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace qtransport::cli {

/// CLI11 config reader for JSON files.
///
/// Accepted layouts:
///   {"sites": 7, ...}                         flat, applies to the active subcommand
///   {"sample": {"sites": 7, ...}}             sectioned by subcommand
///   {"subcommand": "sample", "config": {...}} a run manifest
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;

 private:
  const CLI::App* root_;
};

/// Resolved values of `app`'s options as a JSON object text: given values,
/// else captured defaults. Options in `skip` are left out, as are defaults
/// of options excluded by a given one.
std::string resolved_options_json(const CLI::App& app, const std::vector<std::string>& skip);

}  // namespace qtransport::cli
