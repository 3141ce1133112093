#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chatload/types.hpp"

namespace chatload {

struct EmojiRange {
  char32_t lo = 0;
  char32_t hi = 0;
};

inline std::vector<EmojiRange> default_emoji_ranges() {
  // Pragmatic pictograph coverage; export formats that need more add ranges
  // in the format config.
  return {
      {0x1F1E6, 0x1F1FF},  // regional indicators
      {0x1F300, 0x1F9FF},  // pictographs, emoticons, transport, supplemental
      {0x1FA70, 0x1FAFF},  // symbols extended-A
      {0x2600, 0x27BF},    // misc symbols, dingbats
      {0x2B50, 0x2B55},
  };
}

/// Export-format knobs: timestamp layout, delimiters, media markers, emoji
/// ranges and the timezone the export was written in. Everything that varies
/// by locale or app version lives here, not in code.
struct FormatConfig {
  // Pattern tokens: %d %m %Y %y %H %I %M %S %p; everything else is literal.
  std::string timestamp_pattern = "%d/%m/%Y, %H:%M";
  std::string entry_separator = " - ";
  std::string speaker_delimiter = ": ";
  std::vector<std::string> media_markers = {
      "<Media omitted>",
      "<Mídia omitida>",
      "<Arquivo de mídia oculto>",
      "(file attached)",
  };
  std::vector<EmojiRange> emoji_ranges = default_emoji_ranges();
  int tz_offset_min = 0;  // local = epoch minutes + offset

  static FormatConfig from_json(const nlohmann::json& j) {
    FormatConfig cfg;
    try {
      if (j.contains("timestamp_pattern")) cfg.timestamp_pattern = j.at("timestamp_pattern").get<std::string>();
      if (j.contains("entry_separator")) cfg.entry_separator = j.at("entry_separator").get<std::string>();
      if (j.contains("speaker_delimiter")) cfg.speaker_delimiter = j.at("speaker_delimiter").get<std::string>();
      if (j.contains("media_markers")) cfg.media_markers = j.at("media_markers").get<std::vector<std::string>>();
      if (j.contains("tz_offset_min")) cfg.tz_offset_min = j.at("tz_offset_min").get<int>();
      if (j.contains("emoji_ranges")) {
        cfg.emoji_ranges.clear();
        for (const auto& r : j.at("emoji_ranges")) {
          const auto lo = static_cast<char32_t>(std::stoul(r.at(0).get<std::string>(), nullptr, 16));
          const auto hi = static_cast<char32_t>(std::stoul(r.at(1).get<std::string>(), nullptr, 16));
          if (lo > hi) throw config_error("format config: emoji range out of order");
          cfg.emoji_ranges.push_back({lo, hi});
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw config_error(std::string("format config: ") + e.what());
    } catch (const std::invalid_argument&) {
      throw config_error("format config: emoji ranges must be hex strings");
    } catch (const std::out_of_range&) {
      throw config_error("format config: emoji range out of range");
    }
    cfg.validate();
    return cfg;
  }

  static FormatConfig load(std::istream& in) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw config_error(std::string("format config: ") + e.what());
    }
    return from_json(j);
  }

  static FormatConfig load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("format config: cannot open " + path);
    return load(in);
  }

  void validate() const {
    if (timestamp_pattern.empty()) throw config_error("format config: timestamp_pattern is empty");
    if (entry_separator.empty()) throw config_error("format config: entry_separator is empty");
    if (speaker_delimiter.empty()) throw config_error("format config: speaker_delimiter is empty");
  }
};

}  // namespace chatload
