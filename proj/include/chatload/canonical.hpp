#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chatload/session.hpp"
#include "chatload/types.hpp"

namespace chatload {

// The canonical record format is one JSON object per line with the keys
// ts_min, user, group, flags, text_len. It is the lingua franca between the
// parser, the generator and the analyzer, and round-trips losslessly.

inline void write_canonical(std::ostream& out, const MessageLog& log) {
  for (const Message& m : log.messages) {
    nlohmann::ordered_json j;
    j["ts_min"] = m.ts_min;
    j["user"] = m.user_id;
    j["group"] = log.group_id;
    j["flags"] = m.content.code();
    j["text_len"] = m.text_len;
    out << j.dump() << '\n';
  }
}

/// Reads canonical records, grouping by the `group` key (order of first
/// appearance). Each log is re-sorted to restore the ordering invariant.
inline std::vector<MessageLog> read_canonical(std::istream& in) {
  std::vector<MessageLog> logs;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      Message m;
      m.ts_min = j.at("ts_min").get<Minute>();
      m.user_id = j.at("user").get<std::string>();
      m.content = ContentFlags::from_code(j.at("flags").get<std::string>());
      m.text_len = j.at("text_len").get<std::uint32_t>();
      const std::string group = j.at("group").get<std::string>();
      auto it = index.find(group);
      if (it == index.end()) {
        it = index.emplace(group, logs.size()).first;
        logs.push_back(MessageLog{group, {}, 0, 0});
      }
      logs[it->second].messages.push_back(std::move(m));
    } catch (const nlohmann::json::exception& e) {
      throw parse_error("canonical record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (MessageLog& log : logs) log.normalize();
  return logs;
}

inline Roster load_roster(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("roster: ") + e.what());
  }
  Roster roster;
  try {
    roster.group_id = j.at("group").get<std::string>();
    for (const auto& m : j.at("members")) {
      const auto id = m.get<std::string>();
      if (!roster.members.insert(id).second) throw parse_error("roster: duplicate member " + id);
    }
    if (j.contains("admins")) {
      for (const auto& a : j.at("admins")) roster.admins.insert(a.get<std::string>());
    }
    if (j.contains("category")) roster.category = j.at("category").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("roster: ") + e.what());
  }
  roster.validate();
  return roster;
}

// JSONL views of derived structures, for inspection and golden-file tests.

inline void write_user_sessions(std::ostream& out, std::span<const UserSession> sessions, const std::string& group) {
  for (const UserSession& s : sessions) {
    nlohmann::ordered_json j;
    j["user"] = s.user_id;
    j["group"] = group;
    j["start_min"] = s.start;
    j["end_min"] = s.end;
    j["messages"] = s.message_count();
    out << j.dump() << '\n';
  }
}

inline void write_group_sessions(std::ostream& out, std::span<const GroupSession> sessions, const std::string& group) {
  for (const GroupSession& s : sessions) {
    nlohmann::ordered_json j;
    j["group"] = group;
    j["start_min"] = s.start;
    j["end_min"] = s.end;
    j["messages"] = s.message_count();
    j["users"] = s.user_count();
    out << j.dump() << '\n';
  }
}

inline void write_gap_histogram(std::ostream& out, const GapHistogram& hist, const std::string& group) {
  for (const GapEntry& e : hist) {
    nlohmann::ordered_json j;
    j["group"] = group;
    j["gap_min"] = e.gap;
    j["count"] = e.frequency;
    out << j.dump() << '\n';
  }
}

}  // namespace chatload
