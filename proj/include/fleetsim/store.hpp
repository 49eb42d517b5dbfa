#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetsim/time.hpp"
#include "fleetsim/topic.hpp"
#include "fleetsim/util.hpp"

namespace fleetsim {

class StoreIoError : public SimError {
 public:
  using SimError::SimError;
};

/// One recorded envelope. `publish_time` is when the source published it,
/// `ingest_time` when the recording application received it (both virtual).
/// Payload bytes are kept identical to the bus payload.
struct RecordEntry {
  std::uint64_t store_sequence = 0;
  Topic topic;
  VirtualTime publish_time;
  VirtualTime ingest_time;
  std::string schema_tag;
  std::vector<std::uint8_t> payload;
};

struct SessionStats {
  std::string session_id;
  std::uint64_t entries_written = 0;
  std::uint64_t bytes_written = 0;
  std::chrono::nanoseconds wall_clock_write_time{0};  // measured host time
  std::uint64_t dropped = 0;
};

/// Append-only on-disk store of recorded envelopes: newline-delimited JSON,
/// one object per entry, payload base64-encoded. Writes are buffered and go
/// to disk on flush; close() flushes. One writer per file.
class RecordStore {
 public:
  virtual ~RecordStore() {
    try {
      close();
    } catch (...) {
    }
  }

  RecordStore(const RecordStore&) = delete;
  RecordStore& operator=(const RecordStore&) = delete;

  /// Creates or truncates the store file.
  static std::unique_ptr<RecordStore> create(const std::filesystem::path& path,
                                             std::string session_id = "s1") {
    return std::unique_ptr<RecordStore>(new RecordStore(path, std::move(session_id), false));
  }

  /// Opens an existing store for appending; the sequence continues from the
  /// last stored entry.
  static std::unique_ptr<RecordStore> open_append(const std::filesystem::path& path,
                                                  std::string session_id) {
    return std::unique_ptr<RecordStore>(new RecordStore(path, std::move(session_id), true));
  }

  /// Appends one entry (store_sequence is assigned here) and returns the
  /// sequence. Throws StoreIoError on failure; callers that want resilience
  /// retry and then record_dropped().
  virtual std::uint64_t append(RecordEntry entry) {
    if (!open_) throw StoreIoError("append on closed store '" + path_.string() + "'");
    entry.store_sequence = ++last_sequence_;
    pending_.push_back(encode_line(entry));
    pending_bytes_ += pending_.back().size();
    ++current().entries_written;
    return entry.store_sequence;
  }

  /// Writes buffered entries to disk. Wall-clock time spent here accumulates
  /// into the session stats.
  void flush() {
    if (!open_ || pending_.empty()) return;
    auto wall_start = std::chrono::steady_clock::now();
    for (const auto& line : pending_) {
      out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
    out_.flush();
    if (!out_) throw StoreIoError("write failure on '" + path_.string() + "'");
    current().bytes_written += pending_bytes_;
    current().wall_clock_write_time += std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - wall_start);
    pending_.clear();
    pending_bytes_ = 0;
  }

  void close() {
    if (!open_) return;
    flush();
    out_.close();
    open_ = false;
  }

  bool is_open() const { return open_; }
  const std::filesystem::path& path() const { return path_; }

  /// Counts an entry lost after retry exhaustion.
  void record_dropped() { ++current().dropped; }

  SessionStats stats(const std::string& session_id) const {
    for (const auto& s : sessions_)
      if (s.session_id == session_id) return s;
    throw SimError("unknown store session '" + session_id + "'");
  }

  const SessionStats& current_stats() const { return sessions_.back(); }
  const std::vector<SessionStats>& sessions() const { return sessions_; }

  /// Entries matching `pattern` with publish_time in [from, to], ordered by
  /// (publish_time, store_sequence). Reads the on-disk file; buffered entries
  /// are flushed first.
  std::vector<RecordEntry> query(const std::string& pattern, VirtualTime from, VirtualTime to) {
    if (open_) flush();
    return query_file(path_, pattern, from, to);
  }

  static std::vector<RecordEntry> read_all(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw StoreIoError("no such store: " + path.string());
    std::ifstream in(path);
    if (!in) throw StoreIoError("cannot open store: " + path.string());
    std::vector<RecordEntry> out;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      out.push_back(decode_line(line));
    }
    return out;
  }

  static std::vector<RecordEntry> query_file(const std::filesystem::path& path,
                                             const std::string& pattern, VirtualTime from,
                                             VirtualTime to) {
    require_valid_pattern(pattern);
    if (from > to) throw SimError("query: from > to");
    auto all = read_all(path);
    std::vector<RecordEntry> out;
    for (auto& e : all) {
      if (e.publish_time < from || e.publish_time > to) continue;
      if (!topic_matches(pattern, e.topic)) continue;
      out.push_back(std::move(e));
    }
    std::stable_sort(out.begin(), out.end(), [](const RecordEntry& a, const RecordEntry& b) {
      if (a.publish_time != b.publish_time) return a.publish_time < b.publish_time;
      return a.store_sequence < b.store_sequence;
    });
    return out;
  }

  static std::string encode_line(const RecordEntry& entry) {
    nlohmann::json j{{"store_sequence", entry.store_sequence},
                     {"topic", entry.topic},
                     {"publish_time", entry.publish_time.ns()},
                     {"ingest_time", entry.ingest_time.ns()},
                     {"schema_tag", entry.schema_tag},
                     {"payload", base64::encode(entry.payload)}};
    return j.dump() + "\n";
  }

  static RecordEntry decode_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    RecordEntry e;
    e.store_sequence = j.at("store_sequence").get<std::uint64_t>();
    e.topic = j.at("topic").get<std::string>();
    e.publish_time = VirtualTime::from_ns(j.at("publish_time").get<std::int64_t>());
    e.ingest_time = VirtualTime::from_ns(j.at("ingest_time").get<std::int64_t>());
    e.schema_tag = j.at("schema_tag").get<std::string>();
    e.payload = base64::decode(j.at("payload").get<std::string>());
    return e;
  }

 protected:
  RecordStore(const std::filesystem::path& path, std::string session_id, bool append_mode)
      : path_{path} {
    if (append_mode && std::filesystem::exists(path)) {
      for (const auto& e : read_all(path)) last_sequence_ = std::max(last_sequence_, e.store_sequence);
    }
    out_.open(path, append_mode ? std::ios::app : std::ios::trunc);
    if (!out_) throw StoreIoError("cannot open store for writing: " + path.string());
    open_ = true;
    sessions_.push_back(SessionStats{std::move(session_id)});
  }

 private:
  SessionStats& current() { return sessions_.back(); }

  std::filesystem::path path_;
  std::ofstream out_;
  bool open_ = false;
  std::uint64_t last_sequence_ = 0;
  std::vector<std::string> pending_;
  std::uint64_t pending_bytes_ = 0;
  std::vector<SessionStats> sessions_;
};

}  // namespace fleetsim
