#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>

#include "archpipe/types.hpp"

namespace archpipe {

// One audit row. Remote calls carry prompt_hash/attempt/outcome; state
// transitions carry from/to (+reason); stage notes carry detail.
struct AuditEvent {
  std::string kind;   // "call" | "transition" | "note"
  std::string stage;
  std::string scene_id;
  std::string prompt_hash;
  std::optional<int> attempt;
  std::string outcome;
  std::string from;
  std::string to;
  std::string detail;

  json to_json() const;
};

// Append-only JSONL audit trail. Rows carry no timestamps so that runs with
// identical inputs produce identical trails.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(const std::filesystem::path& file);

  void append(const AuditEvent& ev);

  void call(const std::string& stage, const std::string& scene_id,
            std::uint64_t prompt_hash, int attempt, const std::string& outcome);
  void transition(const std::string& stage, const std::string& scene_id,
                  const std::string& from, const std::string& to,
                  const std::string& detail = "");
  void note(const std::string& stage, const std::string& scene_id,
            const std::string& detail);

  bool enabled() const { return out_.is_open(); }

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace archpipe
