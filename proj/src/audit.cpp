#include "archpipe/audit.hpp"

#include "archpipe/util.hpp"

namespace archpipe {

json AuditEvent::to_json() const {
  json j{{"kind", kind}, {"stage", stage}};
  if (!scene_id.empty()) j["scene_id"] = scene_id;
  if (!prompt_hash.empty()) j["prompt_hash"] = prompt_hash;
  if (attempt) j["attempt"] = *attempt;
  if (!outcome.empty()) j["outcome"] = outcome;
  if (!from.empty()) j["from"] = from;
  if (!to.empty()) j["to"] = to;
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

AuditLog::AuditLog(const std::filesystem::path& file)
    : out_(file, std::ios::app | std::ios::binary) {}

void AuditLog::append(const AuditEvent& ev) {
  if (!out_.is_open()) return;
  std::lock_guard<std::mutex> lock(mutex_);
  out_ << ev.to_json().dump() << '\n';
  out_.flush();
}

void AuditLog::call(const std::string& stage, const std::string& scene_id,
                    std::uint64_t prompt_hash, int attempt,
                    const std::string& outcome) {
  AuditEvent ev;
  ev.kind = "call";
  ev.stage = stage;
  ev.scene_id = scene_id;
  ev.prompt_hash = to_hex16(prompt_hash);
  ev.attempt = attempt;
  ev.outcome = outcome;
  append(ev);
}

void AuditLog::transition(const std::string& stage, const std::string& scene_id,
                          const std::string& from, const std::string& to,
                          const std::string& detail) {
  AuditEvent ev;
  ev.kind = "transition";
  ev.stage = stage;
  ev.scene_id = scene_id;
  ev.from = from;
  ev.to = to;
  ev.detail = detail;
  append(ev);
}

void AuditLog::note(const std::string& stage, const std::string& scene_id,
                    const std::string& detail) {
  AuditEvent ev;
  ev.kind = "note";
  ev.stage = stage;
  ev.scene_id = scene_id;
  ev.detail = detail;
  append(ev);
}

}  // namespace archpipe
