#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "jitsteer/context.hpp"
#include "jitsteer/induction.hpp"
#include "jitsteer/provider.hpp"
#include "jitsteer/run_context.hpp"

namespace jitsteer {

enum class JobKind { Induce, Experts, Tools, BestOfN };
enum class JobState { Queued, Running, Degraded, Done, Failed };

std::string_view to_string(JobKind kind) noexcept;
std::string_view to_string(JobState state) noexcept;
JobKind parse_job_kind(std::string_view name);
JobState parse_job_state(std::string_view name);

bool is_terminal(JobState state) noexcept;
/// queued→running, running→{degraded, done, failed}, degraded→done. Restart
/// recovery marks interrupted jobs failed without going through this check.
bool valid_transition(JobState from, JobState to) noexcept;

struct Job {
  std::string id;
  JobKind kind = JobKind::Induce;
  JobState state = JobState::Queued;
  std::string created_at;
  std::string updated_at;
  std::string session_id;
  std::string snapshot_id;
  std::string set_id;
  std::optional<int> objective_index;
  Json config = Json::object();
  /// Objective the job runs with, captured when the job is started.
  std::optional<Objective> objective;
  /// {original, edited} when the objective came from an induced set.
  Json objective_audit;
  std::optional<std::string> result_ref;  // relative to the data directory
  std::vector<std::string> warnings;
  std::string error;
  std::string error_detail;
};

void to_json(Json& j, const Job& job);
void from_json(const Json& j, Job& job);

struct ObjectiveOverride {
  std::string set_id;
  int index = 0;
  Objective original;
  Objective edited;
  std::string edited_at;
};

struct Session {
  std::string id;
  std::string created_at;
  std::vector<std::string> snapshots;
  std::vector<std::string> objective_sets;
  std::vector<std::string> jobs;
  std::vector<ObjectiveOverride> overrides;
};

void to_json(Json& j, const Session& s);
void from_json(const Json& j, Session& s);

struct JobRequest {
  JobKind kind = JobKind::Induce;
  std::string snapshot_id;
  std::optional<std::string> session_id;
  /// Index into the objective set, or an inline {name, description, weight}.
  Json objective;
  std::optional<std::string> set_id;
  Json config = Json::object();
};

struct ObjectiveEdit {
  std::optional<std::string> set_id;  // the session's latest set when absent
  int index = 0;
  std::optional<std::string> name;
  std::optional<std::string> description;
  std::optional<int> weight;
};

/// Jobs, sessions and file-backed persistence under one data directory:
///   snapshots/<id>/    sets/<set_id>.json    sessions/<id>.json
///   jobs/<id>.json     runs/<job_id>/        audit/calls.jsonl
class Service {
 public:
  Service(std::filesystem::path data_dir, std::shared_ptr<Gateway> gateway, std::size_t workers = 4);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  struct SnapshotCreated {
    ContextSnapshot snapshot;
    std::string session_id;
  };
  SnapshotCreated create_snapshot(IngestInput input, std::optional<std::string> session_id = std::nullopt);
  ContextSnapshot get_snapshot(std::string_view id) const;

  Session get_session(std::string_view id) const;
  /// {session, sets: [{set_id, snapshot, reasoning, objectives: [{index, name,
  /// description, weight, edited, original?}]}]}
  Json list_objectives(std::string_view session_id) const;
  /// Validates and records an override. Error(Conflict) while a queued or
  /// running job of the session uses that objective; Error(InvalidObjective)
  /// for an edit breaking the objective invariants.
  Json edit_objective(std::string_view session_id, const ObjectiveEdit& edit);

  std::string start_job(const JobRequest& request);
  Job get_job(std::string_view id) const;
  /// The stored result of a finished job; Error(NotFound) otherwise.
  Json job_result(std::string_view id) const;
  /// Blocks until the job is terminal or the timeout passes.
  Job wait_job(std::string_view id, std::chrono::milliseconds timeout) const;

  /// Helper call from the generated tool of a finished tools job.
  Json invoke_helper(std::string_view run_id, std::string_view name, const Json& args);

  /// Stops accepting work and joins the workers after the running jobs end.
  void shutdown();

  const std::filesystem::path& data_dir() const { return data_dir_; }
  Gateway& gateway() { return *gateway_; }
  /// Files that failed to reload at startup.
  std::vector<std::string> load_problems() const;

 private:
  void load_state();
  void worker_loop();
  void run_job(const std::string& id);
  Json execute(Job& job, const RunContext& ctx);

  Session& session_locked(std::string_view id);
  void persist_session(const Session& s) const;
  void persist_job(const Job& j) const;
  void transition(Job& job, JobState to);
  ObjectiveSet load_set(std::string_view set_id) const;
  std::mutex& session_mutex(std::string_view id);

  std::filesystem::path data_dir_;
  std::shared_ptr<Gateway> gateway_;
  SnapshotStore snapshots_;
  InductionCoalescer coalescer_;

  mutable std::mutex mu_;  // sessions_, jobs_, queue_, load_problems_
  mutable std::condition_variable job_cv_;
  std::map<std::string, Session, std::less<>> sessions_;
  std::map<std::string, Job, std::less<>> jobs_;
  std::map<std::string, std::unique_ptr<std::mutex>, std::less<>> session_locks_;
  std::deque<std::string> queue_;
  std::vector<std::string> load_problems_;
  bool stopping_ = false;

  std::mutex audit_mu_;
  std::vector<std::jthread> workers_;
};

}  // namespace jitsteer
