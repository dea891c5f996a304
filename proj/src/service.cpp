#include "jitsteer/service.hpp"

#include <random>

#include <spdlog/spdlog.h>

#include "jitsteer/experts.hpp"
#include "jitsteer/fs_util.hpp"
#include "jitsteer/prompts.hpp"
#include "jitsteer/replay_eval.hpp"
#include "jitsteer/steering.hpp"
#include "jitsteer/tools.hpp"

namespace jitsteer {

namespace fs = std::filesystem;

std::string_view to_string(JobKind kind) noexcept {
  switch (kind) {
    case JobKind::Induce: return "induce";
    case JobKind::Experts: return "experts";
    case JobKind::Tools: return "tools";
    case JobKind::BestOfN: return "best_of_n";
  }
  return "induce";
}

std::string_view to_string(JobState state) noexcept {
  switch (state) {
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Degraded: return "degraded";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "failed";
}

JobKind parse_job_kind(std::string_view name) {
  for (auto k : {JobKind::Induce, JobKind::Experts, JobKind::Tools, JobKind::BestOfN}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown job kind '" + std::string(name) + "'");
}

JobState parse_job_state(std::string_view name) {
  for (auto s : {JobState::Queued, JobState::Running, JobState::Degraded, JobState::Done, JobState::Failed}) {
    if (name == to_string(s)) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown job state '" + std::string(name) + "'");
}

bool is_terminal(JobState state) noexcept { return state == JobState::Done || state == JobState::Failed; }

bool valid_transition(JobState from, JobState to) noexcept {
  switch (from) {
    case JobState::Queued: return to == JobState::Running;
    case JobState::Running: return to == JobState::Degraded || to == JobState::Done || to == JobState::Failed;
    case JobState::Degraded: return to == JobState::Done;
    case JobState::Done:
    case JobState::Failed: return false;
  }
  return false;
}

void to_json(Json& j, const Job& job) {
  j = Json{{"id", job.id},
           {"kind", to_string(job.kind)},
           {"state", to_string(job.state)},
           {"created_at", job.created_at},
           {"updated_at", job.updated_at},
           {"session", job.session_id},
           {"snapshot", job.snapshot_id},
           {"set_id", job.set_id},
           {"config", job.config},
           {"warnings", job.warnings}};
  j["objective_index"] = job.objective_index ? Json(*job.objective_index) : Json();
  j["objective"] = job.objective ? Json(*job.objective) : Json();
  j["objective_audit"] = job.objective_audit;
  j["result_ref"] = job.result_ref ? Json(*job.result_ref) : Json();
  if (!job.error.empty()) {
    j["error"] = job.error;
    j["error_detail"] = job.error_detail;
  }
}

void from_json(const Json& j, Job& job) {
  job.id = j.at("id").get<std::string>();
  job.kind = parse_job_kind(j.at("kind").get<std::string>());
  job.state = parse_job_state(j.at("state").get<std::string>());
  job.created_at = j.value("created_at", "");
  job.updated_at = j.value("updated_at", "");
  job.session_id = j.value("session", "");
  job.snapshot_id = j.value("snapshot", "");
  job.set_id = j.value("set_id", "");
  job.config = j.value("config", Json::object());
  job.warnings = j.value("warnings", std::vector<std::string>{});
  job.objective_index.reset();
  if (j.contains("objective_index") && !j.at("objective_index").is_null()) {
    job.objective_index = j.at("objective_index").get<int>();
  }
  job.objective.reset();
  if (j.contains("objective") && !j.at("objective").is_null()) job.objective = j.at("objective").get<Objective>();
  job.objective_audit = j.value("objective_audit", Json());
  job.result_ref.reset();
  if (j.contains("result_ref") && !j.at("result_ref").is_null()) job.result_ref = j.at("result_ref").get<std::string>();
  job.error = j.value("error", "");
  job.error_detail = j.value("error_detail", "");
}

void to_json(Json& j, const Session& s) {
  j = Json{{"id", s.id},
           {"created_at", s.created_at},
           {"snapshots", s.snapshots},
           {"objective_sets", s.objective_sets},
           {"jobs", s.jobs},
           {"overrides", Json::array()}};
  for (const auto& o : s.overrides) {
    j["overrides"].push_back(
        {{"set_id", o.set_id}, {"index", o.index}, {"original", o.original}, {"edited", o.edited}, {"edited_at", o.edited_at}});
  }
}

void from_json(const Json& j, Session& s) {
  s.id = j.at("id").get<std::string>();
  s.created_at = j.value("created_at", "");
  s.snapshots = j.value("snapshots", std::vector<std::string>{});
  s.objective_sets = j.value("objective_sets", std::vector<std::string>{});
  s.jobs = j.value("jobs", std::vector<std::string>{});
  s.overrides.clear();
  for (const auto& o : j.value("overrides", Json::array())) {
    s.overrides.push_back({o.at("set_id").get<std::string>(), o.at("index").get<int>(),
                           o.at("original").get<Objective>(), o.at("edited").get<Objective>(),
                           o.value("edited_at", "")});
  }
}

namespace {

std::string fresh_id(std::string_view prefix) {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return std::string(prefix) + buf;
}

void require_safe(std::string_view id, std::string_view what) {
  if (!is_safe_id(id)) throw Error(ErrorCode::NotFound, "unknown " + std::string(what) + " '" + std::string(id) + "'");
}

const ObjectiveOverride* find_override(const Session& s, std::string_view set_id, int index) {
  for (const auto& o : s.overrides) {
    if (o.set_id == set_id && o.index == index) return &o;
  }
  return nullptr;
}

template <typename T>
T config_value(const Json& config, const char* key, T fallback) {
  if (!config.contains(key) || config.at(key).is_null()) return fallback;
  try {
    return config.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("config.") + key + " has the wrong type");
  }
}

void check_config(JobKind kind, const Json& config) {
  if (!config.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be an object");
  switch (kind) {
    case JobKind::Induce: {
      const int limit = config_value(config, "limit", 3);
      if (limit < 1 || limit > 10) throw Error(ErrorCode::InvalidArgument, "config.limit must be within 1-10");
      config_value<std::string>(config, "meta", "");
      break;
    }
    case JobKind::Experts: {
      const auto format = config_value<std::string>(config, "format", "auto");
      if (format != "auto") parse_output_format(format);
      if (config_value(config, "limit", 3) < 1 || config_value(config, "keep", 3) < 1) {
        throw Error(ErrorCode::InvalidArgument, "config.limit and config.keep must be >= 1");
      }
      break;
    }
    case JobKind::Tools:
      if (config_value(config, "limit", 3) < 1) throw Error(ErrorCode::InvalidArgument, "config.limit must be >= 1");
      if (config_value(config, "rounds", 1) < 0) throw Error(ErrorCode::InvalidArgument, "config.rounds must be >= 0");
      config_value(config, "with_experts", false);
      break;
    case JobKind::BestOfN:
      if (config_value(config, "n", 1) < 1) throw Error(ErrorCode::InvalidArgument, "config.n must be >= 1");
      prompts::generator_by_name(config_value<std::string>(config, "template", "feedback"));
      break;
  }
}

}  // namespace

Service::Service(fs::path data_dir, std::shared_ptr<Gateway> gateway, std::size_t workers)
    : data_dir_(std::move(data_dir)), gateway_(std::move(gateway)), snapshots_(data_dir_ / "snapshots") {
  for (const char* sub : {"snapshots", "sets", "sessions", "jobs", "runs", "audit"}) {
    fs::create_directories(data_dir_ / sub);
  }
  load_state();
  gateway_->set_observer([this](const CallRecord& r) {
    Json line = {{"at", utc_now_iso()},        {"job_id", r.job_id}, {"role", to_string(r.role)},
                 {"prompt_hash", r.prompt_hash}, {"attempt", r.attempt}, {"ok", r.ok}};
    if (!r.error.empty()) line["error"] = r.error;
    std::lock_guard lock(audit_mu_);
    append_line(data_dir_ / "audit" / "calls.jsonl", line.dump());
    if (is_safe_id(r.job_id)) {
      Json prompt = {{"role", to_string(r.role)}, {"attempt", r.attempt}, {"prompt_hash", r.prompt_hash},
                     {"prompt", r.prompt}};
      append_line(data_dir_ / "runs" / r.job_id / "prompts.jsonl", prompt.dump());
    }
  });
  for (std::size_t i = 0; i < std::max<std::size_t>(workers, 1); ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

Service::~Service() {
  shutdown();
  gateway_->set_observer({});
}

void Service::shutdown() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  job_cv_.notify_all();
  workers_.clear();
}

void Service::load_state() {
  auto json_files = [](const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto& p = entry.path();
      if (p.filename().string().find(".tmp.") != std::string::npos) {
        std::error_code ec;
        fs::remove(p, ec);  // leftover from an interrupted atomic write
        continue;
      }
      if (entry.is_regular_file() && p.extension() == ".json") out.push_back(p);
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  for (const auto& path : json_files(data_dir_ / "sessions")) {
    try {
      auto s = read_json(path).get<Session>();
      for (const auto& o : s.overrides) {
        if (auto problem = objective_problem(o.edited)) {
          throw Error(ErrorCode::InvalidObjective, "override " + o.set_id + "[" + std::to_string(o.index) + "]: " + *problem);
        }
        if (!fs::exists(data_dir_ / "sets" / (o.set_id + ".json"))) {
          throw Error(ErrorCode::NotFound, "override refers to missing set " + o.set_id);
        }
      }
      sessions_.emplace(s.id, std::move(s));
    } catch (const std::exception& e) {
      load_problems_.push_back(path.string() + ": " + e.what());
      spdlog::error("could not reload session {}: {}", path.string(), e.what());
    }
  }

  for (const auto& path : json_files(data_dir_ / "jobs")) {
    try {
      auto job = read_json(path).get<Job>();
      if (!is_terminal(job.state)) {
        job.warnings.push_back("service restarted while the job was " + std::string(to_string(job.state)));
        job.error = std::string(to_string(ErrorCode::Internal));
        job.error_detail = "interrupted by a service restart";
        job.state = JobState::Failed;
        job.result_ref.reset();
        job.updated_at = utc_now_iso();
        persist_job(job);
        spdlog::warn("job {} was interrupted by a restart; marked failed", job.id);
      }
      jobs_.emplace(job.id, std::move(job));
    } catch (const std::exception& e) {
      load_problems_.push_back(path.string() + ": " + e.what());
      spdlog::error("could not reload job {}: {}", path.string(), e.what());
    }
  }
}

std::vector<std::string> Service::load_problems() const {
  std::lock_guard lock(mu_);
  return load_problems_;
}

void Service::persist_session(const Session& s) const {
  write_json_atomic(data_dir_ / "sessions" / (s.id + ".json"), Json(s));
}

void Service::persist_job(const Job& j) const { write_json_atomic(data_dir_ / "jobs" / (j.id + ".json"), Json(j)); }

void Service::transition(Job& job, JobState to) {
  if (!valid_transition(job.state, to)) {
    throw Error(ErrorCode::Internal, "invalid job transition " + std::string(to_string(job.state)) + " -> " +
                                         std::string(to_string(to)));
  }
  job.state = to;
  job.updated_at = utc_now_iso();
  persist_job(job);
}

std::mutex& Service::session_mutex(std::string_view id) {
  std::lock_guard lock(mu_);
  auto it = session_locks_.find(id);
  if (it == session_locks_.end()) it = session_locks_.emplace(std::string(id), std::make_unique<std::mutex>()).first;
  return *it->second;
}

Session& Service::session_locked(std::string_view id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "unknown session '" + std::string(id) + "'");
  return it->second;
}

ObjectiveSet Service::load_set(std::string_view set_id) const {
  require_safe(set_id, "objective set");
  const auto path = data_dir_ / "sets" / (std::string(set_id) + ".json");
  if (!fs::exists(path)) throw Error(ErrorCode::NotFound, "unknown objective set '" + std::string(set_id) + "'");
  return read_json(path).get<ObjectiveSet>();
}

Service::SnapshotCreated Service::create_snapshot(IngestInput input, std::optional<std::string> session_id) {
  auto snapshot = ingest(std::move(input));
  snapshots_.save(snapshot);
  std::string sid;
  if (session_id) {
    require_safe(*session_id, "session");
    sid = *session_id;
  } else {
    sid = fresh_id("ses-");
  }
  std::lock_guard session_lock(session_mutex(sid));
  std::lock_guard lock(mu_);
  if (session_id) {
    session_locked(sid);  // must exist
  } else {
    sessions_.emplace(sid, Session{sid, utc_now_iso(), {}, {}, {}, {}});
  }
  Session& s = sessions_.at(sid);
  if (std::find(s.snapshots.begin(), s.snapshots.end(), snapshot.id) == s.snapshots.end()) {
    s.snapshots.push_back(snapshot.id);
  }
  persist_session(s);
  return {std::move(snapshot), sid};
}

ContextSnapshot Service::get_snapshot(std::string_view id) const {
  require_safe(id, "snapshot");
  if (!snapshots_.exists(id)) throw Error(ErrorCode::NotFound, "unknown snapshot '" + std::string(id) + "'");
  return snapshots_.load(id);
}

Session Service::get_session(std::string_view id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "unknown session '" + std::string(id) + "'");
  return it->second;
}

Json Service::list_objectives(std::string_view session_id) const {
  const Session s = get_session(session_id);
  Json out = {{"session", s.id}, {"sets", Json::array()}};
  for (const auto& set_id : s.objective_sets) {
    const auto set = load_set(set_id);
    Json entry = {{"set_id", set.set_id}, {"snapshot", set.source_snapshot}, {"reasoning", set.reasoning},
                  {"objectives", Json::array()}};
    for (std::size_t i = 0; i < set.objectives.size(); ++i) {
      const auto* o = find_override(s, set.set_id, static_cast<int>(i));
      const Objective& eff = o ? o->edited : set.objectives[i];
      Json item = {{"index", i}, {"name", eff.name}, {"description", eff.description}, {"weight", eff.weight},
                   {"edited", o != nullptr}};
      if (o) item["original"] = o->original;
      entry["objectives"].push_back(std::move(item));
    }
    out["sets"].push_back(std::move(entry));
  }
  return out;
}

Json Service::edit_objective(std::string_view session_id, const ObjectiveEdit& edit) {
  require_safe(session_id, "session");
  std::lock_guard session_lock(session_mutex(session_id));
  Session snapshot_of_session = get_session(session_id);
  std::string set_id;
  if (edit.set_id) {
    set_id = *edit.set_id;
    if (std::find(snapshot_of_session.objective_sets.begin(), snapshot_of_session.objective_sets.end(), set_id) ==
        snapshot_of_session.objective_sets.end()) {
      throw Error(ErrorCode::NotFound, "set '" + set_id + "' does not belong to session '" + std::string(session_id) + "'");
    }
  } else {
    if (snapshot_of_session.objective_sets.empty()) {
      throw Error(ErrorCode::NotFound, "session '" + std::string(session_id) + "' has no objective sets");
    }
    set_id = snapshot_of_session.objective_sets.back();
  }
  const auto set = load_set(set_id);
  if (edit.index < 0 || static_cast<std::size_t>(edit.index) >= set.objectives.size()) {
    throw Error(ErrorCode::NotFound, "objective index " + std::to_string(edit.index) + " out of range");
  }

  std::lock_guard lock(mu_);
  Session& s = session_locked(session_id);
  const auto* existing = find_override(s, set_id, edit.index);
  const Objective original = set.objectives[static_cast<std::size_t>(edit.index)];
  Objective edited = existing ? existing->edited : original;
  if (edit.name) edited.name = *edit.name;
  if (edit.description) edited.description = *edit.description;
  if (edit.weight) edited.weight = *edit.weight;
  if (auto problem = objective_problem(edited)) throw Error(ErrorCode::InvalidObjective, *problem);

  for (const auto& job_id : s.jobs) {
    const auto it = jobs_.find(job_id);
    if (it == jobs_.end() || is_terminal(it->second.state)) continue;
    const Job& j = it->second;
    if (j.set_id == set_id && j.objective_index == edit.index) {
      throw Error(ErrorCode::Conflict, "job " + j.id + " is " + std::string(to_string(j.state)) + " with this objective");
    }
  }

  const std::string now = utc_now_iso();
  if (existing) {
    for (auto& o : s.overrides) {
      if (o.set_id == set_id && o.index == edit.index) {
        o.edited = edited;
        o.edited_at = now;
      }
    }
  } else {
    s.overrides.push_back({set_id, edit.index, original, edited, now});
  }
  persist_session(s);
  return {{"set_id", set_id},       {"index", edit.index},         {"name", edited.name},
          {"description", edited.description}, {"weight", edited.weight}, {"edited", true},
          {"original", original}};
}

std::string Service::start_job(const JobRequest& request) {
  require_safe(request.snapshot_id, "snapshot");
  if (!snapshots_.exists(request.snapshot_id)) {
    throw Error(ErrorCode::NotFound, "unknown snapshot '" + request.snapshot_id + "'");
  }
  check_config(request.kind, request.config);

  // Resolve the session: explicit, else the first one holding the snapshot, else a new one.
  std::string sid;
  if (request.session_id) {
    require_safe(*request.session_id, "session");
    sid = *request.session_id;
    get_session(sid);
  } else {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : sessions_) {
      if (std::find(s.snapshots.begin(), s.snapshots.end(), request.snapshot_id) != s.snapshots.end()) {
        sid = id;
        break;
      }
    }
    if (sid.empty()) {
      sid = fresh_id("ses-");
      Session s{sid, utc_now_iso(), {request.snapshot_id}, {}, {}, {}};
      persist_session(s);
      sessions_.emplace(sid, std::move(s));
    }
  }

  std::lock_guard session_lock(session_mutex(sid));
  Job job;
  job.id = fresh_id("job-");
  job.kind = request.kind;
  job.created_at = job.updated_at = utc_now_iso();
  job.session_id = sid;
  job.snapshot_id = request.snapshot_id;
  job.config = request.config;

  if (request.kind != JobKind::Induce) {
    if (request.objective.is_object()) {
      job.objective = request.objective.get<Objective>();
      if (auto problem = objective_problem(*job.objective)) throw Error(ErrorCode::InvalidObjective, *problem);
      job.objective_audit = {{"source", "inline"}, {"effective", *job.objective}};
    } else {
      int index = 0;
      if (request.objective.is_number_integer()) {
        index = request.objective.get<int>();
      } else if (!request.objective.is_null()) {
        throw Error(ErrorCode::InvalidArgument, "objective must be an index or an object");
      }
      const Session s = get_session(sid);
      std::string set_id;
      if (request.set_id) {
        set_id = *request.set_id;
      } else {
        for (auto it = s.objective_sets.rbegin(); it != s.objective_sets.rend(); ++it) {
          if (load_set(*it).source_snapshot == request.snapshot_id) {
            set_id = *it;
            break;
          }
        }
      }
      if (set_id.empty()) {
        throw Error(ErrorCode::NotFound, "no objective set for snapshot '" + request.snapshot_id +
                                             "' in this session; run an induce job first");
      }
      const auto set = load_set(set_id);
      if (index < 0 || static_cast<std::size_t>(index) >= set.objectives.size()) {
        throw Error(ErrorCode::NotFound, "objective index " + std::to_string(index) + " out of range");
      }
      const Objective& original = set.objectives[static_cast<std::size_t>(index)];
      const auto* o = find_override(s, set_id, index);
      job.set_id = set_id;
      job.objective_index = index;
      job.objective = o ? o->edited : original;
      job.objective_audit = {{"source", "set"}, {"original", original}, {"effective", *job.objective},
                             {"edited", o != nullptr}};
    }
  }

  {
    std::lock_guard lock(mu_);
    persist_job(job);
    Session& s = session_locked(sid);
    s.jobs.push_back(job.id);
    persist_session(s);
    jobs_.emplace(job.id, job);
    queue_.push_back(job.id);
  }
  job_cv_.notify_all();
  spdlog::info("job {} ({}) queued for snapshot {}", job.id, to_string(job.kind), job.snapshot_id);
  return job.id;
}

Job Service::get_job(std::string_view id) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "unknown job '" + std::string(id) + "'");
  return it->second;
}

Json Service::job_result(std::string_view id) const {
  const Job job = get_job(id);
  if (job.state != JobState::Done || !job.result_ref) {
    throw Error(ErrorCode::NotFound, "job '" + std::string(id) + "' has no result");
  }
  return read_json(data_dir_ / *job.result_ref);
}

Job Service::wait_job(std::string_view id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "unknown job '" + std::string(id) + "'");
  job_cv_.wait_for(lock, timeout, [&] { return is_terminal(it->second.state); });
  return it->second;
}

void Service::worker_loop() {
  while (true) {
    std::string id;
    {
      std::unique_lock lock(mu_);
      job_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
    }
    run_job(id);
  }
}

void Service::run_job(const std::string& id) {
  Job job;
  {
    std::lock_guard lock(mu_);
    Job& j = jobs_.at(id);
    transition(j, JobState::Running);
    job = j;
  }
  RunContext ctx;
  ctx.gateway = gateway_.get();
  ctx.job_id = id;
  ctx.audit_dir = data_dir_ / "runs" / id;
  fs::create_directories(ctx.audit_dir);

  std::optional<Json> result;
  std::string error, detail;
  try {
    result = execute(job, ctx);
    write_json_atomic(ctx.audit_dir / "result.json", *result);
  } catch (const Error& e) {
    error = std::string(to_string(e.code()));
    detail = e.detail();
  } catch (const std::exception& e) {
    error = std::string(to_string(ErrorCode::Internal));
    detail = e.what();
  }

  {
    std::lock_guard lock(mu_);
    Job& j = jobs_.at(id);
    j.warnings = ctx.warnings->items();
    if (result) {
      if (!j.warnings.empty()) transition(j, JobState::Degraded);
      j.result_ref = (fs::path("runs") / id / "result.json").string();
      transition(j, JobState::Done);
    } else {
      j.error = error;
      j.error_detail = detail;
      transition(j, JobState::Failed);
      spdlog::warn("job {} failed: {}: {}", id, error, detail);
    }
  }
  job_cv_.notify_all();
}

Json Service::execute(Job& job, const RunContext& ctx) {
  const auto snapshot = snapshots_.load(job.snapshot_id);
  const Json& cfg = job.config;
  switch (job.kind) {
    case JobKind::Induce: {
      InductionConfig ic;
      ic.limit = config_value(cfg, "limit", 3);
      if (auto meta = config_value<std::string>(cfg, "meta", ""); !meta.empty()) ic.meta_instructions = meta;
      const auto set = coalescer_.induce(ctx, snapshot, ic);
      save_objective_set(snapshots_, set);
      write_json_atomic(data_dir_ / "sets" / (set.set_id + ".json"), Json(set));
      {
        std::lock_guard session_lock(session_mutex(job.session_id));
        std::lock_guard lock(mu_);
        Session& s = session_locked(job.session_id);
        if (std::find(s.objective_sets.begin(), s.objective_sets.end(), set.set_id) == s.objective_sets.end()) {
          s.objective_sets.push_back(set.set_id);
        }
        persist_session(s);
      }
      return Json(set);
    }
    case JobKind::Experts: {
      ExpertsConfig ec;
      ec.propose_limit = config_value(cfg, "limit", 3);
      ec.keep = static_cast<std::size_t>(config_value(cfg, "keep", 3));
      if (const auto format = config_value<std::string>(cfg, "format", "auto"); format != "auto") {
        ec.format = parse_output_format(format);
      }
      ec.input.user_input = config_value<std::string>(cfg, "user_input", "");
      if (auto h = config_value<std::string>(cfg, "highlight", ""); !h.empty()) ec.input.highlight = h;
      return to_json(run_expertise_pipeline(ctx, snapshot, *job.objective, ec));
    }
    case JobKind::Tools: {
      ToolsConfig tc;
      tc.propose_limit = config_value(cfg, "limit", 3);
      tc.with_experts = config_value(cfg, "with_experts", false);
      tc.rounds = config_value(cfg, "rounds", 1);
      tc.experts.keep = static_cast<std::size_t>(config_value(cfg, "keep", 3));
      const auto result = run_tool_pipeline(ctx, snapshot, *job.objective, tc);
      write_tool_outputs(ctx.audit_dir, result);
      return to_json(result);
    }
    case JobKind::BestOfN: {
      const int n = config_value(cfg, "n", 1);
      const auto inputs = generator_inputs(config_value<std::string>(cfg, "template", "feedback"), snapshot);
      const auto r = best_of_n(ctx, inputs.generator, inputs.values, inputs.part_values, *job.objective, n);
      return {{"selected",
               {{"index", r.selected.index},
                {"content", r.selected.content},
                {"score", r.selected.score ? Json(*r.selected.score) : Json()}}},
              {"candidates", r.candidates.size()},
              {"audit_log", (fs::path("runs") / job.id / "best_of_n.jsonl").string()}};
    }
  }
  throw Error(ErrorCode::Internal, "unhandled job kind");
}

Json Service::invoke_helper(std::string_view run_id, std::string_view name, const Json& args) {
  require_safe(run_id, "run");
  const Job job = get_job(run_id);
  if (job.kind != JobKind::Tools || job.state != JobState::Done || !job.objective) {
    throw Error(ErrorCode::NotFound, "run '" + std::string(run_id) + "' has no generated tool");
  }
  const auto tool = read_json(data_dir_ / "runs" / job.id / "tool.json").get<GeneratedTool>();
  RunContext ctx;
  ctx.gateway = gateway_.get();
  ctx.job_id = job.id;
  return jitsteer::invoke_helper(ctx, tool, *job.objective, name, args);
}

}  // namespace jitsteer
