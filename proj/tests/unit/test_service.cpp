#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "jitsteer/fs_util.hpp"
#include "jitsteer/http_api.hpp"
#include "jitsteer/service.hpp"
#include "test_support.hpp"

using namespace jitsteer;
using namespace jitsteer::testing;
using namespace std::chrono_literals;

namespace {

constexpr const char* kInduce = "Now, employ the following reasoning framework";

std::string goals_reply() {
  return Json{{"reasoning", "drafting a paper"},
              {"goals",
               {{{"name", "Tighten the argument"}, {"description", "Make the claims follow."}, {"weight", 8}},
                {{"name", "Fix terminology"}, {"description", "Use one term per idea."}, {"weight", 6}}}}}
      .dump();
}

IngestInput text_input(std::string text) {
  IngestInput in;
  in.text = std::move(text);
  return in;
}

struct Fixture {
  TempDir dir;
  ScriptedSetup s;
  std::unique_ptr<Service> svc;

  explicit Fixture(std::vector<TranscriptEntry> entries)
      : s(scripted(std::move(entries))), svc(std::make_unique<Service>(dir.path(), s.gateway, 2)) {}

  std::pair<std::string, std::string> induced(const std::string& text = "draft text") {
    const auto created = svc->create_snapshot(text_input(text));
    JobRequest r;
    r.kind = JobKind::Induce;
    r.snapshot_id = created.snapshot.id;
    const auto job = svc->wait_job(svc->start_job(r), 10s);
    EXPECT_EQ(job.state, JobState::Done) << job.error_detail;
    return {created.snapshot.id, created.session_id};
  }
};

}  // namespace

TEST(JobStates, TransitionTable) {
  EXPECT_TRUE(valid_transition(JobState::Queued, JobState::Running));
  EXPECT_TRUE(valid_transition(JobState::Running, JobState::Degraded));
  EXPECT_TRUE(valid_transition(JobState::Running, JobState::Done));
  EXPECT_TRUE(valid_transition(JobState::Running, JobState::Failed));
  EXPECT_TRUE(valid_transition(JobState::Degraded, JobState::Done));
  EXPECT_FALSE(valid_transition(JobState::Queued, JobState::Done));
  EXPECT_FALSE(valid_transition(JobState::Done, JobState::Running));
  EXPECT_FALSE(valid_transition(JobState::Failed, JobState::Done));
  EXPECT_FALSE(valid_transition(JobState::Degraded, JobState::Failed));
  EXPECT_TRUE(is_terminal(JobState::Done));
  EXPECT_TRUE(is_terminal(JobState::Failed));
  EXPECT_FALSE(is_terminal(JobState::Degraded));
  for (auto k : {JobKind::Induce, JobKind::Experts, JobKind::Tools, JobKind::BestOfN}) {
    EXPECT_EQ(parse_job_kind(to_string(k)), k);
  }
}

TEST(Service, InduceJobProducesASetInTheSession) {
  Fixture f({reply(kInduce, goals_reply(), true)});
  const auto [snapshot, session] = f.induced();
  const auto listing = f.svc->list_objectives(session);
  ASSERT_EQ(listing["sets"].size(), 1u);
  EXPECT_EQ(listing["sets"][0]["objectives"][0]["name"], "Tighten the argument");
  EXPECT_EQ(listing["sets"][0]["objectives"][0]["edited"], false);
  const auto session_json = read_json(f.dir / ("sessions/" + session + ".json"));
  EXPECT_EQ(session_json["objective_sets"].size(), 1u);
}

TEST(Service, EditedWeightReachesTheDownstreamPrompt) {
  Fixture f({reply(kInduce, goals_reply(), true), reply("[sample 0]", "feedback text", true)});
  const auto [snapshot, session] = f.induced();
  ObjectiveEdit edit;
  edit.index = 0;
  edit.weight = 10;
  const auto edited = f.svc->edit_objective(session, edit);
  EXPECT_EQ(edited["weight"], 10);
  EXPECT_EQ(edited["original"]["weight"], 8);

  JobRequest r;
  r.kind = JobKind::BestOfN;
  r.snapshot_id = snapshot;
  r.objective = 0;
  r.config = {{"n", 1}};
  const auto id = f.svc->start_job(r);
  const auto job = f.svc->wait_job(id, 10s);
  ASSERT_EQ(job.state, JobState::Done) << job.error_detail;
  EXPECT_EQ(job.objective->weight, 10);
  EXPECT_EQ(job.objective_audit["original"]["weight"], 8);
  const auto prompts = read_file(f.dir / ("runs/" + id + "/prompts.jsonl"));
  EXPECT_NE(prompts.find("Weight: 10"), std::string::npos);
  EXPECT_EQ(prompts.find("Weight: 8"), std::string::npos);
  EXPECT_EQ(f.svc->list_objectives(session)["sets"][0]["objectives"][0]["edited"], true);
}

TEST(Service, InvalidEditsAreRejected) {
  Fixture f({reply(kInduce, goals_reply(), true)});
  const auto [snapshot, session] = f.induced();
  ObjectiveEdit edit;
  edit.index = 0;
  edit.weight = 13;
  EXPECT_EQ(error_of([&] { f.svc->edit_objective(session, edit); }), ErrorCode::InvalidObjective);
  edit.weight.reset();
  edit.name = "  ";
  EXPECT_EQ(error_of([&] { f.svc->edit_objective(session, edit); }), ErrorCode::InvalidObjective);
  edit.name.reset();
  edit.index = 5;
  EXPECT_EQ(error_of([&] { f.svc->edit_objective(session, edit); }), ErrorCode::NotFound);
  EXPECT_EQ(error_of([&] { f.svc->edit_objective("ses-missing", {}); }), ErrorCode::NotFound);
}

TEST(Service, EditingAnObjectiveInUseIsAConflict) {
  TranscriptEntry slow = reply("entities (experts, perspectives", "{}", false);
  slow.delay = 600ms;
  Fixture f({reply(kInduce, goals_reply(), true), slow});
  const auto [snapshot, session] = f.induced();
  JobRequest r;
  r.kind = JobKind::Experts;
  r.snapshot_id = snapshot;
  r.objective = 0;
  const auto id = f.svc->start_job(r);
  ObjectiveEdit edit;
  edit.index = 0;
  edit.weight = 9;
  EXPECT_EQ(error_of([&] { f.svc->edit_objective(session, edit); }), ErrorCode::Conflict);
  edit.index = 1;
  EXPECT_FALSE(error_of([&] { f.svc->edit_objective(session, edit); }));
  const auto job = f.svc->wait_job(id, 10s);
  EXPECT_EQ(job.state, JobState::Failed);
  edit.index = 0;
  EXPECT_FALSE(error_of([&] { f.svc->edit_objective(session, edit); }));
}

TEST(Service, FailedJobCarriesTheErrorCode) {
  Fixture f({reply(kInduce, "no structure here", true)});
  const auto created = f.svc->create_snapshot(text_input("x"));
  JobRequest r;
  r.kind = JobKind::Induce;
  r.snapshot_id = created.snapshot.id;
  const auto job = f.svc->wait_job(f.svc->start_job(r), 10s);
  EXPECT_EQ(job.state, JobState::Failed);
  EXPECT_EQ(job.error, "StructureParseFailure");
  EXPECT_FALSE(job.result_ref);
  EXPECT_EQ(error_of([&] { f.svc->job_result(job.id); }), ErrorCode::NotFound);
}

TEST(Service, WarningsFinishTheJobDoneWithWarnings) {
  const Json entities = {{"entities", {{{"name", "A"}, {"description", "An editor."}}}}};
  Fixture f({reply(kInduce, goals_reply(), true), reply("entities (experts, perspectives", entities.dump(), true),
             failure("Find recent information", ErrorCode::ProviderUnreachable, true),
             reply("COMPONENT", "0.5", true), reply("You are responding as", "Looks fine.", true),
             reply("Several experts", "merged", true)});
  const auto [snapshot, session] = f.induced();
  JobRequest r;
  r.kind = JobKind::Experts;
  r.snapshot_id = snapshot;
  r.objective = Json{{"name", "Inline goal"}, {"description", "Inline."}, {"weight", 4}};
  r.config = {{"format", "feedback"}};
  const auto job = f.svc->wait_job(f.svc->start_job(r), 10s);
  ASSERT_EQ(job.state, JobState::Done) << job.error_detail;
  ASSERT_FALSE(job.warnings.empty());
  EXPECT_NE(job.warnings[0].find("background retrieval"), std::string::npos);
  EXPECT_EQ(job.objective_audit["source"], "inline");
  EXPECT_EQ(f.svc->job_result(job.id)["experts"][0]["degraded"], true);
}

TEST(Service, BestOfNJobWritesTheAuditLog) {
  Fixture f({reply(kInduce, goals_reply(), true), reply("[sample", "text", true), reply("COMPONENT", "0.5", true)});
  const auto [snapshot, session] = f.induced();
  JobRequest bon;
  bon.kind = JobKind::BestOfN;
  bon.snapshot_id = snapshot;
  bon.objective = 0;
  bon.config = {{"n", 2}};
  const auto job = f.svc->wait_job(f.svc->start_job(bon), 10s);
  ASSERT_EQ(job.state, JobState::Done) << job.error_detail;
  const auto result = f.svc->job_result(job.id);
  EXPECT_EQ(result["candidates"], 2);
  EXPECT_EQ(result["selected"]["index"], 0);
  EXPECT_TRUE(std::filesystem::exists(f.dir / result["audit_log"].get<std::string>()));
}

TEST(Service, StartJobValidation) {
  Fixture f({reply(kInduce, goals_reply(), true)});
  JobRequest r;
  r.kind = JobKind::Induce;
  r.snapshot_id = "missing";
  EXPECT_EQ(error_of([&] { f.svc->start_job(r); }), ErrorCode::NotFound);
  const auto created = f.svc->create_snapshot(text_input("x"));
  r.snapshot_id = created.snapshot.id;
  r.config = {{"limit", 0}};
  EXPECT_EQ(error_of([&] { f.svc->start_job(r); }), ErrorCode::InvalidArgument);
  r.kind = JobKind::Experts;
  r.config = Json::object();
  EXPECT_EQ(error_of([&] { f.svc->start_job(r); }), ErrorCode::NotFound);  // no set yet
  r.objective = Json{{"name", "n"}, {"description", "d"}, {"weight", 0}};
  EXPECT_EQ(error_of([&] { f.svc->start_job(r); }), ErrorCode::InvalidObjective);
  EXPECT_EQ(error_of([&] { f.svc->create_snapshot({}); }), ErrorCode::EmptyContext);
}

TEST(Service, RestartMarksInterruptedJobsFailed) {
  TempDir dir;
  auto s = scripted({reply(kInduce, goals_reply(), true)});
  std::string done_id, session;
  {
    Service svc(dir.path(), s.gateway, 1);
    const auto created = svc.create_snapshot(text_input("x"));
    session = created.session_id;
    JobRequest r;
    r.kind = JobKind::Induce;
    r.snapshot_id = created.snapshot.id;
    done_id = svc.wait_job(svc.start_job(r), 10s).id;
  }
  // A job file left behind mid-run, as after a crash.
  auto stale = read_json(dir / ("jobs/" + done_id + ".json"));
  const auto done_before = stale;
  stale["id"] = "job-stale";
  stale["state"] = "running";
  stale["result_ref"] = nullptr;
  write_json_atomic(dir / "jobs/job-stale.json", stale);

  Service svc(dir.path(), s.gateway, 1);
  EXPECT_TRUE(svc.load_problems().empty());
  const auto recovered = svc.get_job("job-stale");
  EXPECT_EQ(recovered.state, JobState::Failed);
  ASSERT_FALSE(recovered.warnings.empty());
  EXPECT_NE(recovered.warnings.back().find("restart"), std::string::npos);
  EXPECT_EQ(Json(svc.get_job(done_id)), done_before);
  EXPECT_EQ(svc.list_objectives(session)["sets"].size(), 1u);
}

TEST(Service, CorruptFilesAreReportedNotFatal) {
  TempDir dir;
  auto s = scripted(std::vector<TranscriptEntry>{});
  { Service svc(dir.path(), s.gateway, 1); }
  write_file_atomic(dir / "jobs/job-bad.json", "{not json");
  Service svc(dir.path(), s.gateway, 1);
  ASSERT_EQ(svc.load_problems().size(), 1u);
  EXPECT_EQ(error_of([&] { svc.get_job("job-bad"); }), ErrorCode::NotFound);
}

TEST(BindAddress, Parse) {
  EXPECT_EQ(parse_bind_address("127.0.0.1:8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
  EXPECT_EQ(parse_bind_address(":9000").first, "127.0.0.1");
  EXPECT_EQ(error_of([] { parse_bind_address("host:notaport"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_of([] { parse_bind_address("host:70000"); }), ErrorCode::InvalidArgument);
}

namespace {

struct HttpFixture : Fixture {
  HttpApi api;
  int port = 0;
  std::thread thread;
  httplib::Client client;

  explicit HttpFixture(std::vector<TranscriptEntry> entries)
      : Fixture(std::move(entries)), api(*svc), port(api.bind("127.0.0.1", 0)), thread([this] { api.listen(); }),
        client("127.0.0.1", port) {
    client.set_read_timeout(10, 0);
  }
  ~HttpFixture() {
    api.stop();
    thread.join();
  }

  Json post(const std::string& path, const Json& body, int expect) {
    auto res = client.Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << path << " " << res->body;
    return Json::parse(res->body);
  }
  Json get(const std::string& path, int expect) {
    auto res = client.Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << path << " " << res->body;
    return Json::parse(res->body);
  }
  Json patch(const std::string& path, const Json& body, int expect) {
    auto res = client.Patch(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << path << " " << res->body;
    return Json::parse(res->body);
  }

  Json wait_done(const std::string& job_id) {
    for (int i = 0; i < 200; ++i) {
      auto job = get("/jobs/" + job_id, 200);
      const auto state = job.value("state", "");
      if (state == "done" || state == "failed") return job;
      std::this_thread::sleep_for(50ms);
    }
    return {};
  }
};

}  // namespace

TEST(HttpApi, SnapshotLifecycle) {
  HttpFixture h({});
  EXPECT_EQ(h.get("/healthz", 200)["ok"], true);
  const auto created = h.post("/snapshots", {{"text", "draft"}, {"source_hint", "Overleaf"}}, 201);
  EXPECT_FALSE(created["id"].get<std::string>().empty());
  EXPECT_FALSE(created["session"].get<std::string>().empty());
  const auto summary = h.get("/snapshots/" + created["id"].get<std::string>(), 200);
  EXPECT_EQ(summary["text"], "draft");

  EXPECT_EQ(h.post("/snapshots", {{"text", "  "}}, 422)["error"], "EmptyContext");
  EXPECT_EQ(h.get("/snapshots/nope", 404)["error"], "NotFound");
  auto res = h.client.Post("/snapshots", "{broken", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(h.get("/jobs/job-none", 404)["error"], "NotFound");
}

TEST(HttpApi, ImageSnapshotIsDecoded) {
  HttpFixture h({});
  const auto created = h.post("/snapshots", {{"image", {{"media_type", "image/png"}, {"data", "aGVsbG8="}}}}, 201);
  const auto summary = h.get("/snapshots/" + created["id"].get<std::string>(), 200);
  EXPECT_EQ(summary["image"]["bytes"], 5);
}

TEST(HttpApi, JobsObjectivesAndEdits) {
  HttpFixture h({reply(kInduce, goals_reply(), true)});
  const auto created = h.post("/snapshots", {{"text", "draft"}}, 201);
  const auto started = h.post("/jobs", {{"kind", "induce"}, {"snapshot", created["id"]}}, 202);
  EXPECT_EQ(started["session"], created["session"]);
  const auto job = h.wait_done(started["id"]);
  ASSERT_EQ(job["state"], "done");
  EXPECT_EQ(job["result"]["objectives"][0]["weight"], 8);
  EXPECT_FALSE(job["result_ref"].is_null());

  const std::string objectives = "/sessions/" + created["session"].get<std::string>() + "/objectives";
  EXPECT_EQ(h.get(objectives, 200)["sets"][0]["objectives"].size(), 2u);
  EXPECT_EQ(h.patch(objectives, {{"index", 0}, {"weight", 10}}, 200)["weight"], 10);
  EXPECT_EQ(h.patch(objectives, {{"index", 0}, {"weight", 13}}, 422)["error"], "InvalidObjective");
  EXPECT_EQ(h.patch(objectives, {{"index", 0}, {"weight", 2.5}}, 422)["error"], "InvalidObjective");
  EXPECT_EQ(h.patch(objectives, {{"index", "0"}}, 422)["error"], "InvalidArgument");
  EXPECT_EQ(h.post("/jobs", {{"kind", "nonsense"}, {"snapshot", created["id"]}}, 422)["error"], "InvalidArgument");
}

TEST(HttpApi, HelperEndpointServesTheGeneratedTool) {
  auto transcript = load_transcript(data_path("golden/tools_transcript.json"));
  HttpFixture h(transcript.entries);
  const auto created = h.post("/snapshots", {{"text", read_file(data_path("golden/figma_architecture.txt"))},
                                             {"source_hint", "Figma"}}, 201);
  h.wait_done(h.post("/jobs", {{"kind", "induce"}, {"snapshot", created["id"]}}, 202)["id"]);
  const auto tools = h.post("/jobs", {{"kind", "tools"}, {"snapshot", created["id"]}, {"objective", 0},
                                      {"config", {{"with_experts", true}}}}, 202);
  const auto job = h.wait_done(tools["id"]);
  ASSERT_EQ(job["state"], "done") << job.dump();
  const std::string run = tools["id"];

  const auto experts = h.post("/runs/" + run + "/helpers/getExperts", {{"args", Json::array()}}, 200)["result"];
  ASSERT_EQ(experts.size(), 3u);
  EXPECT_EQ(experts[0]["name"], "AI Systems Architect");
  const auto answer = h.post("/runs/" + run + "/helpers/promptExpert",
                             {{"args", {experts[0]["id"], "How do goals relate to objectives?"}}}, 200);
  EXPECT_TRUE(answer["result"].is_string());
  EXPECT_FALSE(answer["result"].get<std::string>().empty());
  EXPECT_EQ(h.post("/runs/" + run + "/helpers/deleteAll", {{"args", Json::array()}}, 404)["error"], "NotFound");
  EXPECT_EQ(h.post("/runs/job-none/helpers/getExperts", {{"args", Json::array()}}, 404)["error"], "NotFound");
  EXPECT_TRUE(std::filesystem::exists(h.dir / ("runs/" + run + "/tool.html")));
}
