// jitsteer: command-line front end. Each command mirrors one HTTP endpoint and
// runs against the same data directory the server uses.

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "jitsteer/error.hpp"
#include "jitsteer/fs_util.hpp"
#include "jitsteer/http_api.hpp"
#include "jitsteer/replay_eval.hpp"
#include "jitsteer/service.hpp"

namespace fs = std::filesystem;
using namespace jitsteer;

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

struct Globals {
  std::string data_dir = env_or("JITSTEER_DATA_DIR", "jitsteer-data");
  std::string providers = env_or("JITSTEER_PROVIDER_CONFIG", "");
  int timeout_s = 900;
  bool compact = false;
};

std::shared_ptr<Gateway> make_gateway(const Globals& g) {
  return Gateway::from_config(g.providers.empty() ? default_gateway_config() : load_gateway_config(g.providers));
}

void print(const Json& j, const Globals& g) { std::cout << (g.compact ? j.dump() : j.dump(2)) << "\n"; }

/// Starts a job, waits for it and returns its result; throws on failure.
Json run_job(Service& svc, const JobRequest& req, const Globals& g, std::string* job_id = nullptr) {
  const auto id = svc.start_job(req);
  if (job_id) *job_id = id;
  const auto job = svc.wait_job(id, std::chrono::seconds(g.timeout_s));
  for (const auto& w : job.warnings) spdlog::warn("{}", w);
  if (job.state == JobState::Failed) throw Error(parse_error_code(job.error).value_or(ErrorCode::Internal), job.error_detail);
  if (!is_terminal(job.state)) throw Error(ErrorCode::Internal, "timed out waiting for job " + id + " still " + std::string(to_string(job.state)));
  return svc.job_result(id);
}

Json objective_ref(const std::optional<int>& index, const std::string& inline_file) {
  if (!inline_file.empty()) return read_json(inline_file);
  if (index) return *index;
  return Json();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Just-in-time objective steering engine"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--data-dir", g.data_dir, "Data directory (JITSTEER_DATA_DIR)");
  app.add_option("--providers", g.providers, "Provider config JSON (JITSTEER_PROVIDER_CONFIG)");
  app.add_option("--timeout", g.timeout_s, "Seconds to wait for a job")->capture_default_str();
  app.add_flag("--compact", g.compact, "Single-line JSON output");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // snapshot create | get
  auto* snap = app.add_subcommand("snapshot", "Create or read context snapshots");
  snap->require_subcommand(1);
  auto* snap_create = snap->add_subcommand("create", "Ingest a context snapshot");
  std::string text_file, text, image, source_hint, session;
  std::vector<std::string> attachments;
  snap_create->add_option("--text-file", text_file, "Text to ingest")->check(CLI::ExistingFile);
  snap_create->add_option("--text", text, "Inline text to ingest");
  snap_create->add_option("--image", image, "Screenshot")->check(CLI::ExistingFile);
  snap_create->add_option("--attach", attachments, "Attachment (repeatable)")->check(CLI::ExistingFile);
  snap_create->add_option("--source-hint", source_hint, "Where the context came from");
  snap_create->add_option("--session", session, "Existing session id");
  auto* snap_get = snap->add_subcommand("get", "Show a snapshot");
  std::string snapshot_id;
  snap_get->add_option("id", snapshot_id)->required();

  // induce
  auto* induce = app.add_subcommand("induce", "Induce an objective set for a snapshot");
  int limit = 3;
  std::string meta_file;
  induce->add_option("--snapshot", snapshot_id)->required();
  induce->add_option("--limit", limit)->capture_default_str();
  induce->add_option("--meta", meta_file, "Meta instructions appended to the prompt")->check(CLI::ExistingFile);
  induce->add_option("--session", session);

  // experts run
  auto* experts = app.add_subcommand("experts", "Expertise pipeline");
  experts->require_subcommand(1);
  auto* experts_run = experts->add_subcommand("run", "Propose, enrich, select and run experts");
  std::optional<int> objective_index;
  std::string objective_file, set_id, format = "auto", input_file, highlight_file;
  int keep = 3;
  experts_run->add_option("--snapshot", snapshot_id)->required();
  experts_run->add_option("--objective", objective_index, "Objective index in the set");
  experts_run->add_option("--objective-file", objective_file, "Inline objective JSON instead of an index")
      ->check(CLI::ExistingFile);
  experts_run->add_option("--set", set_id, "Objective set (latest when omitted)");
  experts_run->add_option("--session", session);
  experts_run->add_option("--format", format, "auto|feedback|brainstorm|line-editor")->capture_default_str();
  experts_run->add_option("--limit", limit, "Experts proposed")->capture_default_str();
  experts_run->add_option("--keep", keep, "Experts kept")->capture_default_str();
  experts_run->add_option("--input-file", input_file, "User input (defaults to the context)")->check(CLI::ExistingFile);
  experts_run->add_option("--highlight-file", highlight_file, "Line Editor target")->check(CLI::ExistingFile);

  // tools run
  auto* tools = app.add_subcommand("tools", "Tool pipeline");
  tools->require_subcommand(1);
  auto* tools_run = tools->add_subcommand("run", "Propose, select, synthesize and critique a tool");
  bool with_experts = false;
  int rounds = 1;
  std::string out_dir;
  tools_run->add_option("--snapshot", snapshot_id)->required();
  tools_run->add_option("--objective", objective_index);
  tools_run->add_option("--objective-file", objective_file)->check(CLI::ExistingFile);
  tools_run->add_option("--set", set_id);
  tools_run->add_option("--session", session);
  tools_run->add_option("--limit", limit, "Designs proposed")->capture_default_str();
  tools_run->add_flag("--with-experts", with_experts, "Bind experts into the tool");
  tools_run->add_option("--rounds", rounds, "Critique rounds")->capture_default_str();
  tools_run->add_option("--out", out_dir, "Output directory")->required();

  // bon run
  auto* bon = app.add_subcommand("bon", "Best-of-N generation");
  bon->require_subcommand(1);
  auto* bon_run = bon->add_subcommand("run", "Generate n steered candidates and keep the best");
  int n = 1;
  std::string template_name = "feedback";
  bon_run->add_option("--snapshot", snapshot_id)->required();
  bon_run->add_option("--objective", objective_index);
  bon_run->add_option("--objective-file", objective_file)->check(CLI::ExistingFile);
  bon_run->add_option("--set", set_id);
  bon_run->add_option("--session", session);
  bon_run->add_option("--n", n)->capture_default_str();
  bon_run->add_option("--template", template_name, "feedback|expertise|tools")->capture_default_str();

  // jobs start | get
  auto* jobs = app.add_subcommand("jobs", "Start or inspect jobs");
  jobs->require_subcommand(1);
  auto* jobs_start = jobs->add_subcommand("start", "Run a job of any kind; prints its id, then the finished job");
  std::string kind, config_json = "{}";
  jobs_start->add_option("--kind", kind, "induce|experts|tools|best_of_n")->required();
  jobs_start->add_option("--snapshot", snapshot_id)->required();
  jobs_start->add_option("--objective", objective_index);
  jobs_start->add_option("--objective-file", objective_file)->check(CLI::ExistingFile);
  jobs_start->add_option("--set", set_id);
  jobs_start->add_option("--session", session);
  jobs_start->add_option("--config", config_json, "Job config JSON");
  auto* jobs_get = jobs->add_subcommand("get", "Show a job");
  std::string job_id;
  jobs_get->add_option("id", job_id)->required();

  // objectives list | edit
  auto* objectives = app.add_subcommand("objectives", "List or edit a session's objectives");
  objectives->require_subcommand(1);
  auto* obj_list = objectives->add_subcommand("list", "List objective sets with edits applied");
  obj_list->add_option("--session", session)->required();
  auto* obj_edit = objectives->add_subcommand("edit", "Override one objective");
  int edit_index = 0;
  std::optional<std::string> edit_name, edit_description;
  std::optional<int> edit_weight;
  obj_edit->add_option("--session", session)->required();
  obj_edit->add_option("--set", set_id);
  obj_edit->add_option("--index", edit_index)->required();
  obj_edit->add_option("--name", edit_name);
  obj_edit->add_option("--description", edit_description);
  obj_edit->add_option("--weight", edit_weight);

  // helper
  auto* helper = app.add_subcommand("helper", "Call a generated tool's helper");
  std::string helper_name, args_json = "[]";
  helper->add_option("--run", job_id, "Finished tools job")->required();
  helper->add_option("--name", helper_name)->required();
  helper->add_option("--args", args_json, "JSON array")->capture_default_str();

  // eval compare | bon
  auto* eval = app.add_subcommand("eval", "Replay a corpus and judge outputs");
  eval->require_subcommand(1);
  EvalConfig ec;
  std::string corpus, report;
  auto add_eval_opts = [&](CLI::App* sub) {
    sub->add_option("--corpus", corpus)->required()->check(CLI::ExistingDirectory);
    sub->add_option("--report", report)->required();
    sub->add_option("--template", ec.template_name, "feedback|expertise|tools")->capture_default_str();
    sub->add_option("--seed", ec.seed)->capture_default_str();
    sub->add_option("--workers", ec.workers)->capture_default_str();
  };
  auto* eval_compare = eval->add_subcommand("compare", "JIT vs. baseline win rate");
  add_eval_opts(eval_compare);
  auto* eval_bon = eval->add_subcommand("bon", "Best-of-N curve on a shared pool");
  add_eval_opts(eval_bon);
  eval_bon->add_option("--n", ec.n_values, "n values")->delimiter(',')->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string bind = env_or("JITSTEER_BIND", "127.0.0.1:8080");
  std::size_t workers = 4;
  serve->add_option("--bind", bind, "host:port (JITSTEER_BIND)")->capture_default_str();
  serve->add_option("--workers", workers, "Concurrent jobs")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  // stdout carries JSON output; logs go to stderr.
  spdlog::set_default_logger(spdlog::stderr_color_mt("jitsteer"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");

  try {
    if (eval->parsed()) {
      auto gateway = make_gateway(g);
      RunContext ctx;
      ctx.gateway = gateway.get();
      ctx.job_id = "eval";
      const auto items = load_corpus(corpus);
      const Json doc = eval_compare->parsed() ? evaluate_compare(ctx, items, ec) : evaluate_bon(ctx, items, ec);
      write_report(report, doc);
      for (const auto& w : ctx.warnings->items()) spdlog::warn("{}", w);
      print(doc.at("summary"), g);
      return 0;
    }

    Service svc(g.data_dir, make_gateway(g), serve->parsed() ? workers : 2);
    for (const auto& p : svc.load_problems()) spdlog::warn("reload: {}", p);

    if (serve->parsed()) {
      const auto [host, port] = parse_bind_address(bind);
      HttpApi api(svc);
      const int bound = api.bind(host, port);
      spdlog::info("listening on {}:{} (data {})", host, bound, g.data_dir);
      static HttpApi* running = &api;
      std::signal(SIGINT, [](int) { running->stop(); });
      std::signal(SIGTERM, [](int) { running->stop(); });
      api.listen();
      return 0;
    }

    if (snap_create->parsed()) {
      IngestInput in;
      if (!text_file.empty()) in.text = read_file(text_file);
      if (!text.empty()) in.text = in.text ? *in.text + "\n\n" + text : text;
      if (!image.empty()) in.image = ImagePart{media_type_for_path(image), read_file(image)};
      for (const auto& a : attachments) {
        in.attachments.push_back({fs::path(a).filename().string(), media_type_for_path(a), read_file(a)});
      }
      if (!source_hint.empty()) in.source_hint = source_hint;
      const auto created = svc.create_snapshot(std::move(in), session.empty() ? std::nullopt : std::optional(session));
      print({{"id", created.snapshot.id},
             {"session", created.session_id},
             {"truncated", created.snapshot.truncated},
             {"captured_at", created.snapshot.captured_at}},
            g);
    } else if (snap_get->parsed()) {
      print(snapshot_summary(svc.get_snapshot(snapshot_id)), g);
    } else if (jobs_get->parsed()) {
      const auto job = svc.get_job(job_id);
      Json j = job;
      if (job.state == JobState::Done) j["result"] = svc.job_result(job_id);
      print(j, g);
    } else if (obj_list->parsed()) {
      print(svc.list_objectives(session), g);
    } else if (obj_edit->parsed()) {
      ObjectiveEdit e;
      if (!set_id.empty()) e.set_id = set_id;
      e.index = edit_index;
      e.name = edit_name;
      e.description = edit_description;
      e.weight = edit_weight;
      print(svc.edit_objective(session, e), g);
    } else if (helper->parsed()) {
      print({{"result", svc.invoke_helper(job_id, helper_name, Json::parse(args_json))}}, g);
    } else {
      JobRequest req;
      req.snapshot_id = snapshot_id;
      if (!session.empty()) req.session_id = session;
      if (!set_id.empty()) req.set_id = set_id;
      req.objective = objective_ref(objective_index, objective_file);
      if (induce->parsed()) {
        req.kind = JobKind::Induce;
        req.config = {{"limit", limit}};
        if (!meta_file.empty()) req.config["meta"] = read_file(meta_file);
        print(run_job(svc, req, g), g);
      } else if (experts_run->parsed()) {
        req.kind = JobKind::Experts;
        req.config = {{"format", format}, {"limit", limit}, {"keep", keep}};
        if (!input_file.empty()) req.config["user_input"] = read_file(input_file);
        if (!highlight_file.empty()) req.config["highlight"] = read_file(highlight_file);
        print(run_job(svc, req, g), g);
      } else if (tools_run->parsed()) {
        req.kind = JobKind::Tools;
        req.config = {{"limit", limit}, {"with_experts", with_experts}, {"rounds", rounds}};
        std::string id;
        const Json result = run_job(svc, req, g, &id);
        fs::create_directories(out_dir);
        for (const char* f : {"design.json", "candidates.json", "tool.html", "critique_history.json", "tool.json"}) {
          fs::copy_file(svc.data_dir() / "runs" / id / f, fs::path(out_dir) / f, fs::copy_options::overwrite_existing);
        }
        print({{"job", id}, {"out", out_dir}, {"selected", result.at("selected")}}, g);
      } else if (bon_run->parsed()) {
        req.kind = JobKind::BestOfN;
        req.config = {{"n", n}, {"template", template_name}};
        print(run_job(svc, req, g), g);
      } else if (jobs_start->parsed()) {
        req.kind = parse_job_kind(kind);
        req.config = Json::parse(config_json);
        // Jobs live in this process, so the command waits for the worker.
        const auto id = svc.start_job(req);
        std::cout << Json{{"id", id}, {"session", svc.get_job(id).session_id}}.dump() << std::endl;
        const auto job = svc.wait_job(id, std::chrono::seconds(g.timeout_s));
        Json j = job;
        if (job.state == JobState::Done) j["result"] = svc.job_result(id);
        print(j, g);
        if (job.state == JobState::Failed) return 1;
      }
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << Json{{"error", to_string(e.code())}, {"detail", e.detail()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", "Internal"}, {"detail", e.what()}}.dump() << "\n";
    return 1;
  }
}
