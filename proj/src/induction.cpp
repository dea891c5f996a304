#include "jitsteer/induction.hpp"

#include <cmath>

#include "jitsteer/fs_util.hpp"
#include "jitsteer/hash.hpp"
#include "jitsteer/prompts.hpp"

namespace jitsteer {

namespace {

std::string trimmed(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void check_config(const InductionConfig& config) {
  if (config.limit < 1 || config.limit > 10) {
    throw Error(ErrorCode::InvalidArgument, "induction limit must be within 1-10");
  }
}

}  // namespace

Schema induction_schema() {
  return Schema::object({
      {"reasoning", Schema::any("step-by-step reasoning for each step of the framework"), true},
      {"goals",
       Schema::array(Schema::object({
                         {"name", Schema::string("brief name of the goal"), true},
                         {"description", Schema::string("1-2 sentence description of the goal"), true},
                         {"weight", Schema::number("estimated importance to the user, integer 1-10"), true},
                     }),
                     "the finalized goals"),
       true},
  });
}

PromptParts induction_prompt(const ContextSnapshot& snapshot, const InductionConfig& config) {
  check_config(config);
  auto parts = render_parts(prompts::objective_induction(),
                            {{"limit", std::to_string(config.limit)}, {"json_schema", induction_schema().to_json_schema().dump(2)}},
                            {{"context", render_context_block(snapshot)}});
  if (config.meta_instructions && !config.meta_instructions->empty()) {
    append_text(parts, "\n\n" + *config.meta_instructions);
  }
  return parts;
}

ObjectiveSet objective_set_from_reply(const Json& reply, const InductionConfig& config, std::string snapshot_id) {
  ObjectiveSet set;
  set.source_snapshot = std::move(snapshot_id);
  const Json& reasoning = reply.at("reasoning");
  set.reasoning = reasoning.is_string() ? reasoning.get<std::string>() : reasoning.dump(2);

  const Json& goals = reply.at("goals");
  if (goals.empty()) throw Error(ErrorCode::ObjectiveValidationFailure, "reply contains no goals");
  for (std::size_t i = 0; i < goals.size(); ++i) {
    const Json& g = goals[i];
    const double w = g.at("weight").get<double>();
    if (!std::isfinite(w) || std::floor(w) != w) {
      throw Error(ErrorCode::ObjectiveValidationFailure, "goal " + std::to_string(i) + ": weight is not an integer");
    }
    if (w < kMinWeight || w > kMaxWeight) {
      throw Error(ErrorCode::ObjectiveValidationFailure,
                  "goal " + std::to_string(i) + ": weight " + g.at("weight").dump() + " outside 1-10");
    }
    Objective o{trimmed(g.at("name").get<std::string>()), trimmed(g.at("description").get<std::string>()),
                static_cast<int>(w)};
    if (auto problem = objective_problem(o)) {
      throw Error(ErrorCode::ObjectiveValidationFailure, "goal " + std::to_string(i) + ": " + *problem);
    }
    set.objectives.push_back(std::move(o));
  }
  sort_by_weight(set.objectives);
  if (set.objectives.size() > static_cast<std::size_t>(config.limit)) set.objectives.resize(config.limit);
  return set;
}

ObjectiveSet induce(const RunContext& ctx, const ContextSnapshot& snapshot, const InductionConfig& config) {
  CompletionRequest req;
  req.role = ProviderRole::Inducer;
  req.parts = induction_prompt(snapshot, config);
  req.mode = ResponseMode::Structured;
  req.structure = induction_schema();
  req.validation_failure = ErrorCode::ObjectiveValidationFailure;
  req.max_validation_retries = 1;
  req.validator = [&](const CompletionResult& r) -> std::optional<std::string> {
    try {
      objective_set_from_reply(*r.parsed, config, snapshot.id);
    } catch (const Error& e) {
      return e.detail();
    }
    return std::nullopt;
  };
  const auto result = ctx.complete(std::move(req));
  auto set = objective_set_from_reply(*result.parsed, config, snapshot.id);
  if (result.parsed->at("goals").size() > static_cast<std::size_t>(config.limit)) {
    ctx.warn("model returned " + std::to_string(result.parsed->at("goals").size()) + " goals for limit " +
             std::to_string(config.limit) + "; kept the highest-weighted");
  }
  set.set_id = "set-" + sha256_hex(snapshot.id + "\n" + result.raw_text).substr(0, 16);
  return set;
}

Objective top_objective(const ObjectiveSet& set) {
  if (set.objectives.empty()) throw Error(ErrorCode::EmptySet, "objective set is empty");
  return set.objectives.front();
}

void save_objective_set(const SnapshotStore& store, const ObjectiveSet& set) {
  write_json_atomic(store.dir(set.source_snapshot) / "objectives.json", Json(set));
}

ObjectiveSet load_objective_set(const SnapshotStore& store, std::string_view snapshot_id) {
  const auto path = store.dir(snapshot_id) / "objectives.json";
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::NotFound, "snapshot '" + std::string(snapshot_id) + "' has no induced objectives");
  }
  return read_json(path).get<ObjectiveSet>();
}

ObjectiveSet InductionCoalescer::induce(const RunContext& ctx, const ContextSnapshot& snapshot,
                                        const InductionConfig& config) {
  const std::string key = snapshot.id + "|" + std::to_string(config.limit) + "|" +
                          sha256_hex(config.meta_instructions.value_or(""));
  std::promise<ObjectiveSet> promise;
  std::shared_future<ObjectiveSet> future;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      in_flight_.emplace(key, future);
      owner = true;
    }
  }
  if (!owner) return future.get();
  try {
    promise.set_value(jitsteer::induce(ctx, snapshot, config));
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lock(mu_);
    in_flight_.erase(key);
  }
  return future.get();
}

}  // namespace jitsteer
