#pragma once

#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "jitsteer/context.hpp"
#include "jitsteer/run_context.hpp"

namespace jitsteer {

struct InductionConfig {
  int limit = 3;
  /// Appended verbatim to the induction prompt; steers induction itself.
  std::optional<std::string> meta_instructions;
};

/// Reply shape requested through the prompt's json_schema slot:
/// {reasoning, goals: [{name, description, weight}]}.
Schema induction_schema();

/// The assembled induction prompt for a snapshot.
PromptParts induction_prompt(const ContextSnapshot& snapshot, const InductionConfig& config);

/// Validates a parsed reply against the objective invariants and returns the
/// weight-sorted set (at most `limit` objectives, highest weights kept).
/// Throws Error(ObjectiveValidationFailure).
ObjectiveSet objective_set_from_reply(const Json& reply, const InductionConfig& config, std::string snapshot_id);

/// Runs the induction prompt against the inducer role. A reply that breaks an
/// objective invariant gets one corrective retry before
/// Error(ObjectiveValidationFailure); unparseable replies surface as
/// Error(StructureParseFailure).
ObjectiveSet induce(const RunContext& ctx, const ContextSnapshot& snapshot, const InductionConfig& config = {});

/// Highest-weighted objective (model order on ties). Throws Error(EmptySet).
Objective top_objective(const ObjectiveSet& set);

/// Persists the latest objective set next to its snapshot.
void save_objective_set(const SnapshotStore& store, const ObjectiveSet& set);
ObjectiveSet load_objective_set(const SnapshotStore& store, std::string_view snapshot_id);

/// Collapses concurrent inductions of the same snapshot and configuration
/// into one provider call; late arrivals share the first caller's result.
class InductionCoalescer {
 public:
  ObjectiveSet induce(const RunContext& ctx, const ContextSnapshot& snapshot, const InductionConfig& config = {});

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_future<ObjectiveSet>> in_flight_;
};

}  // namespace jitsteer
