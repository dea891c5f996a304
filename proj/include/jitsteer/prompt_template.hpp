#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "jitsteer/provider.hpp"

namespace jitsteer {

/// Prompt text with `{name}` placeholders. `{{` and `}}` are literal braces,
/// the same escaping the stored prompts use.
struct PromptTemplate {
  std::string id;
  std::string system_text;
  std::string body;
  std::set<std::string> placeholders;

  /// Placeholder that gen_objective fills with the GOALS block. Empty means
  /// the block is prepended to the body instead.
  std::string goals_slot;

  /// True once gen_objective or eval_objective has been applied.
  bool objective_applied = false;

  bool operator==(const PromptTemplate&) const = default;
};

struct TemplateSegment {
  bool placeholder = false;
  std::string text;  // literal text (unescaped) or placeholder name
};

/// Splits a body into literal and placeholder segments. Throws
/// Error(InvalidArgument) on a stray single brace.
std::vector<TemplateSegment> tokenize_template(std::string_view body);

/// Inverse of tokenize_template: literal braces are re-escaped.
std::string join_template(const std::vector<TemplateSegment>& segments);

std::set<std::string> scan_placeholders(std::string_view body);

/// Doubles every brace so the text survives formatting verbatim.
std::string escape_braces(std::string_view text);

/// Builds a template, discovering placeholders. A "goals" or "goals_text"
/// placeholder becomes the goals slot.
PromptTemplate make_template(std::string id, std::string body, std::string system_text = {});

/// Replaces one placeholder with literal text; the placeholder leaves the set.
PromptTemplate fill_placeholder(const PromptTemplate& base, std::string_view name, std::string_view literal);

using TemplateValues = std::map<std::string, std::string, std::less<>>;
using TemplatePartValues = std::map<std::string, PromptParts, std::less<>>;

/// Substitutes every placeholder. Part-valued placeholders (the CONTEXT block)
/// splice their parts in place. Throws Error(MissingPlaceholder).
PromptParts render_parts(const PromptTemplate& t, const TemplateValues& values,
                         const TemplatePartValues& part_values = {});

/// Text-only rendering.
std::string render(const PromptTemplate& t, const TemplateValues& values);

}  // namespace jitsteer
