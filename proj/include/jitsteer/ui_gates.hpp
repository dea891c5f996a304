#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

/// Static checks on generated single-file tools. Nothing here executes the
/// code; each check returns human-readable findings, empty when it passes.
namespace jitsteer::ui {

/// Functions generated code may call on the host.
inline const std::set<std::string, std::less<>> kHelperNames = {"getExperts", "promptExpert", "promptEntity",
                                                                 "promptGeneral"};

/// Tool code from a model reply: the longest fenced block if any, otherwise
/// the trimmed reply.
std::string extract_code(std::string_view reply);

/// Bodies of inline <script> elements plus on* handler attribute values.
std::string script_text(std::string_view html);

/// The script with comments and string literal contents blanked out.
/// Template-literal substitutions (${...}) are kept.
std::string strip_js_literals(std::string_view js);

/// Every non-void element closed in order. Comments, doctype and the contents
/// of script/style are skipped.
std::vector<std::string> check_tag_balance(std::string_view html);

/// Calls that are neither locally defined, JS builtins, nor helpers, and any
/// museService member outside the helper set.
std::vector<std::string> check_helper_closure(std::string_view html);

/// Direct network access: fetch, XMLHttpRequest, WebSocket, EventSource,
/// sendBeacon, external src/href/url(), and imports other than the helper
/// module.
std::vector<std::string> check_network_ban(std::string_view html);

/// All three gates, plus a non-empty check.
std::vector<std::string> run_static_gates(std::string_view html);

/// "id:<value>" and "class:<value>" for every id and class token in markup.
std::set<std::string> id_class_tokens(std::string_view html);

/// Call sites per helper name, counting both museService.x( and bare x(.
std::map<std::string, int> helper_call_counts(std::string_view html);

/// Refinement may only add: every id/class token survives, and no helper
/// loses call sites.
std::vector<std::string> check_preservation(std::string_view before, std::string_view after);

}  // namespace jitsteer::ui
