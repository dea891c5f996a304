#include "jitsteer/ui_gates.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "jitsteer/structure.hpp"

namespace jitsteer::ui {

namespace {

struct Tag {
  std::string name;
  bool closing = false;
  bool self_closing = false;
  bool raw_unclosed = false;  // <script>/<style> without an end tag
  std::vector<std::pair<std::string, std::string>> attrs;
};

struct Markup {
  std::vector<Tag> tags;
  std::vector<std::string> scripts;
  std::vector<std::string> styles;
};

const std::set<std::string, std::less<>> kVoidElements = {"area", "base", "br",    "col",   "embed",  "hr",   "img",
                                                           "input", "link", "meta", "param", "source", "track", "wbr"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == ':' || c == '_' || c == '.';
}

std::size_t find_ci(std::string_view hay, std::string_view needle, std::size_t from) {
  const std::string h = lower(hay), n = lower(needle);
  return h.find(n, from);
}

Markup scan_markup(std::string_view html) {
  Markup m;
  std::size_t i = 0;
  const std::size_t n = html.size();
  while (i < n) {
    if (html[i] != '<') {
      ++i;
      continue;
    }
    if (html.substr(i, 4) == "<!--") {
      const auto end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? n : end + 3;
      continue;
    }
    if (i + 1 < n && (html[i + 1] == '!' || html[i + 1] == '?')) {
      const auto end = html.find('>', i);
      i = end == std::string_view::npos ? n : end + 1;
      continue;
    }
    const bool closing = i + 1 < n && html[i + 1] == '/';
    std::size_t p = i + (closing ? 2 : 1);
    if (p >= n || !std::isalpha(static_cast<unsigned char>(html[p]))) {
      ++i;  // a bare '<' in text
      continue;
    }
    Tag tag;
    tag.closing = closing;
    const std::size_t name_start = p;
    while (p < n && is_name_char(html[p])) ++p;
    tag.name = lower(html.substr(name_start, p - name_start));

    // Attributes.
    while (p < n) {
      while (p < n && std::isspace(static_cast<unsigned char>(html[p]))) ++p;
      if (p >= n) break;
      if (html[p] == '>') {
        ++p;
        break;
      }
      if (html[p] == '/' && p + 1 < n && html[p + 1] == '>') {
        tag.self_closing = true;
        p += 2;
        break;
      }
      const std::size_t an = p;
      while (p < n && !std::isspace(static_cast<unsigned char>(html[p])) && html[p] != '=' && html[p] != '>' &&
             !(html[p] == '/' && p + 1 < n && html[p + 1] == '>')) {
        if (html[p] == '{') {  // attribute shorthand such as {value}
          int depth = 0;
          for (; p < n; ++p) {
            if (html[p] == '{') ++depth;
            if (html[p] == '}' && --depth == 0) break;
          }
        }
        if (p < n) ++p;
      }
      std::string name = lower(html.substr(an, p - an));
      std::string value;
      while (p < n && std::isspace(static_cast<unsigned char>(html[p]))) ++p;
      if (p < n && html[p] == '=') {
        ++p;
        while (p < n && std::isspace(static_cast<unsigned char>(html[p]))) ++p;
        if (p < n && (html[p] == '"' || html[p] == '\'')) {
          const char q = html[p];
          const auto end = html.find(q, p + 1);
          const auto stop = end == std::string_view::npos ? n : end;
          value = std::string(html.substr(p + 1, stop - p - 1));
          p = stop == n ? n : stop + 1;
        } else if (p < n && html[p] == '{') {
          const std::size_t vs = p;
          int depth = 0;
          for (; p < n; ++p) {
            if (html[p] == '{') ++depth;
            if (html[p] == '}' && --depth == 0) {
              ++p;
              break;
            }
          }
          value = std::string(html.substr(vs, p - vs));
        } else {
          const std::size_t vs = p;
          while (p < n && !std::isspace(static_cast<unsigned char>(html[p])) && html[p] != '>') ++p;
          value = std::string(html.substr(vs, p - vs));
        }
      }
      if (!name.empty()) tag.attrs.emplace_back(std::move(name), std::move(value));
    }
    i = p;

    if (!tag.closing && !tag.self_closing && (tag.name == "script" || tag.name == "style")) {
      const auto end = find_ci(html, "</" + tag.name, i);
      if (end == std::string::npos) {
        tag.raw_unclosed = true;
        (tag.name == "script" ? m.scripts : m.styles).emplace_back(html.substr(i));
        i = n;
      } else {
        (tag.name == "script" ? m.scripts : m.styles).emplace_back(html.substr(i, end - i));
        const auto gt = html.find('>', end);
        i = gt == std::string_view::npos ? n : gt + 1;
      }
      m.tags.push_back(std::move(tag));
      continue;
    }
    m.tags.push_back(std::move(tag));
  }
  return m;
}

const std::set<std::string, std::less<>> kKeywords = {
    "if",     "for",    "while", "switch", "catch", "return", "typeof", "function", "await",       "async",
    "yield",  "do",     "else",  "in",     "of",    "new",    "delete", "void",     "with",        "super",
    "import", "this",   "constructor", "case", "throw", "instanceof", "export", "default", "try", "finally"};

const std::set<std::string, std::less<>> kBuiltins = {
    "parseInt", "parseFloat", "isNaN", "isFinite", "setTimeout", "clearTimeout", "setInterval", "clearInterval",
    "requestAnimationFrame", "cancelAnimationFrame", "queueMicrotask", "structuredClone", "alert", "confirm", "prompt",
    "String", "Number", "Boolean", "Array", "Object", "Date", "Symbol", "BigInt", "Promise", "Error", "TypeError",
    "RangeError", "Map", "Set", "WeakMap", "WeakSet", "RegExp", "Intl", "encodeURIComponent", "decodeURIComponent",
    "encodeURI", "decodeURI", "escape", "unescape", "atob", "btoa", "CustomEvent", "Event", "DOMParser", "FormData",
    "Blob", "File", "FileReader", "URL", "URLSearchParams", "Image", "Option", "TextEncoder", "TextDecoder",
    "MutationObserver", "ResizeObserver", "IntersectionObserver", "AbortController", "getComputedStyle", "matchMedia",
    "Uint8Array", "Float32Array", "Int32Array", "ArrayBuffer", "Function", "require"};

// Reported by the network gate instead.
const std::set<std::string, std::less<>> kNetworkApis = {"fetch", "XMLHttpRequest", "WebSocket", "EventSource",
                                                          "importScripts"};

const std::regex& ident_re() {
  static const std::regex re(R"([A-Za-z_$][\w$]*)");
  return re;
}

void collect_identifiers(const std::string& text, std::set<std::string, std::less<>>& out) {
  for (std::sregex_iterator it(text.begin(), text.end(), ident_re()), end; it != end; ++it) out.insert(it->str());
}

std::set<std::string, std::less<>> defined_names(const std::string& js) {
  std::set<std::string, std::less<>> names;
  static const std::regex decl(R"(\b(?:function\s*\*?|const|let|var|class)\s+([A-Za-z_$][\w$]*))");
  static const std::regex destructure(R"(\b(?:const|let|var|import)\s*\{([^}]*)\})");
  static const std::regex default_import(R"(\bimport\s+([A-Za-z_$][\w$]*))");
  static const std::regex method(
      R"((?:^|[;{},\n])\s*(?:static\s+)?(?:async\s+)?(?:get\s+|set\s+)?\*?\s*([A-Za-z_$][\w$]*)\s*\([^()]*\)\s*\{)");
  static const std::regex fn_params(R"(\bfunction\s*\*?\s*[\w$]*\s*\(([^)]*)\))");
  static const std::regex arrow_params(R"(\(([^()]*)\)\s*=>)");
  static const std::regex arrow_single(R"(([A-Za-z_$][\w$]*)\s*=>)");
  static const std::regex catch_param(R"(\bcatch\s*\(\s*([A-Za-z_$][\w$]*))");

  for (const std::regex* re : {&decl, &default_import, &method, &arrow_single, &catch_param}) {
    for (std::sregex_iterator it(js.begin(), js.end(), *re), end; it != end; ++it) names.insert((*it)[1].str());
  }
  for (const std::regex* re : {&destructure, &fn_params, &arrow_params}) {
    for (std::sregex_iterator it(js.begin(), js.end(), *re), end; it != end; ++it) {
      collect_identifiers((*it)[1].str(), names);
    }
  }
  return names;
}

bool external_url(std::string_view value) {
  const auto v = lower(value);
  const auto b = v.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return false;
  const std::string_view s = std::string_view(v).substr(b);
  return s.starts_with("http:") || s.starts_with("https:") || s.starts_with("//") || s.starts_with("ws:") ||
         s.starts_with("wss:") || s.starts_with("ftp:");
}

}  // namespace

std::string extract_code(std::string_view reply) {
  std::string_view best;
  for (auto block : fenced_blocks(reply)) {
    if (block.size() > best.size()) best = block;
  }
  std::string_view text = best.empty() ? reply : best;
  const auto b = text.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(b, e - b + 1));
}

std::string script_text(std::string_view html) {
  const auto m = scan_markup(html);
  std::string out;
  for (const auto& s : m.scripts) out += s + "\n;\n";
  for (const auto& tag : m.tags) {
    for (const auto& [name, value] : tag.attrs) {
      if (name.size() > 2 && name.starts_with("on") && name.find(':') == std::string::npos) out += value + "\n;\n";
    }
  }
  return out;
}

std::string strip_js_literals(std::string_view js) {
  struct Frame {
    bool tmpl;
    int depth;
  };
  std::string out(js);
  std::vector<Frame> stack{{false, 0}};
  auto blank = [&](std::size_t k) {
    if (out[k] != '\n') out[k] = ' ';
  };
  const std::size_t n = js.size();
  std::size_t i = 0;
  while (i < n) {
    Frame& top = stack.back();
    const char c = js[i];
    if (top.tmpl) {
      if (c == '\\' && i + 1 < n) {
        blank(i);
        blank(i + 1);
        i += 2;
      } else if (c == '`') {
        stack.pop_back();
        ++i;
      } else if (c == '$' && i + 1 < n && js[i + 1] == '{') {
        stack.push_back({false, 0});
        i += 2;
      } else {
        blank(i);
        ++i;
      }
      continue;
    }
    if (c == '/' && i + 1 < n && js[i + 1] == '/') {
      while (i < n && js[i] != '\n') blank(i++);
    } else if (c == '/' && i + 1 < n && js[i + 1] == '*') {
      const auto end = js.find("*/", i + 2);
      const auto stop = end == std::string_view::npos ? n : end + 2;
      while (i < stop) blank(i++);
    } else if (c == '\'' || c == '"') {
      ++i;
      while (i < n && js[i] != c && js[i] != '\n') {
        if (js[i] == '\\' && i + 1 < n) blank(i++);
        blank(i++);
      }
      if (i < n) ++i;
    } else if (c == '`') {
      stack.push_back({true, 0});
      ++i;
    } else if (c == '{') {
      ++top.depth;
      ++i;
    } else if (c == '}') {
      if (top.depth == 0 && stack.size() > 1) {
        stack.pop_back();  // end of a ${...} substitution
      } else {
        --top.depth;
      }
      ++i;
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<std::string> check_tag_balance(std::string_view html) {
  std::vector<std::string> findings;
  std::vector<std::string> stack;
  for (const auto& tag : scan_markup(html).tags) {
    if (tag.raw_unclosed) {
      findings.push_back("unclosed <" + tag.name + ">");
      continue;
    }
    if (kVoidElements.contains(tag.name)) continue;
    if (!tag.closing) {
      if (!tag.self_closing && tag.name != "script" && tag.name != "style") stack.push_back(tag.name);
      continue;
    }
    if (tag.name == "script" || tag.name == "style") {
      findings.push_back("unexpected </" + tag.name + ">");
      continue;
    }
    const auto it = std::find(stack.rbegin(), stack.rend(), tag.name);
    if (it == stack.rend()) {
      findings.push_back("unexpected </" + tag.name + ">");
      continue;
    }
    while (stack.back() != tag.name) {
      findings.push_back("unclosed <" + stack.back() + "> before </" + tag.name + ">");
      stack.pop_back();
    }
    stack.pop_back();
  }
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) findings.push_back("unclosed <" + *it + ">");
  return findings;
}

std::vector<std::string> check_helper_closure(std::string_view html) {
  const std::string js = strip_js_literals(script_text(html));
  const auto defined = defined_names(js);
  std::set<std::string> findings;

  static const std::regex member(R"(\bmuseService\s*\??\.\s*([A-Za-z_$][\w$]*))");
  for (std::sregex_iterator it(js.begin(), js.end(), member), end; it != end; ++it) {
    const auto name = (*it)[1].str();
    if (!kHelperNames.contains(name)) findings.insert("museService." + name + " is not part of the helper contract");
  }

  static const std::regex call(R"(([A-Za-z_$][\w$]*)\s*\()");
  for (std::sregex_iterator it(js.begin(), js.end(), call), end; it != end; ++it) {
    const auto name = (*it)[1].str();
    std::size_t k = static_cast<std::size_t>(it->position(0));
    while (k > 0 && std::isspace(static_cast<unsigned char>(js[k - 1]))) --k;
    if (k > 0 && (js[k - 1] == '.' || js[k - 1] == '#')) continue;  // member or private call
    if (kKeywords.contains(name) || kBuiltins.contains(name) || kNetworkApis.contains(name)) continue;
    if (kHelperNames.contains(name) || defined.contains(name)) continue;
    findings.insert("call to undeclared function '" + name + "'");
  }
  return {findings.begin(), findings.end()};
}

std::vector<std::string> check_network_ban(std::string_view html) {
  std::vector<std::string> findings;
  const auto m = scan_markup(html);
  std::string raw_js;
  for (const auto& s : m.scripts) raw_js += s + "\n;\n";
  const std::string js = strip_js_literals(script_text(html));

  static const std::vector<std::pair<std::regex, std::string>> apis = {
      {std::regex(R"(\bfetch\s*\()"), "direct fetch()"},
      {std::regex(R"(\bXMLHttpRequest\b)"), "XMLHttpRequest"},
      {std::regex(R"(\bWebSocket\b)"), "WebSocket"},
      {std::regex(R"(\bEventSource\b)"), "EventSource"},
      {std::regex(R"(\bsendBeacon\b)"), "navigator.sendBeacon"},
      {std::regex(R"(\bimportScripts\b)"), "importScripts"},
  };
  for (const auto& [re, label] : apis) {
    if (std::regex_search(js, re)) findings.push_back("network access via " + label);
  }

  static const std::regex static_import(R"(\bimport\s+(?:[^'";]*?\s+from\s+)?['"]([^'"]+)['"])");
  static const std::regex dynamic_import(R"(\bimport\s*\(\s*['"`]([^'"`]+)['"`])");
  for (const std::regex* re : {&static_import, &dynamic_import}) {
    for (std::sregex_iterator it(raw_js.begin(), raw_js.end(), *re), end; it != end; ++it) {
      const auto spec = (*it)[1].str();
      if (spec.find("museService") == std::string::npos) findings.push_back("import of '" + spec + "'");
    }
  }

  for (const auto& tag : m.tags) {
    if (tag.closing) continue;
    for (const auto& [name, value] : tag.attrs) {
      const bool url_attr = name == "src" || name == "srcset" || name == "action" || name == "formaction" ||
                            name == "poster" || name == "data" || (name == "href" && tag.name != "a");
      if (url_attr && external_url(value)) {
        findings.push_back("external " + name + " on <" + tag.name + ">: " + value);
      }
    }
  }

  std::string css;
  for (const auto& s : m.styles) css += s + "\n";
  for (const auto& tag : m.tags) {
    for (const auto& [name, value] : tag.attrs) {
      if (name == "style") css += value + "\n";
    }
  }
  static const std::regex css_url(R"(url\(\s*['"]?\s*((?:https?:)?//[^'")\s]*))", std::regex::icase);
  static const std::regex css_import(R"(@import\b)", std::regex::icase);
  for (std::sregex_iterator it(css.begin(), css.end(), css_url), end; it != end; ++it) {
    findings.push_back("external url() in CSS: " + (*it)[1].str());
  }
  if (std::regex_search(css, css_import)) findings.push_back("CSS @import");
  return findings;
}

std::vector<std::string> run_static_gates(std::string_view html) {
  if (html.find_first_not_of(" \t\r\n") == std::string_view::npos) return {"code is empty"};
  std::vector<std::string> out;
  for (auto&& v : {check_tag_balance(html), check_helper_closure(html), check_network_ban(html)}) {
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

std::set<std::string> id_class_tokens(std::string_view html) {
  std::set<std::string> out;
  for (const auto& tag : scan_markup(html).tags) {
    if (tag.closing) continue;
    for (const auto& [name, value] : tag.attrs) {
      if (name == "id" && !value.empty()) out.insert("id:" + value);
      if (name == "class") {
        std::size_t p = 0;
        while (p < value.size()) {
          const auto b = value.find_first_not_of(" \t\r\n", p);
          if (b == std::string::npos) break;
          const auto e = value.find_first_of(" \t\r\n", b);
          out.insert("class:" + value.substr(b, e == std::string::npos ? std::string::npos : e - b));
          p = e == std::string::npos ? value.size() : e;
        }
      }
    }
  }
  return out;
}

std::map<std::string, int> helper_call_counts(std::string_view html) {
  const std::string js = strip_js_literals(script_text(html));
  std::map<std::string, int> out;
  for (const auto& name : kHelperNames) {
    const std::regex re("(function\\s+)?\\b" + name + "\\s*\\(");
    int count = 0;
    for (std::sregex_iterator it(js.begin(), js.end(), re), end; it != end; ++it) {
      if (!(*it)[1].matched) ++count;
    }
    out[name] = count;
  }
  return out;
}

std::vector<std::string> check_preservation(std::string_view before, std::string_view after) {
  std::vector<std::string> findings;
  const auto kept = id_class_tokens(after);
  for (const auto& token : id_class_tokens(before)) {
    if (!kept.contains(token)) findings.push_back("removed " + token);
  }
  const auto calls_before = helper_call_counts(before);
  const auto calls_after = helper_call_counts(after);
  for (const auto& [name, count] : calls_before) {
    const int now = calls_after.at(name);
    if (now < count) {
      findings.push_back(name + " call sites dropped from " + std::to_string(count) + " to " + std::to_string(now));
    }
  }
  return findings;
}

}  // namespace jitsteer::ui
