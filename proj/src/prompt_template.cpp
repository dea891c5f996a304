#include "jitsteer/prompt_template.hpp"

#include <cctype>

namespace jitsteer {

namespace {

bool is_name_char(char c, bool first) {
  const auto u = static_cast<unsigned char>(c);
  if (std::isalpha(u) || c == '_') return true;
  return !first && (std::isdigit(u) || c == '.');
}

}  // namespace

std::vector<TemplateSegment> tokenize_template(std::string_view body) {
  std::vector<TemplateSegment> out;
  std::string literal;
  auto flush = [&] {
    if (!literal.empty()) out.push_back({false, std::move(literal)});
    literal.clear();
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '{') {
      if (i + 1 < body.size() && body[i + 1] == '{') {
        literal.push_back('{');
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      while (j < body.size() && is_name_char(body[j], j == i + 1)) ++j;
      if (j == i + 1 || j >= body.size() || body[j] != '}') {
        throw Error(ErrorCode::InvalidArgument, "stray '{' at offset " + std::to_string(i) + " in template");
      }
      flush();
      out.push_back({true, std::string(body.substr(i + 1, j - i - 1))});
      i = j;
    } else if (c == '}') {
      if (i + 1 < body.size() && body[i + 1] == '}') {
        literal.push_back('}');
        ++i;
        continue;
      }
      throw Error(ErrorCode::InvalidArgument, "stray '}' at offset " + std::to_string(i) + " in template");
    } else {
      literal.push_back(c);
    }
  }
  flush();
  return out;
}

std::string escape_braces(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    out.push_back(c);
    if (c == '{' || c == '}') out.push_back(c);
  }
  return out;
}

std::string join_template(const std::vector<TemplateSegment>& segments) {
  std::string out;
  for (const auto& s : segments) {
    if (s.placeholder) out.append("{").append(s.text).append("}");
    else out.append(escape_braces(s.text));
  }
  return out;
}

std::set<std::string> scan_placeholders(std::string_view body) {
  std::set<std::string> names;
  for (const auto& s : tokenize_template(body)) {
    if (s.placeholder) names.insert(s.text);
  }
  return names;
}

PromptTemplate make_template(std::string id, std::string body, std::string system_text) {
  PromptTemplate t;
  t.id = std::move(id);
  t.system_text = std::move(system_text);
  t.placeholders = scan_placeholders(body);
  t.body = std::move(body);
  if (t.placeholders.contains("goals")) t.goals_slot = "goals";
  else if (t.placeholders.contains("goals_text")) t.goals_slot = "goals_text";
  return t;
}

PromptTemplate fill_placeholder(const PromptTemplate& base, std::string_view name, std::string_view literal) {
  auto segments = tokenize_template(base.body);
  bool found = false;
  for (auto& s : segments) {
    if (s.placeholder && s.text == name) {
      s.placeholder = false;
      s.text = std::string(literal);
      found = true;
    }
  }
  if (!found) {
    throw Error(ErrorCode::MissingPlaceholder,
                "template '" + base.id + "' has no placeholder {" + std::string(name) + "}");
  }
  PromptTemplate out = base;
  out.body = join_template(segments);
  out.placeholders.erase(std::string(name));
  return out;
}

PromptParts render_parts(const PromptTemplate& t, const TemplateValues& values, const TemplatePartValues& part_values) {
  PromptParts parts;
  for (const auto& s : tokenize_template(t.body)) {
    if (!s.placeholder) {
      append_text(parts, s.text);
      continue;
    }
    if (auto it = part_values.find(s.text); it != part_values.end()) {
      for (const auto& p : it->second) {
        if (const auto* text = std::get_if<std::string>(&p)) append_text(parts, *text);
        else parts.push_back(p);
      }
      continue;
    }
    auto it = values.find(s.text);
    if (it == values.end()) {
      throw Error(ErrorCode::MissingPlaceholder, "no value for {" + s.text + "} in template '" + t.id + "'");
    }
    append_text(parts, it->second);
  }
  return parts;
}

std::string render(const PromptTemplate& t, const TemplateValues& values) {
  return assemble_prompt({}, render_parts(t, values));
}

}  // namespace jitsteer
