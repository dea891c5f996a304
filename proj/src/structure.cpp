#include "jitsteer/structure.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "jitsteer/error.hpp"

namespace jitsteer {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view type_name(Schema::Type t) {
  switch (t) {
    case Schema::Type::Any: return "any";
    case Schema::Type::Object: return "object";
    case Schema::Type::Array: return "array";
    case Schema::Type::String: return "string";
    case Schema::Type::Number: return "number";
    case Schema::Type::Integer: return "integer";
    case Schema::Type::Boolean: return "boolean";
  }
  return "any";
}

bool is_integral(const Json& v) {
  if (v.is_number_integer()) return true;
  if (!v.is_number_float()) return false;
  const double d = v.get<double>();
  return std::isfinite(d) && std::floor(d) == d;
}

bool kind_matches(const Json& v, Schema::Type t) {
  switch (t) {
    case Schema::Type::Any: return true;
    case Schema::Type::Object: return v.is_object();
    case Schema::Type::Array: return v.is_array();
    case Schema::Type::String: return v.is_string();
    case Schema::Type::Number: return v.is_number();
    case Schema::Type::Integer: return is_integral(v);
    case Schema::Type::Boolean: return v.is_boolean();
  }
  return false;
}

void validate_into(const Json& v, const Schema& s, const std::string& path, std::vector<std::string>& out) {
  const std::string where = path.empty() ? "<root>" : path;
  if (!kind_matches(v, s.type)) {
    out.push_back("expected " + std::string(type_name(s.type)) + " at " + where);
    return;
  }
  if (s.type == Schema::Type::Object) {
    for (const auto& p : s.properties) {
      const std::string child = path.empty() ? p.name : path + "." + p.name;
      auto it = v.find(p.name);
      if (it == v.end() || it->is_null()) {
        if (p.required) out.push_back("missing field " + child);
        continue;
      }
      validate_into(*it, p.schema, child, out);
    }
    if (!s.additional_properties) {
      for (auto it = v.begin(); it != v.end(); ++it) {
        bool known = false;
        for (const auto& p : s.properties) known = known || p.name == it.key();
        if (!known) out.push_back("unexpected field " + (path.empty() ? it.key() : path + "." + it.key()));
      }
    }
  } else if (s.type == Schema::Type::Array && s.items) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      validate_into(v[i], *s.items, path + "[" + std::to_string(i) + "]", out);
    }
  }
}

std::optional<Json> try_parse(std::string_view text) {
  Json v = Json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
  if (v.is_discarded()) return std::nullopt;
  return v;
}

// Balanced top-level objects/arrays, skipping brackets inside string literals.
std::vector<std::string_view> balanced_spans(std::string_view text) {
  std::vector<std::string_view> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '{' && text[i] != '[') {
      ++i;
      continue;
    }
    std::string stack;
    bool in_string = false;
    bool escaped = false;
    std::size_t end = std::string_view::npos;
    for (std::size_t j = i; j < text.size(); ++j) {
      const char c = text[j];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{' || c == '[') {
        stack.push_back(c == '{' ? '}' : ']');
      } else if (c == '}' || c == ']') {
        if (stack.empty() || stack.back() != c) break;
        stack.pop_back();
        if (stack.empty()) {
          end = j;
          break;
        }
      }
    }
    if (end == std::string_view::npos) {
      ++i;
      continue;
    }
    const auto span = text.substr(i, end - i + 1);
    if (try_parse(span)) {
      spans.push_back(span);
      i = end + 1;
    } else {
      ++i;
    }
  }
  return spans;
}

}  // namespace

Schema Schema::any(std::string description) { return Schema{Type::Any, {}, nullptr, true, std::move(description)}; }
Schema Schema::string(std::string description) { return Schema{Type::String, {}, nullptr, true, std::move(description)}; }
Schema Schema::number(std::string description) { return Schema{Type::Number, {}, nullptr, true, std::move(description)}; }
Schema Schema::integer(std::string description) { return Schema{Type::Integer, {}, nullptr, true, std::move(description)}; }
Schema Schema::boolean(std::string description) { return Schema{Type::Boolean, {}, nullptr, true, std::move(description)}; }

Schema Schema::object(std::vector<Property> properties, bool additional_properties) {
  Schema s;
  s.type = Type::Object;
  s.properties = std::move(properties);
  s.additional_properties = additional_properties;
  return s;
}

Schema Schema::array(Schema items, std::string description) {
  Schema s;
  s.type = Type::Array;
  s.items = std::make_shared<const Schema>(std::move(items));
  s.description = std::move(description);
  return s;
}

Json Schema::to_json_schema() const {
  Json out = Json::object();
  if (type != Type::Any) out["type"] = std::string(type_name(type));
  if (!description.empty()) out["description"] = description;
  if (type == Type::Object) {
    Json props = Json::object();
    Json required = Json::array();
    for (const auto& p : properties) {
      props[p.name] = p.schema.to_json_schema();
      if (p.required) required.push_back(p.name);
    }
    out["properties"] = std::move(props);
    out["required"] = std::move(required);
    if (!additional_properties) out["additionalProperties"] = false;
  } else if (type == Type::Array && items) {
    out["items"] = items->to_json_schema();
  }
  return out;
}

std::vector<std::string> validate(const Json& value, const Schema& schema) {
  std::vector<std::string> problems;
  validate_into(value, schema, "", problems);
  return problems;
}

std::vector<std::string_view> fenced_blocks(std::string_view text) {
  std::vector<std::string_view> blocks;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("```", pos);
    if (open == std::string_view::npos) break;
    // Skip the info string ("json", "html", ...) up to the end of the line.
    auto body = text.find('\n', open + 3);
    if (body == std::string_view::npos) break;
    ++body;
    const auto close = text.find("```", body);
    if (close == std::string_view::npos) break;
    blocks.push_back(text.substr(body, close - body));
    pos = close + 3;
  }
  return blocks;
}

std::optional<double> first_float(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool starts_digit = std::isdigit(static_cast<unsigned char>(c)) ||
                              (c == '.' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])));
    if (!starts_digit) continue;
    std::size_t begin = i;
    if (begin > 0 && (text[begin - 1] == '-' || text[begin - 1] == '+')) --begin;
    double value = 0;
    const char* first = text.data() + begin;
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
    if (ec == std::errc()) return value;
  }
  return std::nullopt;
}

Json extract_structure(std::string_view raw, const Schema& schema) {
  const auto text = trim(raw);
  std::vector<Json> candidates;
  auto consider = [&](std::string_view span) {
    if (auto v = try_parse(trim(span)); v && kind_matches(*v, schema.type)) {
      candidates.push_back(std::move(*v));
      return;
    }
    for (auto inner : balanced_spans(span)) {
      if (auto v = try_parse(inner); v && kind_matches(*v, schema.type)) candidates.push_back(std::move(*v));
    }
  };

  if (auto whole = try_parse(text); whole && kind_matches(*whole, schema.type)) candidates.push_back(std::move(*whole));
  for (auto block : fenced_blocks(text)) consider(block);
  for (auto span : balanced_spans(text)) {
    if (auto v = try_parse(span); v && kind_matches(*v, schema.type)) candidates.push_back(std::move(*v));
  }
  if (candidates.empty() && (schema.type == Schema::Type::Number || schema.type == Schema::Type::Integer)) {
    if (auto f = first_float(text)) {
      Json v = *f;
      if (kind_matches(v, schema.type)) candidates.push_back(std::move(v));
    }
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::NoStructureFound, "no " + std::string(type_name(schema.type)) + " value found in reply");
  }

  for (const auto& c : candidates) {
    if (validate(c, schema).empty()) return c;
  }
  std::string detail;
  for (const auto& p : validate(candidates.front(), schema)) {
    if (!detail.empty()) detail += "; ";
    detail += p;
  }
  throw Error(ErrorCode::SchemaMismatch, detail);
}

}  // namespace jitsteer
