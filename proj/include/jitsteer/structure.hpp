#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace jitsteer {

using Json = nlohmann::json;

struct Property;

/// Minimal structure descriptor for model replies. It doubles as the source of
/// the JSON schema text substituted into "{json_schema}" prompt slots.
struct Schema {
  enum class Type { Any, Object, Array, String, Number, Integer, Boolean };

  Type type = Type::Any;
  std::vector<Property> properties;     // Object only
  std::shared_ptr<const Schema> items;  // Array only
  bool additional_properties = true;
  std::string description;

  static Schema any(std::string description = {});
  static Schema string(std::string description = {});
  static Schema number(std::string description = {});
  static Schema integer(std::string description = {});
  static Schema boolean(std::string description = {});
  static Schema object(std::vector<Property> properties, bool additional_properties = true);
  static Schema array(Schema items, std::string description = {});

  Json to_json_schema() const;
};

struct Property {
  std::string name;
  Schema schema;
  bool required = true;
};

/// Lists every way `value` deviates from `schema`, with JSON-pointer-ish paths
/// such as "goals[1].weight". Empty means the value conforms.
std::vector<std::string> validate(const Json& value, const Schema& schema);

/// Scans free-form model output for the first structured value matching the
/// descriptor's top-level kind. Candidates are tried in order: the whole
/// trimmed text, fenced code blocks, then balanced top-level objects/arrays.
/// Number descriptors fall back to the first float literal in the text.
///
/// Throws Error(NoStructureFound) when nothing parses, and Error(SchemaMismatch)
/// naming the missing/extra fields of the first well-formed candidate when no
/// candidate validates.
Json extract_structure(std::string_view raw, const Schema& schema);

/// First decimal/scientific float literal in `text`, if any.
std::optional<double> first_float(std::string_view text);

/// Contents of ``` fenced blocks in order of appearance.
std::vector<std::string_view> fenced_blocks(std::string_view text);

}  // namespace jitsteer
