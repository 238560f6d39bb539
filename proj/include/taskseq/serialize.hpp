#pragma once

// JSON encodings shared by the corpus file, reports and the session service.

#include <json.hpp>

#include "taskseq/world.hpp"

namespace taskseq {

nlohmann::json to_json(const AttributeVector& a);
AttributeVector attributes_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ObjectState& o);
ObjectState object_from_json(const nlohmann::json& j);

/// {objects: [...], robot: {position: [x,y], gripper: id|null}}
nlohmann::json to_json(const WorldState& s);
WorldState state_from_json(const nlohmann::json& j);

/// {primitive, a1, a2} with ids as integers and NULL as null.
nlohmann::json to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TaskSpec& t);

}  // namespace taskseq
