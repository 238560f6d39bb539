#include "taskseq/serialize.hpp"

namespace taskseq {

namespace {

nlohmann::json id_or_null(ObjectId id) {
    if (is_null(id)) return nullptr;
    return to_int(id);
}

ObjectId id_from(const nlohmann::json& j) {
    if (j.is_null()) return kNullObject;
    return ObjectId{j.get<std::uint32_t>()};
}

}  // namespace

nlohmann::json to_json(const AttributeVector& a) {
    nlohmann::json j = nlohmann::json::object();
    const auto& names = AttributeVector::names();
    j[std::string(names[0])] = a.height;
    j[std::string(names[1])] = a.max_wl;
    j[std::string(names[2])] = a.min_wl;
    j[std::string(names[3])] = a.volume;
    j[std::string(names[4])] = a.min_over_max;
    j[std::string(names[5])] = a.median_over_max;
    for (std::size_t i = 0; i < AttributeVector::kFlags; ++i)
        j[std::string(names[AttributeVector::kContinuous + i])] = a.flag(i);
    return j;
}

AttributeVector attributes_from_json(const nlohmann::json& j) {
    const auto& names = AttributeVector::names();
    AttributeVector a;
    a.height = j.at(std::string(names[0])).get<double>();
    a.max_wl = j.at(std::string(names[1])).get<double>();
    a.min_wl = j.at(std::string(names[2])).get<double>();
    a.volume = j.at(std::string(names[3])).get<double>();
    a.min_over_max = j.at(std::string(names[4])).get<double>();
    a.median_over_max = j.at(std::string(names[5])).get<double>();
    for (std::size_t i = 0; i < AttributeVector::kFlags; ++i)
        a.set_flag(i, j.at(std::string(names[AttributeVector::kContinuous + i])).get<bool>());
    return a;
}

nlohmann::json to_json(const ObjectState& o) {
    nlohmann::json j;
    j["id"] = to_int(o.id);
    j["center"] = {o.center.x, o.center.y, o.center.z};
    j["dims"] = {o.dims.width, o.dims.length, o.dims.height};
    j["attributes"] = to_json(o.attributes);
    nlohmann::json liquids = nlohmann::json::array();
    for (ObjectId l : o.contained_liquid) liquids.push_back(to_int(l));
    j["contained_liquid"] = liquids;
    j["stirred"] = o.stirred;
    j["poured"] = o.poured;
    return j;
}

ObjectState object_from_json(const nlohmann::json& j) {
    ObjectState o;
    o.id = ObjectId{j.at("id").get<std::uint32_t>()};
    const auto& c = j.at("center");
    const auto& d = j.at("dims");
    if (c.size() != 3 || d.size() != 3) throw std::invalid_argument("center and dims need three entries");
    o.center = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
    o.dims = {d[0].get<double>(), d[1].get<double>(), d[2].get<double>()};
    o.attributes = attributes_from_json(j.at("attributes"));
    const auto& liquid = j.at("contained_liquid");
    if (liquid.is_array()) {
        for (const auto& l : liquid) o.contained_liquid.push_back(ObjectId{l.get<std::uint32_t>()});
    } else if (!liquid.is_null()) {
        o.contained_liquid.push_back(ObjectId{liquid.get<std::uint32_t>()});
    }
    o.stirred = j.value("stirred", false);
    o.poured = j.value("poured", false);
    return o;
}

nlohmann::json to_json(const WorldState& s) {
    nlohmann::json j;
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& o : s.objects) objects.push_back(to_json(o));
    j["objects"] = std::move(objects);
    j["robot"] = {{"position", {s.robot.position.x, s.robot.position.y}}, {"gripper", id_or_null(s.robot.gripper)}};
    return j;
}

WorldState state_from_json(const nlohmann::json& j) {
    WorldState s;
    for (const auto& o : j.at("objects")) s.add_object(object_from_json(o));
    const auto& robot = j.at("robot");
    const auto& p = robot.at("position");
    if (p.size() != 2) throw std::invalid_argument("robot position needs two entries");
    s.robot.position = {p[0].get<double>(), p[1].get<double>()};
    s.robot.gripper = id_from(robot.at("gripper"));
    if (!is_null(s.robot.gripper) && !s.contains(s.robot.gripper))
        throw std::invalid_argument("gripper refers to unknown object");
    return s;
}

nlohmann::json to_json(const Action& a) {
    return {{"primitive", std::string(primitive_name(a.primitive))}, {"a1", id_or_null(a.a1)}, {"a2", id_or_null(a.a2)}};
}

Action action_from_json(const nlohmann::json& j) {
    const auto name = j.at("primitive").get<std::string>();
    const auto p = parse_primitive(name);
    if (!p) throw std::invalid_argument("unknown primitive '" + name + "'");
    Action a{*p, id_from(j.value("a1", nlohmann::json())), id_from(j.value("a2", nlohmann::json()))};
    if (!a.well_formed()) throw std::invalid_argument("malformed action " + a.to_string());
    return a;
}

nlohmann::json to_json(const TaskSpec& t) {
    return {{"task", std::string(task_name(t.task))}, {"task_args", {id_or_null(t.g_a1), id_or_null(t.g_a2)}}};
}

}  // namespace taskseq
