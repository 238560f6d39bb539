#include "taskseq/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace taskseq {

namespace {

constexpr double kPlacementGridStep = 0.05;
constexpr double kGarbageBinMinVolume = 0.04;

double overlap_length(double lo_a, double hi_a, double lo_b, double hi_b) {
    return std::min(hi_a, hi_b) - std::max(lo_a, lo_b);
}

double footprint_overlap_area(const ObjectState& a, const ObjectState& b) {
    const double ox = overlap_length(a.min_x(), a.max_x(), b.min_x(), b.max_x());
    const double oy = overlap_length(a.min_y(), a.max_y(), b.min_y(), b.max_y());
    if (ox <= 0.0 || oy <= 0.0) return 0.0;
    return ox * oy;
}

bool footprint_within(const ObjectState& inner, const ObjectState& outer) {
    return inner.min_x() >= outer.min_x() - kContactTolerance && inner.max_x() <= outer.max_x() + kContactTolerance &&
           inner.min_y() >= outer.min_y() - kContactTolerance && inner.max_y() <= outer.max_y() + kContactTolerance;
}

// Height at which `item` would rest if supported by `support`.
double support_level(const ObjectState& item, const ObjectState& support) {
    if (is_garbage_bin(support) && footprint_within(item, support)) return support.bottom();
    return support.top();
}

void move_liquids_with(WorldState& state, const ObjectState& container) {
    for (ObjectId lid : container.contained_liquid) {
        ObjectState& liquid = state.object(lid);
        liquid.center = liquid_pose(liquid, container);
    }
}

void set_pose(WorldState& state, ObjectId id, Vec3 center) {
    ObjectState& obj = state.object(id);
    obj.center = center;
    move_liquids_with(state, obj);
}

// Highest top among solid objects under the footprint of `obj` placed at xy.
double clearance_top(const WorldState& state, const ObjectState& obj, double x, double y) {
    ObjectState probe = obj;
    probe.center.x = x;
    probe.center.y = y;
    double top = 0.0;
    for (const auto& other : state.objects) {
        if (other.id == obj.id || other.attributes.liquid) continue;
        if (footprints_overlap(probe, other)) top = std::max(top, other.top());
    }
    return top;
}

Vec3 carry_pose(const WorldState& state, const ObjectState& held, Vec2 robot) {
    const double bottom = std::max(kCarryHeight, clearance_top(state, held, robot.x, robot.y));
    return {robot.x, robot.y, bottom + held.dims.height / 2};
}

Vec2 approach_position(const WorldState& state, const ObjectState& target) {
    double dx = state.robot.position.x - target.center.x;
    double dy = state.robot.position.y - target.center.y;
    double norm = std::hypot(dx, dy);
    if (norm < 1e-12) {
        dx = 1.0;
        dy = 0.0;
        norm = 1.0;
    }
    dx /= norm;
    dy /= norm;
    const double hx = target.dims.width / 2;
    const double hy = target.dims.length / 2;
    double t = std::numeric_limits<double>::infinity();
    if (std::abs(dx) > 1e-12) t = std::min(t, hx / std::abs(dx));
    if (std::abs(dy) > 1e-12) t = std::min(t, hy / std::abs(dy));
    const double r = t + kApproachStandoff;
    return {target.center.x + dx * r, target.center.y + dy * r};
}

bool collides_with_any(const WorldState& state, const ObjectState& probe) {
    for (const auto& other : state.objects) {
        if (other.id == probe.id || other.attributes.liquid) continue;
        if (boxes_interpenetrate(probe, other)) return true;
    }
    return false;
}

bool has_object_on_top(const WorldState& state, const ObjectState& obj) {
    for (const auto& other : state.objects) {
        if (other.id == obj.id || other.attributes.liquid || state.holding(other.id)) continue;
        if (std::abs(other.bottom() - obj.top()) <= kContactTolerance && footprints_overlap(other, obj)) return true;
    }
    return false;
}

PreconditionResult fail(Reason r) { return {false, r}; }

constexpr double kReachLimit = kProximityThreshold + 1e-9;

}  // namespace

std::string object_label(ObjectId id) {
    if (is_null(id)) return "NULL";
    char buf[32];
    std::snprintf(buf, sizeof buf, "obj%02u", to_int(id));
    return buf;
}

// --- AttributeVector ------------------------------------------------------

void AttributeVector::set_geometry(const Dims& d) {
    height = d.height;
    max_wl = std::max(d.width, d.length);
    min_wl = std::min(d.width, d.length);
    volume = d.width * d.length * d.height;
    std::array<double, 3> s{d.width, d.length, d.height};
    std::sort(s.begin(), s.end());
    min_over_max = s[0] / s[2];
    median_over_max = s[1] / s[2];
}

bool AttributeVector::flag(std::size_t i) const {
    switch (i) {
        case 0: return cylinder_shape;
        case 1: return box_shape;
        case 2: return liquid;
        case 3: return container;
        case 4: return handle;
        case 5: return movable;
        case 6: return large_horizontal_surface;
        case 7: return multiple_large_horizontal_surface;
        default: throw std::out_of_range("attribute flag index");
    }
}

void AttributeVector::set_flag(std::size_t i, bool value) {
    switch (i) {
        case 0: cylinder_shape = value; break;
        case 1: box_shape = value; break;
        case 2: liquid = value; break;
        case 3: container = value; break;
        case 4: handle = value; break;
        case 5: movable = value; break;
        case 6: large_horizontal_surface = value; break;
        case 7: multiple_large_horizontal_surface = value; break;
        default: throw std::out_of_range("attribute flag index");
    }
}

std::array<double, AttributeVector::kCount> AttributeVector::normalized() const {
    auto cap = [](double v, double c) { return std::clamp(v / c, 0.0, 1.0); };
    std::array<double, kCount> out{};
    out[0] = cap(height, 2.0);
    out[1] = cap(max_wl, 2.0);
    out[2] = cap(min_wl, 2.0);
    out[3] = cap(volume, 0.2);
    out[4] = std::clamp(min_over_max, 0.0, 1.0);
    out[5] = std::clamp(median_over_max, 0.0, 1.0);
    for (std::size_t i = 0; i < kFlags; ++i) out[kContinuous + i] = flag(i) ? 1.0 : 0.0;
    return out;
}

const std::array<std::string_view, AttributeVector::kCount>& AttributeVector::names() {
    static const std::array<std::string_view, kCount> kNames{
        "height",         "max_wl",    "min_wl", "volume",    "min_over_max",
        "median_over_max", "cylinder_shape", "box_shape", "liquid", "container",
        "handle",         "movable",   "large_horizontal_surface", "multiple_large_horizontal_surface"};
    return kNames;
}

// --- WorldState -----------------------------------------------------------

const ObjectState* WorldState::find(ObjectId id) const {
    auto it = std::lower_bound(objects.begin(), objects.end(), id,
                               [](const ObjectState& o, ObjectId v) { return o.id < v; });
    if (it == objects.end() || it->id != id) return nullptr;
    return &*it;
}

const ObjectState& WorldState::object(ObjectId id) const {
    const ObjectState* o = find(id);
    if (o == nullptr) throw LookupError("unknown object " + object_label(id));
    return *o;
}

ObjectState& WorldState::object(ObjectId id) {
    return const_cast<ObjectState&>(std::as_const(*this).object(id));
}

void WorldState::add_object(ObjectState obj) {
    if (is_null(obj.id)) throw std::invalid_argument("object id 0 is reserved for NULL");
    auto it = std::lower_bound(objects.begin(), objects.end(), obj.id,
                               [](const ObjectState& o, ObjectId v) { return o.id < v; });
    if (it != objects.end() && it->id == obj.id)
        throw std::invalid_argument("duplicate object id " + object_label(obj.id));
    objects.insert(it, std::move(obj));
}

// --- names ----------------------------------------------------------------

std::string_view primitive_name(Primitive p) {
    switch (p) {
        case Primitive::MoveClose: return "move_close";
        case Primitive::Grasp: return "grasp";
        case Primitive::Release: return "release";
        case Primitive::PlaceAbove: return "place_above";
        case Primitive::HoldAbove: return "hold_above";
        case Primitive::FollowTrajCircle: return "follow_traj_circle";
        case Primitive::FollowTrajPour: return "follow_traj_pour";
        case Primitive::Done: return "done";
    }
    return "?";
}

std::optional<Primitive> parse_primitive(std::string_view name) {
    for (int i = 0; i < kPrimitiveCount; ++i) {
        auto p = static_cast<Primitive>(i);
        if (primitive_name(p) == name) return p;
    }
    return std::nullopt;
}

std::string_view task_name(Task t) {
    switch (t) {
        case Task::Stir: return "stir";
        case Task::PickAndPlace: return "pick_and_place";
        case Task::Pour: return "pour";
        case Task::PourTo: return "pour_to";
        case Task::ThrowAway: return "throw_away";
    }
    return "?";
}

std::optional<Task> parse_task(std::string_view name) {
    for (int i = 0; i < kTaskCount; ++i) {
        auto t = static_cast<Task>(i);
        if (task_name(t) == name) return t;
    }
    return std::nullopt;
}

std::string_view reason_name(Reason r) {
    switch (r) {
        case Reason::Ok: return "OK";
        case Reason::Malformed: return "MALFORMED";
        case Reason::UnknownObject: return "UNKNOWN_OBJECT";
        case Reason::GripperFull: return "GRIPPER_FULL";
        case Reason::NotMovable: return "NOT_MOVABLE";
        case Reason::TooFar: return "TOO_FAR";
        case Reason::Obstructed: return "OBSTRUCTED";
        case Reason::NotGrasped: return "NOT_GRASPED";
        case Reason::InvalidTarget: return "INVALID_TARGET";
        case Reason::NoClearance: return "NO_CLEARANCE";
        case Reason::NoLiquid: return "NO_LIQUID";
        case Reason::NotContainer: return "NOT_CONTAINER";
        case Reason::NotHovering: return "NOT_HOVERING";
    }
    return "?";
}

bool Action::well_formed() const {
    const int n = arity(primitive);
    if (n == 0) return is_null(a1) && is_null(a2);
    if (is_null(a1)) return false;
    if (n == 1) return is_null(a2);
    return !is_null(a2) && a1 != a2;
}

std::string Action::to_string() const {
    std::string s(primitive_name(primitive));
    const int n = arity(primitive);
    if (n == 0) return s;
    s += "(" + object_label(a1);
    if (n == 2) s += "," + object_label(a2);
    return s + ")";
}

bool TaskSpec::well_formed() const {
    if (is_null(g_a1)) return false;
    return task_has_second_arg(task) ? (!is_null(g_a2) && g_a2 != g_a1) : is_null(g_a2);
}

std::string TaskSpec::to_string() const {
    std::string s(task_name(task));
    s += "(" + object_label(g_a1);
    if (!is_null(g_a2)) s += "," + object_label(g_a2);
    return s + ")";
}

RejectedAction::RejectedAction(const Action& action, Reason reason)
    : Error("rejected " + action.to_string() + ": " + std::string(reason_name(reason))), reason_(reason) {}

// --- predicates -----------------------------------------------------------

bool is_open_surface(const ObjectState& o) {
    return o.attributes.large_horizontal_surface && !o.attributes.multiple_large_horizontal_surface;
}

bool is_shelf(const ObjectState& o) { return o.attributes.multiple_large_horizontal_surface; }

bool is_garbage_bin(const ObjectState& o) {
    return o.attributes.container && !o.attributes.movable && o.attributes.volume >= kGarbageBinMinVolume;
}

double distance_to(const WorldState& state, ObjectId id) {
    const ObjectState& o = state.object(id);
    if (state.holding(id)) return 0.0;
    return std::hypot(o.center.x - state.robot.position.x, o.center.y - state.robot.position.y);
}

double reach_distance(const WorldState& state, ObjectId id) {
    const ObjectState& o = state.object(id);
    if (state.holding(id)) return 0.0;
    const double px = state.robot.position.x;
    const double py = state.robot.position.y;
    const double dx = std::max({o.min_x() - px, 0.0, px - o.max_x()});
    const double dy = std::max({o.min_y() - py, 0.0, py - o.max_y()});
    return std::hypot(dx, dy);
}

bool footprints_overlap(const ObjectState& a, const ObjectState& b) {
    return overlap_length(a.min_x(), a.max_x(), b.min_x(), b.max_x()) > 1e-9 &&
           overlap_length(a.min_y(), a.max_y(), b.min_y(), b.max_y()) > 1e-9;
}

bool aabb_overlap_topview(const WorldState& state, ObjectId a, ObjectId b) {
    return footprints_overlap(state.object(a), state.object(b));
}

bool boxes_interpenetrate(const ObjectState& a, const ObjectState& b) {
    return overlap_length(a.min_x(), a.max_x(), b.min_x(), b.max_x()) > kContactTolerance &&
           overlap_length(a.min_y(), a.max_y(), b.min_y(), b.max_y()) > kContactTolerance &&
           overlap_length(a.bottom(), a.top(), b.bottom(), b.top()) > kContactTolerance;
}

bool is_inside(const ObjectState& item, const ObjectState& bin) {
    if (item.id == bin.id || !is_garbage_bin(bin)) return false;
    return footprint_within(item, bin) && item.bottom() >= bin.bottom() - kContactTolerance &&
           item.bottom() < bin.top() - kContactTolerance;
}

ObjectId object_directly_below(const WorldState& state, ObjectId id) {
    const ObjectState& x = state.object(id);
    if (x.attributes.liquid) return container_of(state, id);
    ObjectId best = kNullObject;
    double best_area = 0.0;
    for (const auto& o : state.objects) {
        if (o.id == id || o.attributes.liquid) continue;
        const double area = footprint_overlap_area(x, o);
        if (area <= 0.0) continue;
        if (std::abs(support_level(x, o) - x.bottom()) > kContactTolerance) continue;
        if (area > best_area) {
            best = o.id;
            best_area = area;
        }
    }
    return best;
}

ObjectId container_of(const WorldState& state, ObjectId liquid) {
    for (const auto& o : state.objects)
        if (std::find(o.contained_liquid.begin(), o.contained_liquid.end(), liquid) != o.contained_liquid.end())
            return o.id;
    return kNullObject;
}

bool hovering_above(const WorldState& state, ObjectId held, ObjectId target) {
    if (!state.holding(held)) return false;
    const ObjectState& h = state.object(held);
    const ObjectState& t = state.object(target);
    return footprints_overlap(h, t) && std::abs(h.bottom() - (t.top() + kPourClearance)) <= kContactTolerance;
}

Vec3 liquid_pose(const ObjectState& liquid, const ObjectState& container) {
    return {container.center.x, container.center.y, container.bottom() + liquid.dims.height / 2};
}

std::optional<Vec3> placement_above(const WorldState& state, ObjectId held, ObjectId surface) {
    const ObjectState& h = state.object(held);
    const ObjectState& s = state.object(surface);
    const double z = s.top() + h.dims.height / 2;

    std::vector<Vec2> candidates;
    if (h.dims.width <= s.dims.width && h.dims.length <= s.dims.length) {
        const double x_lo = s.min_x() + h.dims.width / 2;
        const double x_hi = s.max_x() - h.dims.width / 2;
        const double y_lo = s.min_y() + h.dims.length / 2;
        const double y_hi = s.max_y() - h.dims.length / 2;
        const int nx = static_cast<int>(std::floor((x_hi - x_lo) / kPlacementGridStep + 1e-9));
        const int ny = static_cast<int>(std::floor((y_hi - y_lo) / kPlacementGridStep + 1e-9));
        // grid centered on the surface so a lone object lands mid-surface
        const double x0 = s.center.x - nx * kPlacementGridStep / 2;
        const double y0 = s.center.y - ny * kPlacementGridStep / 2;
        for (int i = 0; i <= nx; ++i)
            for (int j = 0; j <= ny; ++j) candidates.push_back({x0 + i * kPlacementGridStep, y0 + j * kPlacementGridStep});
    } else {
        candidates.push_back({s.center.x, s.center.y});
    }

    std::optional<Vec3> best;
    double best_d = std::numeric_limits<double>::infinity();
    ObjectState probe = h;
    for (const Vec2& c : candidates) {
        probe.center = {c.x, c.y, z};
        if (collides_with_any(state, probe)) continue;
        const double d = std::hypot(c.x - state.robot.position.x, c.y - state.robot.position.y);
        if (d < best_d - 1e-12) {
            best_d = d;
            best = probe.center;
        }
    }
    return best;
}

PreconditionResult check_preconditions(const WorldState& state, const Action& action) {
    if (!action.well_formed()) return fail(Reason::Malformed);
    if (action.primitive == Primitive::Done) return {};
    if (!state.contains(action.a1)) return fail(Reason::UnknownObject);
    if (!is_null(action.a2) && !state.contains(action.a2)) return fail(Reason::UnknownObject);

    const ObjectState& a1 = state.object(action.a1);
    switch (action.primitive) {
        case Primitive::MoveClose:
            return {};
        case Primitive::Grasp:
            if (!is_null(state.robot.gripper)) return fail(Reason::GripperFull);
            if (!a1.attributes.movable || a1.attributes.liquid) return fail(Reason::NotMovable);
            if (reach_distance(state, a1.id) > kReachLimit) return fail(Reason::TooFar);
            if (has_object_on_top(state, a1)) return fail(Reason::Obstructed);
            return {};
        case Primitive::Release:
            if (!state.holding(a1.id)) return fail(Reason::NotGrasped);
            return {};
        case Primitive::PlaceAbove:
        case Primitive::HoldAbove: {
            const ObjectState& a2 = state.object(action.a2);
            if (!state.holding(a1.id)) return fail(Reason::NotGrasped);
            if (a2.attributes.liquid) return fail(Reason::InvalidTarget);
            if (reach_distance(state, a2.id) > kReachLimit) return fail(Reason::TooFar);
            if (action.primitive == Primitive::PlaceAbove) {
                if (!placement_above(state, a1.id, a2.id)) return fail(Reason::NoClearance);
            } else {
                ObjectState probe = a1;
                probe.center = {a2.center.x, a2.center.y, a2.top() + kPourClearance + a1.dims.height / 2};
                if (collides_with_any(state, probe)) return fail(Reason::NoClearance);
            }
            return {};
        }
        case Primitive::FollowTrajPour: {
            const ObjectState& a2 = state.object(action.a2);
            if (!state.holding(a1.id)) return fail(Reason::NotGrasped);
            if (a1.contained_liquid.empty()) return fail(Reason::NoLiquid);
            if (!a2.attributes.container || a2.attributes.liquid) return fail(Reason::NotContainer);
            if (!hovering_above(state, a1.id, a2.id)) return fail(Reason::NotHovering);
            return {};
        }
        case Primitive::FollowTrajCircle:
            if (!a1.attributes.container) return fail(Reason::NotContainer);
            if (a1.contained_liquid.empty()) return fail(Reason::NoLiquid);
            if (is_null(state.robot.gripper) || !hovering_above(state, state.robot.gripper, a1.id))
                return fail(Reason::NotHovering);
            return {};
        case Primitive::Done:
            return {};
    }
    return fail(Reason::Malformed);
}

WorldState apply_primitive(const WorldState& state, const Action& action) {
    if (auto pre = check_preconditions(state, action); !pre) throw RejectedAction(action, pre.reason);
    if (action.primitive == Primitive::Done) return state;

    WorldState next = state;
    next.step_index = state.step_index + 1;
    const ObjectId a1 = action.a1;

    switch (action.primitive) {
        case Primitive::MoveClose: {
            if (!next.holding(a1)) next.robot.position = approach_position(next, next.object(a1));
            if (!is_null(next.robot.gripper)) {
                const ObjectState& held = next.object(next.robot.gripper);
                set_pose(next, held.id, carry_pose(next, held, next.robot.position));
            }
            break;
        }
        case Primitive::Grasp: {
            next.robot.gripper = a1;
            const ObjectState& obj = next.object(a1);
            const double bottom = std::max(kCarryHeight, clearance_top(next, obj, obj.center.x, obj.center.y));
            set_pose(next, a1, {obj.center.x, obj.center.y, bottom + obj.dims.height / 2});
            break;
        }
        case Primitive::Release: {
            next.robot.gripper = kNullObject;
            const ObjectState& obj = next.object(a1);
            double level = 0.0;
            for (const auto& o : next.objects) {
                if (o.id == a1 || o.attributes.liquid || !footprints_overlap(obj, o)) continue;
                const double l = support_level(obj, o);
                if (l <= obj.bottom() + kContactTolerance) level = std::max(level, l);
            }
            set_pose(next, a1, {obj.center.x, obj.center.y, level + obj.dims.height / 2});
            break;
        }
        case Primitive::PlaceAbove:
            set_pose(next, a1, *placement_above(next, a1, action.a2));
            break;
        case Primitive::HoldAbove: {
            const ObjectState& target = next.object(action.a2);
            const ObjectState& obj = next.object(a1);
            set_pose(next, a1, {target.center.x, target.center.y, target.top() + kPourClearance + obj.dims.height / 2});
            break;
        }
        case Primitive::FollowTrajPour: {
            std::vector<ObjectId> moved = std::move(next.object(a1).contained_liquid);
            next.object(a1).contained_liquid.clear();
            ObjectState& target = next.object(action.a2);
            for (ObjectId lid : moved) {
                target.contained_liquid.push_back(lid);
                next.object(lid).poured = true;
            }
            move_liquids_with(next, next.object(action.a2));
            break;
        }
        case Primitive::FollowTrajCircle: {
            for (ObjectId lid : next.object(a1).contained_liquid) next.object(lid).stirred = true;
            break;
        }
        case Primitive::Done:
            break;
    }
    return next;
}

bool task_goal_satisfied(const WorldState& state, const TaskSpec& task) {
    const ObjectState& g1 = state.object(task.g_a1);
    if (!is_null(task.g_a2)) state.object(task.g_a2);

    auto rests_on_open_surface = [&](ObjectId id) {
        if (state.holding(id)) return false;
        const ObjectId below = object_directly_below(state, id);
        return !is_null(below) && is_open_surface(state.object(below));
    };

    switch (task.task) {
        case Task::Stir: {
            const ObjectId k = container_of(state, g1.id);
            return g1.stirred && !is_null(k) && rests_on_open_surface(k);
        }
        case Task::PickAndPlace:
            return !state.holding(g1.id) && object_directly_below(state, g1.id) == task.g_a2;
        case Task::Pour: {
            const ObjectId k = container_of(state, g1.id);
            return g1.poured && !is_null(k) && state.object(k).attributes.container && rests_on_open_surface(k);
        }
        case Task::PourTo:
            return container_of(state, g1.id) == task.g_a2;
        case Task::ThrowAway: {
            if (state.holding(g1.id)) return false;
            for (const auto& o : state.objects)
                if (is_inside(g1, o)) return true;
            return false;
        }
    }
    return false;
}

std::vector<std::string> invariant_violations(const WorldState& state) {
    std::vector<std::string> out;
    auto report = [&](const std::string& s) { out.push_back(s); };

    for (std::size_t i = 0; i < state.objects.size(); ++i) {
        const ObjectState& o = state.objects[i];
        const std::string label = object_label(o.id);
        if (is_null(o.id)) report("NULL id instantiated");
        if (i > 0 && !(state.objects[i - 1].id < o.id)) report("ids not strictly increasing at " + label);
        if (!(o.dims.width > 0 && o.dims.length > 0 && o.dims.height > 0)) report(label + ": non-positive dims");

        const AttributeVector& a = o.attributes;
        if (a.height < 0 || a.max_wl < 0 || a.min_wl < 0 || a.volume < 0 || a.min_over_max < 0 || a.median_over_max < 0)
            report(label + ": negative continuous attribute");
        if (a.min_over_max > a.median_over_max + 1e-12 || a.median_over_max > 1.0 + 1e-12)
            report(label + ": ratio attributes out of order");
        const double vol = o.dims.width * o.dims.length * o.dims.height;
        if (std::abs(a.volume - vol) > 1e-9 * std::max(1.0, vol)) report(label + ": volume inconsistent with dims");

        for (ObjectId lid : o.contained_liquid) {
            const ObjectState* l = state.find(lid);
            if (l == nullptr || !l->attributes.liquid) report(label + ": contains non-liquid " + object_label(lid));
        }
    }

    if (!is_null(state.robot.gripper)) {
        const ObjectState* g = state.find(state.robot.gripper);
        if (g == nullptr) report("gripper holds unknown object");
        else if (!g->attributes.movable) report("gripper holds immovable object");
    }

    for (const auto& o : state.objects) {
        const std::string label = object_label(o.id);
        if (o.attributes.liquid) {
            int holders = 0;
            ObjectId holder = kNullObject;
            for (const auto& c : state.objects)
                for (ObjectId lid : c.contained_liquid)
                    if (lid == o.id) {
                        ++holders;
                        holder = c.id;
                    }
            if (holders != 1) {
                report(label + ": liquid held by " + std::to_string(holders) + " containers");
            } else {
                const Vec3 want = liquid_pose(o, state.object(holder));
                if (std::abs(want.x - o.center.x) > kContactTolerance || std::abs(want.y - o.center.y) > kContactTolerance ||
                    std::abs(want.z - o.center.z) > kContactTolerance)
                    report(label + ": liquid not seated in its container");
            }
            continue;
        }
        if (state.holding(o.id)) continue;
        if (std::abs(o.bottom()) <= kContactTolerance) continue;
        if (is_null(object_directly_below(state, o.id))) report(label + ": not resting on a support");
    }

    for (std::size_t i = 0; i < state.objects.size(); ++i) {
        const ObjectState& a = state.objects[i];
        if (a.attributes.liquid) continue;
        for (std::size_t j = i + 1; j < state.objects.size(); ++j) {
            const ObjectState& b = state.objects[j];
            if (b.attributes.liquid) continue;
            if (!boxes_interpenetrate(a, b)) continue;
            if (is_inside(a, b) || is_inside(b, a)) continue;
            report(object_label(a.id) + " interpenetrates " + object_label(b.id));
        }
    }
    return out;
}

}  // namespace taskseq
