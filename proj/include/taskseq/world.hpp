#pragma once

// Attribute-based kinematic world: objects are axis-aligned boxes carrying the
// 14-entry attribute vector the learner sees. Primitives are instantaneous
// state transitions; a WorldState is an immutable value.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskseq/errors.hpp"

namespace taskseq {

enum class ObjectId : std::uint32_t {};

inline constexpr ObjectId kNullObject{0};

constexpr std::uint32_t to_int(ObjectId id) { return static_cast<std::uint32_t>(id); }
constexpr bool is_null(ObjectId id) { return id == kNullObject; }

/// "obj07" style label, "NULL" for the reserved id.
std::string object_label(ObjectId id);

// Simulator constants. The feature normalization caps live in features.hpp.
inline constexpr double kProximityThreshold = 0.6;  // reach limit, meters
inline constexpr double kPourClearance = 0.15;      // hover height above target top
inline constexpr double kContactTolerance = 1e-6;
inline constexpr double kApproachStandoff = 0.3;    // MOVE_CLOSE stops this far from the footprint
inline constexpr double kCarryHeight = 1.6;         // minimum bottom z of a carried object

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Vec2&) const = default;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    bool operator==(const Vec3&) const = default;
};

struct Dims {
    double width = 0.0;   // along x
    double length = 0.0;  // along y
    double height = 0.0;  // along z
    bool operator==(const Dims&) const = default;
};

struct AttributeVector {
    static constexpr std::size_t kCount = 14;
    static constexpr std::size_t kContinuous = 6;
    static constexpr std::size_t kFlags = 8;

    double height = 0.0;
    double max_wl = 0.0;
    double min_wl = 0.0;
    double volume = 0.0;
    double min_over_max = 0.0;
    double median_over_max = 0.0;
    bool cylinder_shape = false;
    bool box_shape = false;
    bool liquid = false;
    bool container = false;
    bool handle = false;
    bool movable = false;
    bool large_horizontal_surface = false;
    bool multiple_large_horizontal_surface = false;

    /// Fills the six continuous entries from box dimensions; flags untouched.
    void set_geometry(const Dims& dims);

    bool flag(std::size_t i) const;
    void set_flag(std::size_t i, bool value);

    /// All 14 entries scaled into [0,1] (continuous caps: 2 m, 2 m, 2 m, 0.2 m^3).
    std::array<double, kCount> normalized() const;

    static const std::array<std::string_view, kCount>& names();

    bool operator==(const AttributeVector&) const = default;
};

struct ObjectState {
    ObjectId id = kNullObject;
    Vec3 center;
    Dims dims;
    AttributeVector attributes;
    std::vector<ObjectId> contained_liquid;  // liquids held by this container
    bool stirred = false;                    // liquids only
    bool poured = false;                     // liquids only: transferred by a pour

    double bottom() const { return center.z - dims.height / 2; }
    double top() const { return center.z + dims.height / 2; }
    double min_x() const { return center.x - dims.width / 2; }
    double max_x() const { return center.x + dims.width / 2; }
    double min_y() const { return center.y - dims.length / 2; }
    double max_y() const { return center.y + dims.length / 2; }

    bool operator==(const ObjectState&) const = default;
};

struct RobotState {
    Vec2 position;
    ObjectId gripper = kNullObject;
    bool operator==(const RobotState&) const = default;
};

struct WorldState {
    std::vector<ObjectState> objects;  // sorted by id
    RobotState robot;
    int step_index = 0;

    const ObjectState& object(ObjectId id) const;
    ObjectState& object(ObjectId id);
    const ObjectState* find(ObjectId id) const;
    bool contains(ObjectId id) const { return find(id) != nullptr; }

    /// Inserts keeping id order; throws on duplicate or NULL id.
    void add_object(ObjectState obj);

    bool holding(ObjectId id) const { return !is_null(id) && robot.gripper == id; }

    bool operator==(const WorldState&) const = default;
};

enum class Primitive : std::uint8_t {
    MoveClose = 0,
    Grasp,
    Release,
    PlaceAbove,
    HoldAbove,
    FollowTrajCircle,
    FollowTrajPour,
    Done,
};
inline constexpr int kPrimitiveCount = 8;

constexpr int arity(Primitive p) {
    switch (p) {
        case Primitive::PlaceAbove:
        case Primitive::HoldAbove:
        case Primitive::FollowTrajPour:
            return 2;
        case Primitive::Done:
            return 0;
        default:
            return 1;
    }
}

std::string_view primitive_name(Primitive p);
std::optional<Primitive> parse_primitive(std::string_view name);

struct Action {
    Primitive primitive = Primitive::Done;
    ObjectId a1 = kNullObject;
    ObjectId a2 = kNullObject;

    bool well_formed() const;
    std::string to_string() const;
    bool operator==(const Action&) const = default;
};

enum class Task : std::uint8_t { Stir = 0, PickAndPlace, Pour, PourTo, ThrowAway };
inline constexpr int kTaskCount = 5;

std::string_view task_name(Task t);
std::optional<Task> parse_task(std::string_view name);
constexpr bool task_has_second_arg(Task t) { return t == Task::PickAndPlace || t == Task::PourTo; }

struct TaskSpec {
    Task task = Task::Stir;
    ObjectId g_a1 = kNullObject;
    ObjectId g_a2 = kNullObject;

    bool well_formed() const;
    std::string to_string() const;
    bool operator==(const TaskSpec&) const = default;
};

enum class Reason : std::uint8_t {
    Ok = 0,
    Malformed,
    UnknownObject,
    GripperFull,
    NotMovable,
    TooFar,
    Obstructed,
    NotGrasped,
    InvalidTarget,
    NoClearance,
    NoLiquid,
    NotContainer,
    NotHovering,
};

std::string_view reason_name(Reason r);

struct PreconditionResult {
    bool ok = true;
    Reason reason = Reason::Ok;
    explicit operator bool() const { return ok; }
};

class RejectedAction : public Error {
public:
    RejectedAction(const Action& action, Reason reason);
    Reason reason() const { return reason_; }

private:
    Reason reason_;
};

// --- geometric predicates -------------------------------------------------

/// Ground-plane centroid distance from the robot; 0 for the grasped object.
double distance_to(const WorldState& state, ObjectId id);

/// Ground-plane distance from the robot to the nearest point of the footprint.
double reach_distance(const WorldState& state, ObjectId id);

/// xy projections intersect with positive area.
bool aabb_overlap_topview(const WorldState& state, ObjectId a, ObjectId b);
bool footprints_overlap(const ObjectState& a, const ObjectState& b);

/// Boxes overlap by more than the contact tolerance along all three axes.
bool boxes_interpenetrate(const ObjectState& a, const ObjectState& b);

/// item sits inside an open bin (non-movable container).
bool is_inside(const ObjectState& item, const ObjectState& bin);

/// Support whose top face (or bin floor) touches id's bottom face; NULL on the floor or in the air.
ObjectId object_directly_below(const WorldState& state, ObjectId id);

/// Container currently holding the liquid, NULL if none.
ObjectId container_of(const WorldState& state, ObjectId liquid);

/// Held object hovering at pour clearance above target.
bool hovering_above(const WorldState& state, ObjectId held, ObjectId target);

// --- primitive semantics --------------------------------------------------

PreconditionResult check_preconditions(const WorldState& state, const Action& action);

/// Deterministic successor; throws RejectedAction when preconditions fail.
WorldState apply_primitive(const WorldState& state, const Action& action);

bool task_goal_satisfied(const WorldState& state, const TaskSpec& task);

/// Empty when every WorldState invariant holds.
std::vector<std::string> invariant_violations(const WorldState& state);

/// Footprint-free spot on top of `surface` for the held object, closest to the robot.
std::optional<Vec3> placement_above(const WorldState& state, ObjectId held, ObjectId surface);

/// Pose a liquid takes inside its container.
Vec3 liquid_pose(const ObjectState& liquid, const ObjectState& container);

/// Derived roles used by goal tests and the scripted experts.
bool is_open_surface(const ObjectState& obj);
bool is_shelf(const ObjectState& obj);
bool is_garbage_bin(const ObjectState& obj);

}  // namespace taskseq
