#include "taskseq/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rng.hpp"
#include "taskseq/serialize.hpp"

namespace taskseq {

namespace {

using detail::mix;
using detail::Rng;

// --- object catalog ---------------------------------------------------------

enum class Kind {
    Table,
    Shelf,
    Bin,
    Cup,
    Mug,
    Bowl,
    Pot,
    Bottle,
    Jar,
    Stirrer,
    Magazine,
    Book,
    Can,
    Box,
    Plate,
    Tray,
    Liquid,
};

struct KindSpec {
    Kind kind;
    double w_lo, w_hi, l_lo, l_hi, h_lo, h_hi;
    bool cylinder, box, container, handle, movable, lhs, mlhs;
    bool round;  // width == length
};

const KindSpec& spec_of(Kind k) {
    static const std::vector<KindSpec> kSpecs{
        {Kind::Table, 1.2, 1.6, 0.7, 0.9, 0.72, 0.78, false, true, false, false, false, true, false, false},
        {Kind::Shelf, 0.9, 1.1, 0.35, 0.45, 1.1, 1.25, false, true, false, false, false, true, true, false},
        {Kind::Bin, 0.4, 0.5, 0.4, 0.5, 0.55, 0.65, true, false, true, false, false, false, false, true},
        {Kind::Cup, 0.07, 0.09, 0.07, 0.09, 0.09, 0.11, true, false, true, false, true, false, false, true},
        {Kind::Mug, 0.085, 0.1, 0.085, 0.1, 0.1, 0.12, true, false, true, true, true, false, false, true},
        {Kind::Bowl, 0.15, 0.19, 0.15, 0.19, 0.06, 0.08, true, false, true, false, true, false, false, true},
        {Kind::Pot, 0.22, 0.27, 0.22, 0.27, 0.13, 0.17, true, false, true, true, true, false, false, true},
        {Kind::Bottle, 0.07, 0.09, 0.07, 0.09, 0.25, 0.3, true, false, true, false, true, false, false, true},
        {Kind::Jar, 0.11, 0.13, 0.11, 0.13, 0.13, 0.16, true, false, true, false, true, false, false, true},
        {Kind::Stirrer, 0.015, 0.025, 0.12, 0.3, 0.008, 0.012, false, true, false, false, true, false, false, false},
        {Kind::Magazine, 0.2, 0.22, 0.27, 0.29, 0.005, 0.012, false, true, false, false, true, false, false, false},
        {Kind::Book, 0.14, 0.17, 0.2, 0.24, 0.025, 0.04, false, true, false, false, true, false, false, false},
        {Kind::Can, 0.06, 0.07, 0.06, 0.07, 0.11, 0.13, true, false, false, false, true, false, false, true},
        {Kind::Box, 0.14, 0.22, 0.12, 0.18, 0.08, 0.12, false, true, false, false, true, false, false, false},
        {Kind::Plate, 0.22, 0.26, 0.22, 0.26, 0.015, 0.025, true, false, false, false, true, false, false, true},
        {Kind::Tray, 0.35, 0.42, 0.26, 0.32, 0.025, 0.035, false, true, false, false, true, true, false, false},
    };
    for (const auto& s : kSpecs)
        if (s.kind == k) return s;
    throw std::logic_error("no spec for object kind");
}

AttributeVector attributes_for(const KindSpec& s, const Dims& d) {
    AttributeVector a;
    a.set_geometry(d);
    a.cylinder_shape = s.cylinder;
    a.box_shape = s.box;
    a.container = s.container;
    a.handle = s.handle;
    a.movable = s.movable;
    a.large_horizontal_surface = s.lhs;
    a.multiple_large_horizontal_surface = s.mlhs;
    return a;
}

Dims sample_dims(Rng& rng, const KindSpec& s) {
    Dims d{rng.uniform(s.w_lo, s.w_hi), rng.uniform(s.l_lo, s.l_hi), rng.uniform(s.h_lo, s.h_hi)};
    if (s.round) d.length = d.width;
    return d;
}

bool is_flat_carrier(Kind k) { return k == Kind::Magazine || k == Kind::Book || k == Kind::Tray; }

// Environment description: furniture poses are fixed, small objects get re-arranged per variant.
struct Blueprint {
    struct Entry {
        ObjectId id;
        Kind kind;
        Dims dims;
        ObjectId liquid = kNullObject;  // liquid inside, for filled containers
        bool filled = false;
    };
    std::vector<Entry> furniture;  // placed on the floor
    std::vector<Vec2> furniture_xy;
    std::vector<Entry> items;      // small objects (containers, tools, distractors)
    std::vector<std::pair<ObjectId, Dims>> liquids;
};

Blueprint make_blueprint(const GeneratorConfig& config, int index) {
    Rng rng(mix(config.seed, 0xE17, static_cast<std::uint64_t>(index)));
    Blueprint bp;

    std::vector<Kind> small;
    small.push_back(Kind::Cup);
    small.push_back(Kind::Bottle);
    small.push_back(Kind::Bottle);
    small.push_back(Kind::Jar);
    small.push_back(Kind::Mug);
    if (rng.chance(0.5)) small.push_back(Kind::Mug);
    small.push_back(Kind::Bowl);
    if (rng.chance(0.5)) small.push_back(Kind::Pot);
    const int stirrers = rng.integer(2, 3);
    for (int i = 0; i < stirrers; ++i) small.push_back(Kind::Stirrer);

    // filled open containers (mugs, bowls, pots) give stir tasks something to work on
    std::vector<std::size_t> open_idx;
    for (std::size_t i = 0; i < small.size(); ++i)
        if (small[i] == Kind::Mug || small[i] == Kind::Bowl || small[i] == Kind::Pot) open_idx.push_back(i);
    rng.shuffle(open_idx);
    const int n_filled_open = std::min<int>(static_cast<int>(open_idx.size()), rng.integer(1, 2));

    const std::vector<Kind> distractor_kinds{Kind::Magazine, Kind::Book, Kind::Can, Kind::Box, Kind::Plate, Kind::Tray};
    const int n_liquids = 3 + n_filled_open;
    const int base = 4 + static_cast<int>(small.size()) + n_liquids;
    int n_distractors = rng.integer(config.min_distractors, config.max_distractors);
    n_distractors = std::clamp(n_distractors, std::max(0, config.min_objects - base), std::max(0, config.max_objects - base));
    // every environment gets at least one flat carrier and one throwable item
    std::vector<Kind> distractors{Kind::Magazine, Kind::Can};
    while (static_cast<int>(distractors.size()) < n_distractors) distractors.push_back(rng.pick(distractor_kinds));
    distractors.resize(static_cast<std::size_t>(std::max(n_distractors, 0)));
    small.insert(small.end(), distractors.begin(), distractors.end());

    const int total = 4 + static_cast<int>(small.size()) + n_liquids;
    std::vector<std::uint32_t> ids(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) ids[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i + 1);
    rng.shuffle(ids);
    std::size_t next = 0;
    auto take_id = [&]() { return ObjectId{ids.at(next++)}; };

    // furniture: two tables, a shelf and a bin in jittered corner slots
    std::vector<Kind> furniture{Kind::Table, Kind::Table, Kind::Shelf, Kind::Bin};
    std::vector<Vec2> slots{{1.2, 1.2}, {4.8, 1.2}, {1.2, 4.8}, {4.8, 4.8}};
    rng.shuffle(slots);
    for (std::size_t i = 0; i < furniture.size(); ++i) {
        const KindSpec& s = spec_of(furniture[i]);
        Dims d = sample_dims(rng, s);
        if (rng.chance(0.5)) std::swap(d.width, d.length);
        bp.furniture.push_back({take_id(), furniture[i], d});
        bp.furniture_xy.push_back({slots[i].x + rng.uniform(-0.3, 0.3), slots[i].y + rng.uniform(-0.3, 0.3)});
    }

    bool long_stirrer = false;
    for (Kind k : small) {
        const KindSpec& s = spec_of(k);
        Dims d = sample_dims(rng, s);
        if (k == Kind::Stirrer) {
            // one stirrer long enough for any pot, the others visibly shorter
            d.length = long_stirrer ? rng.uniform(0.1, 0.16) : rng.uniform(0.24, 0.3);
            long_stirrer = true;
        }
        if (!s.round && rng.chance(0.5)) std::swap(d.width, d.length);
        bp.items.push_back({take_id(), k, d});
    }
    auto fill = [&](Blueprint::Entry& e) {
        e.filled = true;
        e.liquid = take_id();
        bp.liquids.push_back({e.liquid, Dims{e.dims.width * 0.7, e.dims.length * 0.7, e.dims.height * 0.6}});
    };
    for (auto& e : bp.items)
        if (e.kind == Kind::Bottle || e.kind == Kind::Jar) fill(e);
    for (int i = 0; i < n_filled_open; ++i) {
        // open_idx indexes into `small`, which is the prefix of bp.items
        fill(bp.items[open_idx[static_cast<std::size_t>(i)]]);
    }
    return bp;
}

ObjectState make_object(ObjectId id, Kind kind, const Dims& dims, Vec3 center) {
    ObjectState o;
    o.id = id;
    o.dims = dims;
    o.center = center;
    if (kind == Kind::Liquid) {
        o.attributes.set_geometry(dims);
        o.attributes.liquid = true;
    } else {
        o.attributes = attributes_for(spec_of(kind), dims);
    }
    return o;
}

bool placement_clear(const WorldState& state, const ObjectState& probe, ObjectId surface, double gap) {
    const ObjectState& s = state.object(surface);
    ObjectState inflated = probe;
    inflated.dims.width += 2 * gap;
    inflated.dims.length += 2 * gap;
    for (const auto& o : state.objects) {
        if (o.id == surface || o.attributes.liquid) continue;
        if (o.top() <= s.top() + 1e-9) continue;
        if (footprints_overlap(inflated, o)) return false;
    }
    return true;
}

// Drops `obj` at a random free spot on the surface; false when no spot was found.
bool place_on(WorldState& state, ObjectState obj, ObjectId surface, Rng& rng) {
    const ObjectState s = state.object(surface);
    const double margin = 0.03;
    const double hx = s.dims.width / 2 - obj.dims.width / 2 - margin;
    const double hy = s.dims.length / 2 - obj.dims.length / 2 - margin;
    if (hx < 0 || hy < 0) return false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        obj.center = {s.center.x + rng.uniform(-hx, hx), s.center.y + rng.uniform(-hy, hy), s.top() + obj.dims.height / 2};
        if (placement_clear(state, obj, surface, 0.04)) {
            state.add_object(obj);
            return true;
        }
    }
    return false;
}

void add_liquid(WorldState& state, ObjectId container, ObjectId liquid, const Dims& dims) {
    ObjectState l = make_object(liquid, Kind::Liquid, dims, {});
    l.center = liquid_pose(l, state.object(container));
    state.add_object(l);
    state.object(container).contained_liquid.push_back(liquid);
}

WorldState arrange(const GeneratorConfig& config, int index, std::uint64_t variant) {
    const Blueprint bp = make_blueprint(config, index);
    Rng rng(mix(config.seed, 0xA77, static_cast<std::uint64_t>(index), variant));

    WorldState state;
    std::vector<ObjectId> tables;
    ObjectId shelf = kNullObject;
    for (std::size_t i = 0; i < bp.furniture.size(); ++i) {
        const auto& f = bp.furniture[i];
        state.add_object(make_object(f.id, f.kind, f.dims, {bp.furniture_xy[i].x, bp.furniture_xy[i].y, f.dims.height / 2}));
        if (f.kind == Kind::Table) tables.push_back(f.id);
        if (f.kind == Kind::Shelf) shelf = f.id;
    }

    // flat carriers first so that stacked items can go on them
    std::vector<const Blueprint::Entry*> order;
    for (const auto& e : bp.items)
        if (is_flat_carrier(e.kind)) order.push_back(&e);
    for (const auto& e : bp.items)
        if (!is_flat_carrier(e.kind)) order.push_back(&e);

    std::vector<ObjectId> carriers;
    for (const auto* e : order) {
        ObjectState obj = make_object(e->id, e->kind, e->dims, {});
        std::vector<ObjectId> surfaces;
        switch (e->kind) {
            case Kind::Bottle:
            case Kind::Jar:
            case Kind::Stirrer:
                surfaces = tables;
                break;
            case Kind::Cup:
            case Kind::Mug:
            case Kind::Bowl:
            case Kind::Pot:
                // half of the vessels start on the shelf, so serving them needs a detour
                if (rng.chance(0.5)) surfaces = {shelf};
                else surfaces = tables;
                break;
            default:
                surfaces = tables;
                surfaces.push_back(shelf);
        }
        bool placed = false;
        // occasionally stack a small item on a free flat carrier
        const bool stackable = e->kind == Kind::Can || e->kind == Kind::Box || e->kind == Kind::Mug || e->kind == Kind::Bowl;
        if (stackable && !carriers.empty() && rng.chance(0.3)) {
            const ObjectId c = rng.pick(carriers);
            const ObjectState& carrier = state.object(c);
            if (obj.dims.width <= carrier.dims.width && obj.dims.length <= carrier.dims.length) {
                obj.center = {carrier.center.x, carrier.center.y, carrier.top() + obj.dims.height / 2};
                state.add_object(obj);
                carriers.erase(std::find(carriers.begin(), carriers.end(), c));
                placed = true;
            }
        }
        for (int attempt = 0; !placed && attempt < 8; ++attempt) placed = place_on(state, obj, rng.pick(surfaces), rng);
        if (!placed) surfaces.insert(surfaces.end(), tables.begin(), tables.end());
        for (std::size_t i = 0; !placed && i < surfaces.size(); ++i) placed = place_on(state, obj, surfaces[i], rng);
        if (!placed) throw GenerationError("could not place " + object_label(e->id) + " in environment " + std::to_string(index));
        if (is_flat_carrier(e->kind)) carriers.push_back(e->id);
    }
    for (const auto& e : bp.items) {
        if (!e.filled) continue;
        const auto it = std::find_if(bp.liquids.begin(), bp.liquids.end(), [&](const auto& l) { return l.first == e.liquid; });
        add_liquid(state, e.id, e.liquid, it->second);
    }

    if (rng.chance(0.08)) {
        // start beside a table instead of in the middle of the room
        const ObjectState& t = state.object(rng.pick(tables));
        const double dx = 3.0 - t.center.x;
        const double dy = 3.0 - t.center.y;
        const double n = std::hypot(dx, dy);
        const double ux = dx / n, uy = dy / n;
        double r = std::min(std::abs(ux) > 1e-12 ? t.dims.width / 2 / std::abs(ux) : 1e9,
                            std::abs(uy) > 1e-12 ? t.dims.length / 2 / std::abs(uy) : 1e9);
        state.robot.position = {t.center.x + ux * (r + kApproachStandoff), t.center.y + uy * (r + kApproachStandoff)};
    } else {
        state.robot.position = {3.0 + rng.uniform(-0.4, 0.4), 3.0 + rng.uniform(-0.4, 0.4)};
    }

    if (auto bad = invariant_violations(state); !bad.empty())
        throw GenerationError("environment " + std::to_string(index) + " violates invariants: " + bad.front());
    return state;
}

// --- expert -----------------------------------------------------------------

bool is_cup_profile(const ObjectState& o) {
    const auto& a = o.attributes;
    return a.container && a.movable && !a.handle && a.cylinder_shape && a.max_wl <= 0.1 && a.height <= 0.12;
}

bool is_stirrer_profile(const ObjectState& o) {
    const auto& a = o.attributes;
    return a.movable && !a.container && !a.liquid && a.median_over_max <= 0.25;
}

ObjectId below(const WorldState& s, ObjectId id) { return object_directly_below(s, id); }

bool on_shelf(const WorldState& s, ObjectId id) {
    const ObjectId b = below(s, id);
    return !is_null(b) && is_shelf(s.object(b));
}

bool on_open_surface(const WorldState& s, ObjectId id) {
    const ObjectId b = below(s, id);
    return !is_null(b) && is_open_surface(s.object(b));
}

// Held object already set down on `surface` (after PLACE_ABOVE, before RELEASE).
bool resting_on(const WorldState& s, ObjectId held, ObjectId surface) {
    if (!s.holding(held)) return false;
    const ObjectState& h = s.object(held);
    const ObjectState& t = s.object(surface);
    return footprints_overlap(h, t) && std::abs(h.bottom() - t.top()) <= kContactTolerance;
}

// The expert is reactive: every helper looks at the current state, so a plan
// recomputed from any intermediate state continues the same way.
class Script {
public:
    explicit Script(WorldState s) : state_(std::move(s)) {}

    void emit(Primitive p, ObjectId a1 = kNullObject, ObjectId a2 = kNullObject) {
        const Action a{p, a1, a2};
        const auto pre = check_preconditions(state_, a);
        if (!pre) throw ExpertError("expert step " + a.to_string() + " failed: " + std::string(reason_name(pre.reason)));
        actions_.push_back(a);
        state_ = apply_primitive(state_, a);
    }

    // MOVE_CLOSE only when the object is out of reach
    void approach(ObjectId id) {
        if (reach_distance(state_, id) > kProximityThreshold) emit(Primitive::MoveClose, id);
    }

    void grasp(ObjectId id) {
        if (!state_.holding(id)) emit(Primitive::Grasp, id);
    }

    void place(ObjectId held, ObjectId surface) {
        if (!resting_on(state_, held, surface)) emit(Primitive::PlaceAbove, held, surface);
        emit(Primitive::Release, held);
    }

    void hold_above(ObjectId held, ObjectId target) {
        if (!hovering_above(state_, held, target)) emit(Primitive::HoldAbove, held, target);
    }

    // Sets the held object down on the nearest reachable open surface.
    void put_down_held() {
        const ObjectId held = state_.robot.gripper;
        if (is_null(held)) return;
        ObjectId best = kNullObject;
        double best_d = 1e18;
        for (const auto& o : state_.objects) {
            if (!is_open_surface(o) || o.attributes.movable) continue;
            if (resting_on(state_, held, o.id)) {
                best = o.id;
                break;
            }
            if (reach_distance(state_, o.id) > kProximityThreshold) continue;
            const double d = distance_to(state_, o.id);
            if (d < best_d) {
                best_d = d;
                best = o.id;
            }
        }
        if (is_null(best)) throw ExpertError("no reachable surface to put down " + object_label(held));
        place(held, best);
    }

    const WorldState& state() const { return state_; }
    std::vector<Action>& actions() { return actions_; }

private:
    WorldState state_;
    std::vector<Action> actions_;
};

ObjectId find_cup(const WorldState& s) {
    for (const auto& o : s.objects)
        if (is_cup_profile(o) && o.contained_liquid.empty()) return o.id;
    throw ExpertError("no empty cup to pour into");
}

ObjectId find_bin(const WorldState& s) {
    for (const auto& o : s.objects)
        if (is_garbage_bin(o)) return o.id;
    throw ExpertError("no garbage bin");
}

ObjectId ideal_stirrer(const WorldState& s) {
    ObjectId best = kNullObject;
    double best_len = -1.0;
    for (const auto& o : s.objects) {
        if (!is_stirrer_profile(o) || on_shelf(s, o.id)) continue;
        if (o.attributes.max_wl > best_len) {
            best_len = o.attributes.max_wl;
            best = o.id;
        }
    }
    if (is_null(best)) throw ExpertError("no stirrer");
    return best;
}

ObjectId object_on_top(const WorldState& s, ObjectId id) {
    for (const auto& o : s.objects)
        if (!o.attributes.liquid && !s.holding(o.id) && below(s, o.id) == id) return o.id;
    return kNullObject;
}

// A vessel that must end up on an open surface: off the shelf, off a stack, or
// still in hand from an unfinished relocation.
bool needs_relocation(const WorldState& s, ObjectId vessel) {
    if (s.holding(vessel)) return true;
    return !on_open_surface(s, vessel);
}

// Brings a container off the shelf (or off a stack) over to the open surface under `anchor`.
void relocate_to_open_surface(Script& sc, ObjectId container, ObjectId anchor) {
    if (!sc.state().holding(container)) {
        sc.approach(container);
        sc.grasp(container);
    }
    sc.approach(anchor);
    const ObjectId table = below(sc.state(), anchor);
    if (is_null(table) || !is_open_surface(sc.state().object(table)))
        throw ExpertError(object_label(anchor) + " is not on an open surface");
    sc.place(container, table);
}

void plan_pour(Script& sc, ObjectId liquid, ObjectId target, bool needs_open_surface) {
    const ObjectId source = container_of(sc.state(), liquid);
    if (is_null(source)) throw ExpertError("liquid " + object_label(liquid) + " has no container");
    if (source == target) throw ExpertError("liquid already in target");
    const bool relocate = needs_open_surface && needs_relocation(sc.state(), target);
    const ObjectId held = sc.state().robot.gripper;
    if (!is_null(held) && held != source && !(relocate && held == target)) sc.put_down_held();

    if (relocate) relocate_to_open_surface(sc, target, source);
    if (!sc.state().holding(source)) {
        sc.approach(source);
        sc.grasp(source);
    }
    sc.approach(target);
    sc.hold_above(source, target);
    sc.emit(Primitive::FollowTrajPour, source, target);
}

void plan_stir(Script& sc, ObjectId liquid) {
    const ObjectId container = container_of(sc.state(), liquid);
    if (is_null(container)) throw ExpertError("liquid " + object_label(liquid) + " has no container");
    const ObjectId held = sc.state().robot.gripper;
    const ObjectId stirrer =
        !is_null(held) && is_stirrer_profile(sc.state().object(held)) ? held : ideal_stirrer(sc.state());
    const bool relocate = needs_relocation(sc.state(), container);
    if (!is_null(held) && held != stirrer && !(relocate && held == container)) sc.put_down_held();

    if (relocate) relocate_to_open_surface(sc, container, stirrer);
    if (!sc.state().holding(stirrer)) {
        sc.approach(stirrer);
        sc.grasp(stirrer);
    }
    sc.approach(container);
    sc.hold_above(stirrer, container);
    sc.emit(Primitive::FollowTrajCircle, container);
}

// Walks to `item` and picks it up, first putting aside whatever is stacked on it.
void pick_up(Script& sc, ObjectId item) {
    if (sc.state().holding(item)) return;
    sc.approach(item);
    const ObjectId on_top = object_on_top(sc.state(), item);
    if (!is_null(on_top)) {
        sc.grasp(on_top);
        sc.put_down_held();
    }
    sc.grasp(item);
}

void plan_pick_and_place(Script& sc, ObjectId item, ObjectId target) {
    const ObjectId held = sc.state().robot.gripper;
    if (!is_null(held) && held != item) sc.put_down_held();
    pick_up(sc, item);
    sc.approach(target);
    sc.place(item, target);
}

void plan_throw_away(Script& sc, ObjectId item) {
    const ObjectId bin = find_bin(sc.state());
    const ObjectId held = sc.state().robot.gripper;
    if (!is_null(held) && held != item) sc.put_down_held();
    pick_up(sc, item);
    sc.approach(bin);
    sc.hold_above(item, bin);
    sc.emit(Primitive::Release, item);
}

WorldState replay(const WorldState& initial, const std::vector<Action>& steps) {
    WorldState s = initial;
    for (const Action& a : steps) s = apply_primitive(s, a);
    return s;
}

// --- corpus generation helpers ---------------------------------------------

std::vector<ObjectId> liquids_in(const WorldState& s, bool (*pred)(const ObjectState&)) {
    std::vector<ObjectId> out;
    for (const auto& o : s.objects)
        if (pred(o))
            for (ObjectId l : o.contained_liquid) out.push_back(l);
    return out;
}

bool is_pourable_source(const ObjectState& o) {
    return o.attributes.container && o.attributes.movable && !o.attributes.handle && !is_cup_profile(o) &&
           !o.contained_liquid.empty() && o.attributes.height >= 0.13;
}

bool is_open_vessel(const ObjectState& o) {
    return o.attributes.container && o.attributes.movable && !is_pourable_source(o);
}

ObjectId furniture_of(const WorldState& s, ObjectId id) {
    ObjectId cur = id;
    for (int guard = 0; guard < 16; ++guard) {
        const ObjectId b = below(s, cur);
        if (is_null(b)) return cur;
        cur = b;
    }
    return cur;
}

std::string label(const char* prefix, int n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03d", prefix, n);
    return buf;
}

std::string env_label(int n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "env%02d", n);
    return buf;
}

std::optional<TaskSpec> pick_task(Task task, const WorldState& s, Rng& rng) {
    switch (task) {
        case Task::Stir: {
            std::vector<ObjectId> ls;
            for (const auto& o : s.objects)
                if (is_open_vessel(o))
                    for (ObjectId l : o.contained_liquid) ls.push_back(l);
            if (ls.empty()) return std::nullopt;
            return TaskSpec{task, rng.pick(ls), kNullObject};
        }
        case Task::Pour: {
            const auto ls = liquids_in(s, is_pourable_source);
            if (ls.empty()) return std::nullopt;
            return TaskSpec{task, rng.pick(ls), kNullObject};
        }
        case Task::PourTo: {
            const auto ls = liquids_in(s, is_pourable_source);
            std::vector<ObjectId> targets;
            for (const auto& o : s.objects)
                if (is_open_vessel(o) && o.contained_liquid.empty()) targets.push_back(o.id);
            if (ls.empty() || targets.empty()) return std::nullopt;
            return TaskSpec{task, rng.pick(ls), rng.pick(targets)};
        }
        case Task::PickAndPlace: {
            std::vector<ObjectId> items;
            for (const auto& o : s.objects) {
                const auto& a = o.attributes;
                if (!a.movable || a.liquid || !o.contained_liquid.empty() || is_stirrer_profile(o)) continue;
                items.push_back(o.id);
            }
            if (items.empty()) return std::nullopt;
            std::vector<ObjectId> buried;
            for (ObjectId id : items)
                if (!is_null(object_on_top(s, id))) buried.push_back(id);
            // cleared-first cases are rare under uniform sampling, so favor them
            const ObjectId item = (!buried.empty() && rng.chance(0.7)) ? rng.pick(buried) : rng.pick(items);
            const ObjectId home = furniture_of(s, item);
            std::vector<ObjectId> targets;
            for (const auto& o : s.objects) {
                if (o.id == item || !o.attributes.large_horizontal_surface) continue;
                if (furniture_of(s, o.id) == home) continue;
                targets.push_back(o.id);
            }
            if (targets.empty()) return std::nullopt;
            return TaskSpec{task, item, rng.pick(targets)};
        }
        case Task::ThrowAway: {
            std::vector<ObjectId> items;
            for (const auto& o : s.objects) {
                const auto& a = o.attributes;
                if (!a.movable || a.liquid || a.container || a.large_horizontal_surface || is_stirrer_profile(o)) continue;
                if (o.dims.width > 0.3 || o.dims.length > 0.3) continue;
                items.push_back(o.id);
            }
            if (items.empty()) return std::nullopt;
            std::vector<ObjectId> buried;
            for (ObjectId id : items)
                if (!is_null(object_on_top(s, id))) buried.push_back(id);
            const ObjectId item = (!buried.empty() && rng.chance(0.7)) ? rng.pick(buried) : rng.pick(items);
            return TaskSpec{task, item, kNullObject};
        }
    }
    return std::nullopt;
}

// State right after pouring `liquid` into the cup, robot still holding the source.
std::optional<WorldState> after_pour(const WorldState& s, Rng& rng) {
    const auto ls = liquids_in(s, is_pourable_source);
    if (ls.empty()) return std::nullopt;
    const ObjectId liquid = rng.pick(ls);
    try {
        const auto plan = expert_plan(s, {Task::Pour, liquid, kNullObject});
        WorldState out = s;
        for (const Action& a : plan) out = apply_primitive(out, a);
        out.step_index = 0;
        return out;
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::optional<TaskSpec> pick_follow_up(Task task, const WorldState& s, Rng& rng) {
    const ObjectId held = s.robot.gripper;
    if (is_null(held)) return std::nullopt;
    switch (task) {
        case Task::Stir: {
            for (const auto& o : s.objects)
                if (is_cup_profile(o) && !o.contained_liquid.empty()) return TaskSpec{task, o.contained_liquid.front(), kNullObject};
            return std::nullopt;
        }
        case Task::PourTo: {
            ObjectId cup = kNullObject;
            for (const auto& o : s.objects)
                if (is_cup_profile(o) && !o.contained_liquid.empty()) cup = o.id;
            const auto ls = liquids_in(s, is_pourable_source);
            if (is_null(cup) || ls.empty()) return std::nullopt;
            return TaskSpec{task, rng.pick(ls), cup};
        }
        case Task::ThrowAway:
            return TaskSpec{task, held, kNullObject};
        case Task::PickAndPlace:
            for (const auto& o : s.objects)
                if (is_shelf(o)) return TaskSpec{task, held, o.id};
            return std::nullopt;
        case Task::Pour:
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace

// --- public API -----------------------------------------------------------------

WorldState generate_environment(const GeneratorConfig& config, int index) { return arrange(config, index, 0); }

WorldState arrange_environment(const GeneratorConfig& config, int index, std::uint64_t variant) {
    return arrange(config, index, variant);
}

std::vector<Action> expert_plan(const WorldState& state, const TaskSpec& task) {
    if (!task.well_formed()) throw ExpertError("malformed task " + task.to_string());
    state.object(task.g_a1);
    if (!is_null(task.g_a2)) state.object(task.g_a2);
    // re-planning mid-rollout must stop once the goal holds
    if (task_goal_satisfied(state, task)) return {{Primitive::Done, kNullObject, kNullObject}};
    Script sc(state);
    try {
        switch (task.task) {
            case Task::Stir:
                plan_stir(sc, task.g_a1);
                break;
            case Task::Pour:
                plan_pour(sc, task.g_a1, find_cup(state), true);
                break;
            case Task::PourTo:
                plan_pour(sc, task.g_a1, task.g_a2, false);
                break;
            case Task::PickAndPlace:
                plan_pick_and_place(sc, task.g_a1, task.g_a2);
                break;
            case Task::ThrowAway:
                plan_throw_away(sc, task.g_a1);
                break;
        }
    } catch (const RejectedAction& e) {
        throw ExpertError(e.what());
    }
    sc.emit(Primitive::Done);
    if (!task_goal_satisfied(sc.state(), task)) throw ExpertError("expert plan does not reach the goal of " + task.to_string());
    return std::move(sc.actions());
}

SequenceExample expert_demonstrate(const WorldState& state, const TaskSpec& task, std::string scenario_id,
                                   std::string environment_id) {
    SequenceExample ex;
    ex.scenario_id = std::move(scenario_id);
    ex.environment_id = std::move(environment_id);
    ex.task = task;
    ex.initial_state = state;
    ex.initial_state.step_index = 0;
    ex.steps = expert_plan(ex.initial_state, task);
    return ex;
}

std::vector<SequenceExample> generate_corpus(const GeneratorConfig& config) {
    if (config.n_environments < 1) throw std::invalid_argument("need at least one environment");
    if (config.tasks.empty()) throw std::invalid_argument("need at least one task");
    std::vector<SequenceExample> corpus;
    for (int i = 0; i < config.n_sequences; ++i) {
        const int env = i % config.n_environments;
        const Task task = config.tasks[static_cast<std::size_t>(i) % config.tasks.size()];
        Rng rng(mix(config.seed, 0x5CE, static_cast<std::uint64_t>(i)));
        // evenly spaced within each task so the share is exact rather than sampled
        const double k = static_cast<double>(static_cast<std::size_t>(i) / config.tasks.size());
        const bool held_start = task != Task::Pour && std::floor((k + 1) * config.held_start_fraction) >
                                                          std::floor(k * config.held_start_fraction);
        bool done = false;
        for (int attempt = 0; attempt < 200 && !done; ++attempt) {
            const std::uint64_t variant = mix(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(attempt)) | 1;
            WorldState state = arrange(config, env, variant);
            std::optional<TaskSpec> spec;
            if (held_start) {
                auto next = after_pour(state, rng);
                if (!next) continue;
                state = std::move(*next);
                spec = pick_follow_up(task, state, rng);
            } else {
                spec = pick_task(task, state, rng);
            }
            if (!spec || task_goal_satisfied(state, *spec)) continue;
            try {
                SequenceExample ex = expert_demonstrate(state, *spec, label("s", i), env_label(env));
                if (ex.steps.size() < 4 || ex.steps.size() > 10) continue;
                corpus.push_back(std::move(ex));
                done = true;
            } catch (const ExpertError&) {
            }
        }
        if (!done) throw GenerationError("no solvable scenario for sequence " + std::to_string(i));
    }
    return corpus;
}

std::vector<RecipeScenario> generate_recipes(const GeneratorConfig& config, int environments) {
    std::vector<RecipeScenario> out;
    const char* names[] = {"sweet_tea", "coffee_with_milk", "empty_and_discard", "serve_and_store"};
    for (int e = 0; e < environments; ++e) {
        const int env = config.n_environments + e;  // never used for training data
        for (int r = 0; r < 4; ++r) {
            bool done = false;
            for (int attempt = 0; attempt < 200 && !done; ++attempt) {
                Rng rng(mix(config.seed, 0x4EC, static_cast<std::uint64_t>(env * 4 + r), static_cast<std::uint64_t>(attempt)));
                const WorldState state = arrange(config, env, mix(0x4EC, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(attempt)));
                ObjectId cup = kNullObject, shelf = kNullObject;
                std::vector<ObjectId> bottles, jars;
                for (const auto& o : state.objects) {
                    if (is_cup_profile(o) && o.contained_liquid.empty()) cup = o.id;
                    if (is_shelf(o)) shelf = o.id;
                    if (is_pourable_source(o)) (o.attributes.height >= 0.2 ? bottles : jars).push_back(o.id);
                }
                if (is_null(cup) || bottles.size() < 2 || jars.empty()) continue;
                rng.shuffle(bottles);
                const ObjectId tea = state.object(bottles[0]).contained_liquid.front();
                const ObjectId milk = state.object(bottles[1]).contained_liquid.front();
                const ObjectId sugar = state.object(jars[0]).contained_liquid.front();
                std::vector<TaskSpec> tasks;
                switch (r) {
                    case 0:
                        tasks = {{Task::Pour, tea, kNullObject}, {Task::PourTo, sugar, cup}, {Task::Stir, tea, kNullObject}};
                        break;
                    case 1:
                        tasks = {{Task::PourTo, tea, cup}, {Task::PourTo, milk, cup}};
                        break;
                    case 2:
                        tasks = {{Task::Pour, tea, kNullObject}, {Task::ThrowAway, bottles[0], kNullObject}};
                        break;
                    default:
                        tasks = {{Task::Pour, tea, kNullObject}, {Task::PickAndPlace, bottles[0], shelf}};
                }
                // keep only scenarios the scripted expert can chain
                try {
                    WorldState s = state;
                    for (const auto& t : tasks) {
                        s = replay(s, expert_plan(s, t));
                        s.step_index = 0;
                    }
                } catch (const Error&) {
                    continue;
                }
                out.push_back({std::string(names[r]) + "_" + env_label(env), env_label(env), state, tasks});
                done = true;
            }
            if (!done) throw GenerationError(std::string("no solvable scenario for recipe ") + names[r]);
        }
    }
    return out;
}

WorldState perturb_state(const WorldState& state, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("flip probability must be in [0,1]");
    WorldState out = state;
    Rng rng(mix(seed, 0xF11));
    for (auto& o : out.objects)
        for (std::size_t i = 0; i < AttributeVector::kFlags; ++i)
            if (rng.uniform() < p) o.attributes.set_flag(i, !o.attributes.flag(i));
    return out;
}

std::vector<SequenceExample> perturb_attributes(const std::vector<SequenceExample>& corpus, double p, std::uint64_t seed) {
    std::vector<SequenceExample> out = corpus;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i].initial_state = perturb_state(out[i].initial_state, p, mix(seed, static_cast<std::uint64_t>(i)));
    return out;
}

void validate_example(const SequenceExample& ex) {
    if (ex.steps.empty() || ex.steps.back().primitive != Primitive::Done)
        throw CorpusIntegrityError(ex.scenario_id, ex.steps.size(), "sequence does not end with done");
    if (auto bad = invariant_violations(ex.initial_state); !bad.empty())
        throw CorpusIntegrityError(ex.scenario_id, 0, "initial state: " + bad.front());
    WorldState s = ex.initial_state;
    for (std::size_t t = 0; t < ex.steps.size(); ++t) {
        const auto pre = check_preconditions(s, ex.steps[t]);
        if (!pre)
            throw CorpusIntegrityError(ex.scenario_id, t,
                                       ex.steps[t].to_string() + " not executable (" + std::string(reason_name(pre.reason)) + ")");
        s = apply_primitive(s, ex.steps[t]);
    }
    if (!task_goal_satisfied(s, ex.task))
        throw CorpusIntegrityError(ex.scenario_id, ex.steps.size(), "goal not satisfied after replay");
}

// --- corpus file ---------------------------------------------------------------

std::string example_to_line(const SequenceExample& ex) {
    nlohmann::json j;
    j["format_version"] = kCorpusFormatVersion;
    j["scenario_id"] = ex.scenario_id;
    j["environment_id"] = ex.environment_id;
    const auto t = to_json(ex.task);
    j["task"] = t["task"];
    j["task_args"] = t["task_args"];
    j["environment"] = to_json(ex.initial_state);
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& a : ex.steps) steps.push_back(to_json(a));
    j["steps"] = std::move(steps);
    return j.dump();
}

SequenceExample example_from_line(const std::string& line, std::size_t line_number) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(line_number, e.what());
    }
    if (!j.is_object() || !j.contains("format_version")) throw ParseError(line_number, "missing format_version");
    if (!j["format_version"].is_number_integer() || j["format_version"].get<int>() != kCorpusFormatVersion)
        throw VersionError("line " + std::to_string(line_number) + ": unsupported corpus format_version " +
                           j["format_version"].dump());
    try {
        SequenceExample ex;
        ex.scenario_id = j.at("scenario_id").get<std::string>();
        ex.environment_id = j.at("environment_id").get<std::string>();
        const auto name = j.at("task").get<std::string>();
        const auto task = parse_task(name);
        if (!task) throw std::invalid_argument("unknown task '" + name + "'");
        const auto& args = j.at("task_args");
        if (!args.is_array() || args.size() != 2) throw std::invalid_argument("task_args needs two entries");
        ex.task.task = *task;
        ex.task.g_a1 = args[0].is_null() ? kNullObject : ObjectId{args[0].get<std::uint32_t>()};
        ex.task.g_a2 = args[1].is_null() ? kNullObject : ObjectId{args[1].get<std::uint32_t>()};
        if (!ex.task.well_formed()) throw std::invalid_argument("malformed task arguments");
        ex.initial_state = state_from_json(j.at("environment"));
        for (const auto& s : j.at("steps")) ex.steps.push_back(action_from_json(s));
        return ex;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(line_number, e.what());
    }
}

void save_corpus(const std::vector<SequenceExample>& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write corpus file " + path);
    for (const auto& ex : corpus) out << example_to_line(ex) << '\n';
    if (!out) throw Error("write failed for " + path);
}

std::vector<SequenceExample> load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read corpus file " + path);
    std::vector<SequenceExample> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        out.push_back(example_from_line(line, n));
    }
    return out;
}

std::string corpus_hash(const std::vector<SequenceExample>& corpus) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& ex : corpus) {
        for (unsigned char c : example_to_line(ex)) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= '\n';
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

}  // namespace taskseq
