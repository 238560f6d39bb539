#include <gtest/gtest.h>

#include <random>
#include <set>

#include "draws.hpp"
#include "scene.hpp"
#include "taskseq/corpus.hpp"
#include "taskseq/features.hpp"
#include "taskseq/model.hpp"

using namespace taskseq;
using scene::id;

namespace {

template <std::size_t N>
int nonzeros(const std::array<double, N>& v) {
    int n = 0;
    for (double x : v) n += x != 0.0;
    return n;
}

std::vector<double> slice(const FeatureVector& f, const layout::Block& b) {
    return {f.begin() + static_cast<std::ptrdiff_t>(b.start), f.begin() + static_cast<std::ptrdiff_t>(b.start + b.length)};
}

template <std::size_t N>
std::vector<double> vec(const std::array<double, N>& a) {
    return {a.begin(), a.end()};
}

}  // namespace

TEST(Layout, BlocksTileTheVector) {
    std::size_t next = 0;
    for (const auto& b : layout::kBlocks) {
        EXPECT_EQ(b.start, next) << b.name;
        next += b.length;
    }
    EXPECT_EQ(next, 941u);
    EXPECT_EQ(layout::kDimension, 941u);
    EXPECT_NE(layout::manifest().find("paae 877 64"), std::string::npos);
}

TEST(PhiAe, NullArgumentsGiveZeros) {
    const WorldState s = scene::pour_scene();
    const auto f = phi_ae(s, kNullObject, kNullObject);
    EXPECT_EQ(nonzeros(f.copy1) + nonzeros(f.copy2), 0);
}

TEST(PhiAe, GraspedAndFarObject) {
    WorldState s;
    scene::table(s, 1, 0, 0);
    scene::cup(s, 2, 1, 0.0, 0.0);
    scene::floor_item(s, 3, 0.0, 5.0, {0.1, 0.1, 0.1}, {.movable = true});
    s.robot.position = {0.0, 0.0};
    s = apply_primitive(s, {Primitive::Grasp, id(2), kNullObject});
    const auto f = phi_ae(s, id(2), id(3));
    EXPECT_EQ(vec(f.copy1), (std::vector<double>{1, 0, 0}));
    EXPECT_EQ(f.copy2[0], 0.0);
    EXPECT_NEAR(f.copy2[1], 0.5, 1e-12);  // min(5, 10) / 10
}

TEST(PhiAe, LiquidInsideItsContainerCollides) {
    const WorldState s = scene::pour_scene();
    EXPECT_EQ(phi_ae(s, id(16), id(4)).copy1[2], 1.0);
    EXPECT_EQ(phi_ae(s, id(2), id(4)).copy1[2], 0.0);
    EXPECT_EQ(phi_ae(s, id(16), id(4)).copy1[2], boxes_interpenetrate(s.object(id(16)), s.object(id(4))) ? 1.0 : 0.0);
}

TEST(PhiAet, IdentityBits) {
    const WorldState s = scene::pour_scene();
    const TaskSpec task{Task::PourTo, id(16), id(2)};
    const auto f = phi_aet(s, id(16), kNullObject, task);
    EXPECT_EQ(f.copy1[0], 1.0);
    EXPECT_EQ(f.copy1[1], 0.0);
    EXPECT_EQ(nonzeros(f.copy2), 0);
    EXPECT_EQ(phi_aet(s, id(4), id(2), task).copy2[1], 1.0);
}

TEST(PhiAet, BelowBlockFollowsGrasp) {
    WorldState s = scene::pour_scene();
    const TaskSpec task{Task::Pour, id(16), kNullObject};
    const auto table = s.object(id(26)).attributes.normalized();
    auto free = phi_aet(s, id(4), kNullObject, task);
    for (std::size_t i = 0; i < 14; ++i) {
        EXPECT_EQ(free.copy1[layout::kAetBelowFree + i], table[i]);
        EXPECT_EQ(free.copy1[layout::kAetBelowHeld + i], 0.0);
    }
    // held: the object below is whatever sits under the carried bottle, here nothing
    s = apply_primitive(s, {Primitive::MoveClose, id(4), kNullObject});
    s = apply_primitive(s, {Primitive::Grasp, id(4), kNullObject});
    s = apply_primitive(s, {Primitive::PlaceAbove, id(4), id(26)});
    const auto held = phi_aet(s, id(4), kNullObject, task);
    for (std::size_t i = 0; i < 14; ++i) {
        EXPECT_EQ(held.copy1[layout::kAetBelowHeld + i], table[i]);
        EXPECT_EQ(held.copy1[layout::kAetBelowFree + i], 0.0);
    }
}

TEST(PhiAet, TensorIsOuterProductWithTaskOneHot) {
    const WorldState s = scene::pour_scene();
    for (int g = 0; g < kTaskCount; ++g) {
        const TaskSpec task{static_cast<Task>(g), id(16), task_has_second_arg(static_cast<Task>(g)) ? id(2) : kNullObject};
        const auto f = phi_aet(s, id(4), id(2), task);
        const auto a1 = s.object(id(4)).attributes.normalized();
        const auto a2 = s.object(id(2)).attributes.normalized();
        double col1 = 0, col2 = 0, want1 = 0, want2 = 0;
        for (std::size_t i = 0; i < 14; ++i) {
            want1 += a1[i];
            want2 += a2[i];
            for (int h = 0; h < kTaskCount; ++h) {
                const double e1 = f.copy1[layout::kAet1Tensor + i * kTaskCount + static_cast<std::size_t>(h)];
                const double e2 = f.copy2[4 + i * kTaskCount + static_cast<std::size_t>(h)];
                EXPECT_EQ(e1, h == g ? a1[i] : 0.0);
                EXPECT_EQ(e2, h == g ? a2[i] : 0.0);
                col1 += e1;
                col2 += e2;
            }
        }
        EXPECT_NEAR(col1, want1, 1e-12);
        EXPECT_NEAR(col2, want2, 1e-12);
    }
}

TEST(PhiPt, OneHotAndOrthogonal) {
    EXPECT_EQ(phi_pt(Primitive::MoveClose, Task::Stir)[0], 1.0);
    std::set<std::size_t> seen;
    for (int g = 0; g < kTaskCount; ++g)
        for (int p = 0; p < kPrimitiveCount; ++p) {
            const auto v = phi_pt(static_cast<Primitive>(p), static_cast<Task>(g));
            double sum = 0;
            std::size_t at = 0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                sum += v[i];
                if (v[i] != 0) at = i;
            }
            EXPECT_EQ(sum, 1.0);
            EXPECT_EQ(at, static_cast<std::size_t>(g * kPrimitiveCount + p));
            EXPECT_TRUE(seen.insert(at).second);  // distinct cells, hence orthogonal
        }
}

TEST(PhiPae, HoldAboveWithHeldFirstArgument) {
    WorldState s = scene::pour_scene();
    EXPECT_EQ(nonzeros(phi_pae(s, Primitive::HoldAbove, id(4))), 0);
    s = apply_primitive(s, {Primitive::MoveClose, id(4), kNullObject});
    s = apply_primitive(s, {Primitive::Grasp, id(4), kNullObject});
    const auto v = phi_pae(s, Primitive::HoldAbove, id(4));
    EXPECT_EQ(nonzeros(v), 1);
    EXPECT_EQ(v[static_cast<std::size_t>(Primitive::HoldAbove)], 1.0);
    EXPECT_EQ(nonzeros(phi_pae(s, Primitive::HoldAbove, kNullObject)), 0);
}

TEST(PhiPpt, IndexArithmetic) {
    const auto none = phi_ppt(Primitive::FollowTrajPour, {}, Task::Pour);
    EXPECT_EQ(nonzeros(none.copy1) + nonzeros(none.copy2), 0);

    History h;
    h = h.advanced({Primitive::Grasp, id(4), kNullObject});
    h = h.advanced({Primitive::HoldAbove, id(4), id(2)});
    const auto f = phi_ppt(Primitive::FollowTrajPour, h, Task::Pour);
    const std::size_t g = static_cast<std::size_t>(Task::Pour), cur = static_cast<std::size_t>(Primitive::FollowTrajPour);
    EXPECT_EQ(f.copy1[g * 64 + static_cast<std::size_t>(Primitive::Grasp) * 8 + cur], 1.0);
    EXPECT_EQ(f.copy2[g * 64 + static_cast<std::size_t>(Primitive::HoldAbove) * 8 + cur], 1.0);
    EXPECT_EQ(nonzeros(f.copy1), 1);
    EXPECT_EQ(nonzeros(f.copy2), 1);

    // only one step of history: t-2 copy stays empty
    const auto one = phi_ppt(Primitive::Grasp, History{}.advanced({Primitive::MoveClose, id(4), kNullObject}), Task::Pour);
    EXPECT_EQ(nonzeros(one.copy1), 0);
    EXPECT_EQ(nonzeros(one.copy2), 1);
}

TEST(PhiPaae, PourAfterHoldAbove) {
    const History h = History{}.advanced({Primitive::HoldAbove, id(4), id(2)});
    const auto v = phi_paae(Primitive::FollowTrajPour, id(4), id(2), h);
    const std::size_t row = static_cast<std::size_t>(Primitive::FollowTrajPour) * 8;
    const std::vector<double> bits(v.begin() + static_cast<std::ptrdiff_t>(row), v.begin() + static_cast<std::ptrdiff_t>(row + 8));
    EXPECT_EQ(bits, (std::vector<double>{1, 0, 0, 1, 0, 0, 0, 0}));
    EXPECT_EQ(nonzeros(v), 2);
    EXPECT_EQ(nonzeros(phi_paae(Primitive::FollowTrajPour, id(4), id(2), {})), 0);
}

TEST(PhiPaae, NullNeverMatchesNull) {
    const History h = History{}.advanced({Primitive::Grasp, id(4), kNullObject});
    const auto bits = paae_bits(id(5), kNullObject, h);
    for (double b : bits) EXPECT_EQ(b, 0.0);
}

// Exhaustive over three objects plus NULL: each bit is the stated equality.
TEST(PhiPaae, BitsMatchEqualityOracle) {
    const std::vector<ObjectId> ids{kNullObject, id(1), id(2), id(3)};
    auto eq = [](ObjectId a, ObjectId b) { return !is_null(a) && a == b ? 1.0 : 0.0; };
    for (ObjectId p1a : ids)
        for (ObjectId p1b : ids)
            for (ObjectId p2a : ids)
                for (ObjectId a1 : ids)
                    for (ObjectId a2 : ids) {
                        History h = History{}.advanced({Primitive::PlaceAbove, p2a, id(3)});
                        h = h.advanced({Primitive::HoldAbove, p1a, p1b});
                        const auto b = paae_bits(a1, a2, h);
                        const std::array<double, 8> want{eq(a1, p1a), eq(a1, p1b), eq(a2, p1a), eq(a2, p1b),
                                                         eq(a1, p2a), eq(a1, id(3)), eq(a2, p2a), eq(a2, id(3))};
                        ASSERT_EQ(b, want);
                    }
}

TEST(Assemble, DoneWithoutHistoryOnlyTouchesPt) {
    const WorldState s = scene::pour_scene();
    const auto f = assemble(s, {Task::Pour, id(16), kNullObject}, {Primitive::Done, kNullObject, kNullObject}, {});
    ASSERT_EQ(f.size(), layout::kDimension);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const bool in_pt = i >= layout::kPt && i < layout::kPt + layout::kPtLen;
        if (!in_pt) EXPECT_EQ(f[i], 0.0) << i;
    }
    EXPECT_EQ(f[layout::kPt + layout::pt_index(Primitive::Done, Task::Pour)], 1.0);
}

TEST(Assemble, SlicesEqualIndividualBlocks) {
    for (const auto& d : draws::sample(200, 5)) {
        const auto f = assemble(d.state, d.task, d.action, d.history);
        const auto ae = phi_ae(d.state, d.action.a1, d.action.a2);
        const auto aet = phi_aet(d.state, d.action.a1, d.action.a2, d.task);
        const auto ppt = phi_ppt(d.action.primitive, d.history, d.task.task);
        EXPECT_EQ(slice(f, layout::kBlocks[0]), vec(ae.copy1));
        EXPECT_EQ(slice(f, layout::kBlocks[1]), vec(ae.copy2));
        EXPECT_EQ(slice(f, layout::kBlocks[2]), vec(phi_pt(d.action.primitive, d.task.task)));
        EXPECT_EQ(slice(f, layout::kBlocks[3]), vec(aet.copy1));
        EXPECT_EQ(slice(f, layout::kBlocks[4]), vec(aet.copy2));
        EXPECT_EQ(slice(f, layout::kBlocks[5]), vec(phi_pae(d.state, d.action.primitive, d.action.a1)));
        EXPECT_EQ(slice(f, layout::kBlocks[6]), vec(phi_pae(d.state, d.action.primitive, d.action.a2)));
        EXPECT_EQ(slice(f, layout::kBlocks[7]), vec(ppt.copy1));
        EXPECT_EQ(slice(f, layout::kBlocks[8]), vec(ppt.copy2));
        EXPECT_EQ(slice(f, layout::kBlocks[9]), vec(phi_paae(d.action.primitive, d.action.a1, d.action.a2, d.history)));
    }
}

TEST(Assemble, RangeSparsityAndPurity) {
    for (const auto& d : draws::sample(500, 6)) {
        const auto f = assemble(d.state, d.task, d.action, d.history);
        std::size_t nz = 0;
        for (double v : f) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            nz += v != 0.0;
        }
        EXPECT_LE(nz, layout::kMaxNonzeros);
        EXPECT_EQ(assemble(d.state, d.task, d.action, d.history), f);

        FeatureVector acc(layout::kDimension, 0.0);
        accumulate(acc, 2.0, d.state, d.task, d.action, d.history);
        for (std::size_t i = 0; i < f.size(); ++i) ASSERT_DOUBLE_EQ(acc[i], 2.0 * f[i]);
    }
}

TEST(Assemble, NullSecondArgumentZeroesItsBlocks) {
    for (const auto& d : draws::sample(200, 7)) {
        if (!is_null(d.action.a2)) continue;
        const auto f = assemble(d.state, d.task, d.action, d.history);
        for (const auto& b : {layout::kBlocks[1], layout::kBlocks[4], layout::kBlocks[6]})
            for (double v : slice(f, b)) EXPECT_EQ(v, 0.0) << b.name;
    }
}

TEST(Assemble, IrrelevantAttributeDoesNotMatter) {
    // an object that is neither an argument, a task argument, nor below an argument
    WorldState s = scene::pour_scene();
    scene::floor_item(s, 30, 4.0, 4.0, {0.2, 0.2, 0.2}, {.box = true, .movable = true});
    const TaskSpec task{Task::Pour, id(16), kNullObject};
    const Action a{Primitive::HoldAbove, id(4), id(2)};
    WorldState t = s;
    t.object(id(30)).attributes.handle = true;
    t.object(id(30)).attributes.cylinder_shape = true;
    EXPECT_EQ(assemble(s, task, a, {}), assemble(t, task, a, {}));
}
