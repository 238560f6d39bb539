#include "taskseq/features.hpp"

#include <algorithm>
#include <sstream>

namespace taskseq {

namespace layout {

std::string manifest() {
    std::ostringstream out;
    for (const Block& b : kBlocks) out << b.name << ' ' << b.start << ' ' << b.length << '\n';
    return out.str();
}

std::uint64_t manifest_hash() {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : manifest()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::size_t pt_index(Primitive p, Task g) {
    return static_cast<std::size_t>(g) * kPrimitiveCount + static_cast<std::size_t>(p);
}

std::size_t ppt_index(Primitive prev, Primitive cur, Task g) {
    return static_cast<std::size_t>(g) * kPrimitiveCount * kPrimitiveCount +
           static_cast<std::size_t>(prev) * kPrimitiveCount + static_cast<std::size_t>(cur);
}

}  // namespace layout

namespace {

double bit(bool b) { return b ? 1.0 : 0.0; }

bool same_object(ObjectId a, ObjectId b) { return !is_null(a) && a == b; }

bool overlaps(const WorldState& state, ObjectId a, ObjectId b) {
    if (is_null(a) || is_null(b)) return false;
    return aabb_overlap_topview(state, a, b);
}

// Emits every nonzero (index, value) pair of the joint feature vector.
template <typename Sink>
void emit(const WorldState& state, const TaskSpec& task, const Action& action, const History& history, Sink&& sink) {
    using namespace layout;
    const Primitive p = action.primitive;
    const ObjectId a1 = action.a1;
    const ObjectId a2 = action.a2;

    auto put = [&](std::size_t index, double v) {
        if (v != 0.0) sink(index, v);
    };

    const AeFeatures ae = phi_ae(state, a1, a2);
    for (std::size_t i = 0; i < kAe1Len; ++i) put(kAe1 + i, ae.copy1[i]);
    for (std::size_t i = 0; i < kAe2Len; ++i) put(kAe2 + i, ae.copy2[i]);

    put(kPt + pt_index(p, task.task), 1.0);

    const AetFeatures aet = phi_aet(state, a1, a2, task);
    for (std::size_t i = 0; i < kAet1Len; ++i) put(kAet1 + i, aet.copy1[i]);
    for (std::size_t i = 0; i < kAet2Len; ++i) put(kAet2 + i, aet.copy2[i]);

    if (state.holding(a1)) put(kPae1 + static_cast<std::size_t>(p), 1.0);
    if (state.holding(a2)) put(kPae2 + static_cast<std::size_t>(p), 1.0);

    if (history.prev2) put(kPpt1 + ppt_index(history.prev2->primitive, p, task.task), 1.0);
    if (history.prev1) put(kPpt2 + ppt_index(history.prev1->primitive, p, task.task), 1.0);

    const auto bits = paae_bits(a1, a2, history);
    for (std::size_t i = 0; i < 8; ++i) put(kPaae + static_cast<std::size_t>(p) * 8 + i, bits[i]);
}

}  // namespace

double normalized_distance(const WorldState& state, ObjectId id) {
    return std::min(distance_to(state, id), layout::kDistanceCap) / layout::kDistanceCap;
}

AeFeatures phi_ae(const WorldState& state, ObjectId a1, ObjectId a2) {
    AeFeatures out;
    if (!is_null(a1)) {
        out.copy1[0] = bit(state.holding(a1));
        out.copy1[1] = normalized_distance(state, a1);
        if (!is_null(a2)) out.copy1[2] = bit(boxes_interpenetrate(state.object(a1), state.object(a2)));
    }
    if (!is_null(a2)) {
        out.copy2[0] = bit(state.holding(a2));
        out.copy2[1] = normalized_distance(state, a2);
    }
    return out;
}

AetFeatures phi_aet(const WorldState& state, ObjectId a1, ObjectId a2, const TaskSpec& task) {
    using namespace layout;
    constexpr std::size_t l = AttributeVector::kCount;
    AetFeatures out;
    const std::size_t g = static_cast<std::size_t>(task.task);

    auto identity_bits = [&](ObjectId a, double* dst) {
        dst[0] = bit(same_object(a, task.g_a1));
        dst[1] = bit(same_object(a, task.g_a2));
        dst[2] = bit(overlaps(state, a, task.g_a1));
        dst[3] = bit(overlaps(state, a, task.g_a2));
    };
    auto tensor = [&](ObjectId a, double* dst) {
        const auto attrs = state.object(a).attributes.normalized();
        for (std::size_t k = 0; k < l; ++k) dst[k * kTaskCount + g] = attrs[k];
    };

    if (!is_null(a1)) {
        identity_bits(a1, out.copy1.data());
        const ObjectId below = object_directly_below(state, a1);
        if (!is_null(below)) {
            const auto attrs = state.object(below).attributes.normalized();
            const std::size_t base = state.holding(a1) ? kAetBelowHeld : kAetBelowFree;
            std::copy(attrs.begin(), attrs.end(), out.copy1.begin() + static_cast<std::ptrdiff_t>(base));
        }
        tensor(a1, out.copy1.data() + kAet1Tensor);
    }
    if (!is_null(a2)) {
        identity_bits(a2, out.copy2.data());
        tensor(a2, out.copy2.data() + kAet2Tensor);
    }
    return out;
}

std::array<double, layout::kPtLen> phi_pt(Primitive p, Task g) {
    std::array<double, layout::kPtLen> out{};
    out[layout::pt_index(p, g)] = 1.0;
    return out;
}

std::array<double, layout::kPae1Len> phi_pae(const WorldState& state, Primitive p, ObjectId a) {
    std::array<double, layout::kPae1Len> out{};
    if (state.holding(a)) out[static_cast<std::size_t>(p)] = 1.0;
    return out;
}

PptFeatures phi_ppt(Primitive p, const History& history, Task g) {
    PptFeatures out;
    if (history.prev2) out.copy1[layout::ppt_index(history.prev2->primitive, p, g)] = 1.0;
    if (history.prev1) out.copy2[layout::ppt_index(history.prev1->primitive, p, g)] = 1.0;
    return out;
}

std::array<double, 8> paae_bits(ObjectId a1, ObjectId a2, const History& history) {
    std::array<double, 8> bits{};
    auto fill = [&](const std::optional<Action>& prev, std::size_t base) {
        if (!prev) return;
        bits[base + 0] = bit(same_object(a1, prev->a1));
        bits[base + 1] = bit(same_object(a1, prev->a2));
        bits[base + 2] = bit(same_object(a2, prev->a1));
        bits[base + 3] = bit(same_object(a2, prev->a2));
    };
    fill(history.prev1, 0);
    fill(history.prev2, 4);
    return bits;
}

std::array<double, layout::kPaaeLen> phi_paae(Primitive p, ObjectId a1, ObjectId a2, const History& history) {
    std::array<double, layout::kPaaeLen> out{};
    const auto bits = paae_bits(a1, a2, history);
    std::copy(bits.begin(), bits.end(), out.begin() + static_cast<std::ptrdiff_t>(p) * 8);
    return out;
}

FeatureVector assemble(const WorldState& state, const TaskSpec& task, const Action& action, const History& history) {
    FeatureVector out(layout::kDimension, 0.0);
    accumulate(out, 1.0, state, task, action, history);
    return out;
}

void accumulate(FeatureVector& out, double scale, const WorldState& state, const TaskSpec& task,
                const Action& action, const History& history) {
    if (out.size() != layout::kDimension) throw std::invalid_argument("feature buffer has wrong dimension");
    emit(state, task, action, history, [&](std::size_t i, double v) { out[i] += scale * v; });
}

}  // namespace taskseq
