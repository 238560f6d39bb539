#pragma once

// Joint feature map phi(task, state, action, history) with a fixed index layout.
// Each block feeds exactly one term of the linear score.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskseq/world.hpp"

namespace taskseq {

struct History {
    std::optional<Action> prev1;  // t-1
    std::optional<Action> prev2;  // t-2

    /// History after `action` has been executed.
    History advanced(const Action& action) const { return {action, prev1}; }
};

namespace layout {

inline constexpr std::size_t kAe1 = 0, kAe1Len = 3;
inline constexpr std::size_t kAe2 = 3, kAe2Len = 2;
inline constexpr std::size_t kPt = 5, kPtLen = kTaskCount * kPrimitiveCount;
inline constexpr std::size_t kAet1 = 45, kAet1Len = 4 + 2 * AttributeVector::kCount + AttributeVector::kCount * kTaskCount;
inline constexpr std::size_t kAet2 = 147, kAet2Len = 4 + AttributeVector::kCount * kTaskCount;
inline constexpr std::size_t kPae1 = 221, kPae1Len = kPrimitiveCount;
inline constexpr std::size_t kPae2 = 229, kPae2Len = kPrimitiveCount;
inline constexpr std::size_t kPpt1 = 237, kPpt1Len = kTaskCount * kPrimitiveCount * kPrimitiveCount;
inline constexpr std::size_t kPpt2 = 557, kPpt2Len = kPpt1Len;
inline constexpr std::size_t kPaae = 877, kPaaeLen = kPrimitiveCount * 8;
inline constexpr std::size_t kDimension = 941;

// offsets inside the aet copies
inline constexpr std::size_t kAetBelowHeld = 4;
inline constexpr std::size_t kAetBelowFree = 4 + AttributeVector::kCount;
inline constexpr std::size_t kAet1Tensor = 4 + 2 * AttributeVector::kCount;
inline constexpr std::size_t kAet2Tensor = 4;

static_assert(kAe2 == kAe1 + kAe1Len && kPt == kAe2 + kAe2Len && kAet1 == kPt + kPtLen);
static_assert(kAet2 == kAet1 + kAet1Len && kPae1 == kAet2 + kAet2Len && kPae2 == kPae1 + kPae1Len);
static_assert(kPpt1 == kPae2 + kPae2Len && kPpt2 == kPpt1 + kPpt1Len && kPaae == kPpt2 + kPpt2Len);
static_assert(kDimension == kPaae + kPaaeLen);

inline constexpr double kDistanceCap = 10.0;

/// Upper bound on nonzero entries produced by assemble().
inline constexpr std::size_t kMaxNonzeros = 4 + 3 + 1 + 8 + 2 * 14 + 2 * 14 + 2 + 2 + 8;

struct Block {
    std::string_view name;
    std::size_t start;
    std::size_t length;
};

inline constexpr std::array<Block, 10> kBlocks{{
    {"ae1", kAe1, kAe1Len},
    {"ae2", kAe2, kAe2Len},
    {"pt", kPt, kPtLen},
    {"aet1", kAet1, kAet1Len},
    {"aet2", kAet2, kAet2Len},
    {"pae1", kPae1, kPae1Len},
    {"pae2", kPae2, kPae2Len},
    {"ppt1", kPpt1, kPpt1Len},
    {"ppt2", kPpt2, kPpt2Len},
    {"paae", kPaae, kPaaeLen},
}};

/// Text table "name start length" one block per line.
std::string manifest();

/// FNV-1a hash of manifest(), stored in model files.
std::uint64_t manifest_hash();

std::size_t pt_index(Primitive p, Task g);
std::size_t ppt_index(Primitive prev, Primitive cur, Task g);  // offset inside a ppt copy

}  // namespace layout

using FeatureVector = std::vector<double>;

struct AeFeatures {
    std::array<double, layout::kAe1Len> copy1{};
    std::array<double, layout::kAe2Len> copy2{};
};

struct AetFeatures {
    std::array<double, layout::kAet1Len> copy1{};
    std::array<double, layout::kAet2Len> copy2{};
};

struct PptFeatures {
    std::array<double, layout::kPpt1Len> copy1{};
    std::array<double, layout::kPpt2Len> copy2{};
};

double normalized_distance(const WorldState& state, ObjectId id);

AeFeatures phi_ae(const WorldState& state, ObjectId a1, ObjectId a2);
AetFeatures phi_aet(const WorldState& state, ObjectId a1, ObjectId a2, const TaskSpec& task);
std::array<double, layout::kPtLen> phi_pt(Primitive p, Task g);
std::array<double, layout::kPae1Len> phi_pae(const WorldState& state, Primitive p, ObjectId a);
PptFeatures phi_ppt(Primitive p, const History& history, Task g);
std::array<double, layout::kPaaeLen> phi_paae(Primitive p, ObjectId a1, ObjectId a2, const History& history);

/// The eight argument-match bits of phi_paae, before placement in the primitive row.
std::array<double, 8> paae_bits(ObjectId a1, ObjectId a2, const History& history);

/// Full vector of dimension layout::kDimension.
FeatureVector assemble(const WorldState& state, const TaskSpec& task, const Action& action, const History& history);

/// Adds scale * assemble(...) into `out` (size kDimension) without allocating.
void accumulate(FeatureVector& out, double scale, const WorldState& state, const TaskSpec& task,
                const Action& action, const History& history);

}  // namespace taskseq
