#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "pdx/kernels.hpp"
#include "pdx/layout.hpp"
#include "pdx/pruning.hpp"

namespace pdx {

struct Neighbor {
    float distance = 0.0f;
    VectorId id = 0;

    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
    }
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Bounded max-heap keeping the k smallest (distance, id) pairs.
class TopK {
public:
    explicit TopK(std::size_t k);

    std::size_t capacity() const noexcept { return k_; }
    std::size_t size() const noexcept { return heap_.size(); }
    bool empty() const noexcept { return heap_.empty(); }
    bool full() const noexcept { return heap_.size() == k_; }

    // Worst stored distance once full; +inf before.
    float threshold() const noexcept {
        return full() ? heap_.front().distance : std::numeric_limits<float>::infinity();
    }

    bool push(float distance, VectorId id);

    // Ascending by (distance, id).
    std::vector<Neighbor> sorted() const;
    std::vector<VectorId> ids() const;
    // Removes and returns the worst member.
    Neighbor pop();

private:
    std::size_t k_;
    std::vector<Neighbor> heap_;
};

enum class PrunerKind { None, Ads, Bond };

PrunerKind parse_pruner(std::string_view name);
std::string_view to_string(PrunerKind kind);

inline constexpr float kDefaultSelectionFraction = 0.20f;
inline constexpr std::size_t kDefaultInitialStep = 2;

struct SearchParams {
    std::size_t k = 10;
    float selection_fraction = kDefaultSelectionFraction;
    std::size_t initial_step = kDefaultInitialStep;
    // Constant-width steps of `initial_step` instead of doubling. Test and
    // comparison configuration only.
    bool fixed_step = false;
    Metric metric = Metric::L2;
    PrunerKind pruner = PrunerKind::None;
    float epsilon0 = kDefaultEpsilon0;
    BondPruner bond{};

    void validate() const;
};

// Dimension ranges fetched per step: widths initial, 2*initial, 4*initial,
// ... with the last one clamped so the widths sum to d.
std::vector<DimRange> step_schedule(std::size_t d, std::size_t initial_step, bool fixed = false);

enum class SearchPhase { Start, Warmup, Prune };

// Per-block pruning trace: surviving vectors after each schedule step.
struct BlockTrace {
    std::size_t block_index = 0;
    std::size_t m = 0;
    std::vector<std::size_t> step_ends;
    std::vector<std::size_t> survivors;
    std::size_t prune_phase_step = 0;  // first step run in PRUNE; == step count if never
};

struct SearchTrace {
    std::vector<BlockTrace> blocks;
    std::uint64_t values_total = 0;    // sum of m*d over visited blocks
    std::uint64_t values_touched = 0;  // scalar values read by distance kernels

    double pruning_power() const {
        return values_total == 0 ? 0.0
                                 : 1.0 - static_cast<double>(values_touched) / static_cast<double>(values_total);
    }
};

struct PhaseTimes {
    using duration = std::chrono::duration<double>;
    duration preprocessing{0};
    duration find_buckets{0};
    duration bounds{0};
    duration distances{0};

    PhaseTimes& operator+=(const PhaseTimes& o) {
        preprocessing += o.preprocessing;
        find_buckets += o.find_buckets;
        bounds += o.bounds;
        distances += o.distances;
        return *this;
    }
    duration total() const { return preprocessing + find_buckets + bounds + distances; }
};

struct SearchObservers {
    SearchTrace* trace = nullptr;
    PhaseTimes* times = nullptr;
    // Receives the heap threshold in effect at the start of each block.
    std::vector<float>* thresholds = nullptr;
};

/// Dimension-by-dimension search over `blocks` in the given order.
///
/// The first block is scanned fully to seed the heap. Each later block
/// runs the step schedule: while in WARMUP every slot is accumulated and the
/// pruning predicate is evaluated in its own pass; once the surviving
/// fraction drops below `selection_fraction` the block switches to PRUNE and
/// only the surviving positions are accumulated. Survivors of the last step
/// are merged into the heap.
///
/// Distances in the returned heap are L2/L1 values, or the negated inner
/// product for IP. IP always runs as a linear scan. For ADS the query (and
/// blocks) must already be in the rotated space.
TopK search(std::span<const PdxBlock> blocks, std::span<const float> query, const SearchParams& params,
            const SearchObservers& observers = {});

// Like search(), but blocks are visited through a list of chains.
TopK search_chains(std::span<const std::span<const PdxBlock>> chains, std::span<const float> query,
                   const SearchParams& params, const SearchObservers& observers = {});

SearchTrace pruning_power_trace(std::span<const PdxBlock> blocks, std::span<const float> query,
                                const SearchParams& params);

// Converts heap distances back to the metric's natural value (IP un-negated).
float natural_distance(Metric metric, float heap_distance);

}  // namespace pdx
