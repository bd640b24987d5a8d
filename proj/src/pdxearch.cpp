#include "pdx/pdxearch.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

namespace pdx {

TopK::TopK(std::size_t k) : k_(k) {
    if (k == 0) throw std::invalid_argument("TopK: k must be >= 1");
    heap_.reserve(k);
}

bool TopK::push(float distance, VectorId id) {
    const Neighbor candidate{distance, id};
    if (heap_.size() < k_) {
        heap_.push_back(candidate);
        std::push_heap(heap_.begin(), heap_.end());
        return true;
    }
    if (!(candidate < heap_.front())) return false;
    std::pop_heap(heap_.begin(), heap_.end());
    heap_.back() = candidate;
    std::push_heap(heap_.begin(), heap_.end());
    return true;
}

std::vector<Neighbor> TopK::sorted() const {
    std::vector<Neighbor> out = heap_;
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<VectorId> TopK::ids() const {
    std::vector<VectorId> out;
    out.reserve(heap_.size());
    for (const auto& n : sorted()) out.push_back(n.id);
    return out;
}

Neighbor TopK::pop() {
    if (heap_.empty()) throw std::out_of_range("TopK::pop on empty heap");
    std::pop_heap(heap_.begin(), heap_.end());
    const Neighbor worst = heap_.back();
    heap_.pop_back();
    return worst;
}

PrunerKind parse_pruner(std::string_view name) {
    if (name == "none") return PrunerKind::None;
    if (name == "ads") return PrunerKind::Ads;
    if (name == "bond") return PrunerKind::Bond;
    throw std::invalid_argument("unknown pruner '" + std::string(name) + "' (expected none, ads or bond)");
}

std::string_view to_string(PrunerKind kind) {
    switch (kind) {
    case PrunerKind::None: return "none";
    case PrunerKind::Ads: return "ads";
    case PrunerKind::Bond: return "bond";
    }
    return "?";
}

void SearchParams::validate() const {
    if (k == 0) throw std::invalid_argument("SearchParams: k must be >= 1");
    if (!(selection_fraction > 0.0f && selection_fraction <= 1.0f))
        throw std::invalid_argument("SearchParams: selection_fraction must be in (0, 1]");
    if (initial_step == 0) throw std::invalid_argument("SearchParams: initial_step must be >= 1");
    if (pruner == PrunerKind::Ads && metric == Metric::L1)
        throw std::invalid_argument("SearchParams: the ADS pruner requires the l2 metric");
    if (pruner == PrunerKind::Ads && !(epsilon0 > 0.0f))
        throw std::invalid_argument("SearchParams: epsilon0 must be > 0");
}

std::vector<DimRange> step_schedule(std::size_t d, std::size_t initial_step, bool fixed) {
    if (d == 0) throw std::invalid_argument("step_schedule: d must be >= 1");
    if (initial_step == 0) throw std::invalid_argument("step_schedule: initial_step must be >= 1");
    std::vector<DimRange> steps;
    std::size_t width = initial_step;
    for (std::size_t begin = 0; begin < d;) {
        const std::size_t end = std::min(d, begin + width);
        steps.push_back({begin, end});
        begin = end;
        if (!fixed) width *= 2;
    }
    return steps;
}

float natural_distance(Metric metric, float heap_distance) {
    return metric == Metric::IP ? -heap_distance : heap_distance;
}

namespace {

using Clock = std::chrono::steady_clock;

class BlockSearcher {
public:
    BlockSearcher(std::span<const float> query, const SearchParams& params, const SearchObservers& observers)
        : query_(query), params_(params), obs_(observers), heap_(params.k) {
        params_.validate();
        effective_ = params.metric == Metric::IP ? PrunerKind::None : params.pruner;
        schedule_ = step_schedule(query.size(), params.initial_step, params.fixed_step);
        if (effective_ == PrunerKind::Ads) ads_.emplace(params.epsilon0, query.size());
        const auto criteria = params.bond.criteria;
        ordered_ = effective_ == PrunerKind::Bond && criteria != DimensionOrder::Sequential;
        if (ordered_ && criteria == DimensionOrder::Decreasing) set_order(nullptr);
    }

    void visit(const PdxBlock& block) {
        if (block.d != query_.size())
            throw std::invalid_argument("search: query has " + std::to_string(query_.size()) +
                                        " dims, block has " + std::to_string(block.d));
        if (block.m == 0) return;
        if (obs_.thresholds) obs_.thresholds->push_back(heap_.threshold());
        const bool start = !started_;
        started_ = true;
        if (start || effective_ == PrunerKind::None)
            linear_scan(block);
        else
            pruned_scan(block);
        ++block_index_;
    }

    TopK take() { return std::move(heap_); }

private:
    void set_order(const BlockMetadata* scope) {
        if (scope == order_scope_ && !order_.empty()) return;
        const auto criteria = params_.bond.criteria;
        if (scope == nullptr && criteria != DimensionOrder::Decreasing)
            throw std::invalid_argument("search: dimension order '" + std::string(to_string(criteria)) +
                                        "' needs block means");
        order_ = bond_dimension_order(query_, scope ? std::span<const float>(scope->means) : std::span<const float>(),
                                      criteria, params_.bond.zone_width);
        permuted_query_.resize(order_.size());
        for (std::size_t s = 0; s < order_.size(); ++s) permuted_query_[s] = query_[order_[s]];
        order_scope_ = scope;
    }

    void merge(const PdxBlock& block, std::span<const std::uint32_t> slots) {
        const bool negate = params_.metric == Metric::IP;
        for (const std::uint32_t slot : slots) {
            const float v = acc_.values[slot];
            heap_.push(negate ? -v : v, block.ids[slot]);
        }
    }

    void reset_positions(std::size_t m) {
        positions_.resize(m);
        std::iota(positions_.begin(), positions_.end(), 0u);
    }

    void linear_scan(const PdxBlock& block) {
        const auto t0 = obs_.times ? Clock::now() : Clock::time_point{};
        acc_.reset(block.m_padded);
        vertical_accumulate(block, query_, {0, block.d}, params_.metric, acc_);
        if (obs_.times) obs_.times->distances += Clock::now() - t0;
        reset_positions(block.m);
        merge(block, positions_);
        if (obs_.trace) {
            BlockTrace bt{block_index_, block.m, {}, {}, schedule_.size()};
            for (const auto& step : schedule_) {
                bt.step_ends.push_back(step.end);
                bt.survivors.push_back(block.m);
            }
            obs_.trace->blocks.push_back(std::move(bt));
            obs_.trace->values_total += block.m * block.d;
            obs_.trace->values_touched += block.m * block.d;
        }
    }

    void accumulate(const PdxBlock& block, DimRange step, bool selected) {
        if (ordered_) {
            if (selected)
                vertical_accumulate_ordered_selected(block, permuted_query_, order_, step, params_.metric, acc_,
                                                     positions_);
            else
                vertical_accumulate_ordered(block, permuted_query_, order_, step, params_.metric, acc_);
        } else if (selected) {
            vertical_accumulate_selected(block, query_, step, params_.metric, acc_, positions_);
        } else {
            vertical_accumulate(block, query_, step, params_.metric, acc_);
        }
    }

    // Compacts positions_ to the slots whose partial distance stays below
    // `bound`. Written without branches on the data.
    void evaluate(float bound) {
        std::size_t kept = 0;
        const float* acc = acc_.values.data();
        for (std::size_t p = 0; p < positions_.size(); ++p) {
            const std::uint32_t slot = positions_[p];
            positions_[kept] = slot;
            kept += acc[slot] < bound;
        }
        positions_.resize(kept);
    }

    void pruned_scan(const PdxBlock& block) {
        if (ordered_ && params_.bond.criteria != DimensionOrder::Decreasing) set_order(block.metadata.get());

        const float threshold = heap_.threshold();
        acc_.reset(block.m_padded);
        reset_positions(block.m);
        SearchPhase phase = SearchPhase::Warmup;
        const auto exit_count = static_cast<double>(params_.selection_fraction) * static_cast<double>(block.m);

        BlockTrace bt{block_index_, block.m, {}, {}, schedule_.size()};
        std::uint64_t touched = 0;
        for (std::size_t s = 0; s < schedule_.size(); ++s) {
            const DimRange step = schedule_[s];
            const bool selected = phase == SearchPhase::Prune;
            if (selected && bt.prune_phase_step == schedule_.size()) bt.prune_phase_step = s;

            auto t0 = obs_.times ? Clock::now() : Clock::time_point{};
            accumulate(block, step, selected);
            touched += (selected ? positions_.size() : block.m) * step.width();
            if (obs_.times) {
                const auto t1 = Clock::now();
                obs_.times->distances += t1 - t0;
                t0 = t1;
            }

            const float bound = effective_ == PrunerKind::Ads ? ads_->bound(threshold, step.end) : threshold;
            evaluate(bound);
            if (obs_.times) obs_.times->bounds += Clock::now() - t0;

            bt.step_ends.push_back(step.end);
            bt.survivors.push_back(positions_.size());
            if (positions_.empty()) break;
            if (phase == SearchPhase::Warmup && static_cast<double>(positions_.size()) < exit_count)
                phase = SearchPhase::Prune;
        }
        merge(block, positions_);

        if (obs_.trace) {
            obs_.trace->values_total += block.m * block.d;
            obs_.trace->values_touched += touched;
            obs_.trace->blocks.push_back(std::move(bt));
        }
    }

    std::span<const float> query_;
    SearchParams params_;
    SearchObservers obs_;
    TopK heap_;
    PrunerKind effective_ = PrunerKind::None;
    std::vector<DimRange> schedule_;
    std::optional<AdsPruner> ads_;
    bool ordered_ = false;
    bool started_ = false;
    std::size_t block_index_ = 0;

    const BlockMetadata* order_scope_ = nullptr;
    std::vector<std::uint32_t> order_;
    std::vector<float> permuted_query_;

    DistanceAccumulator acc_;
    std::vector<std::uint32_t> positions_;
};

}  // namespace

TopK search_chains(std::span<const std::span<const PdxBlock>> chains, std::span<const float> query,
                   const SearchParams& params, const SearchObservers& observers) {
    if (query.empty()) throw std::invalid_argument("search: empty query");
    BlockSearcher searcher(query, params, observers);
    for (const auto& chain : chains)
        for (const auto& block : chain) searcher.visit(block);
    return searcher.take();
}

TopK search(std::span<const PdxBlock> blocks, std::span<const float> query, const SearchParams& params,
            const SearchObservers& observers) {
    const std::span<const PdxBlock> chain[] = {blocks};
    return search_chains(chain, query, params, observers);
}

SearchTrace pruning_power_trace(std::span<const PdxBlock> blocks, std::span<const float> query,
                                const SearchParams& params) {
    SearchTrace trace;
    search(blocks, query, params, {.trace = &trace});
    return trace;
}

}  // namespace pdx
