#include "pdx/layout.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pdx {

VectorCollection::VectorCollection(std::size_t d) : d_(d) {
    if (d == 0) throw std::invalid_argument("VectorCollection: d must be >= 1");
}

VectorCollection::VectorCollection(std::size_t n, std::size_t d) : n_(n), d_(d), data_(n * d, 0.0f), ids_(n) {
    if (d == 0) throw std::invalid_argument("VectorCollection: d must be >= 1");
    std::iota(ids_.begin(), ids_.end(), VectorId{0});
}

VectorCollection::VectorCollection(std::size_t d, std::vector<float> data) : d_(d), data_(std::move(data)) {
    if (d == 0) throw std::invalid_argument("VectorCollection: d must be >= 1");
    if (data_.size() % d != 0)
        throw std::invalid_argument("VectorCollection: data length " + std::to_string(data_.size()) +
                                    " is not a multiple of d=" + std::to_string(d));
    n_ = data_.size() / d;
    ids_.resize(n_);
    std::iota(ids_.begin(), ids_.end(), VectorId{0});
}

VectorCollection::VectorCollection(std::size_t d, std::vector<float> data, std::vector<VectorId> ids)
    : VectorCollection(d, std::move(data)) {
    if (ids.size() != n_)
        throw std::invalid_argument("VectorCollection: " + std::to_string(ids.size()) + " ids for " +
                                    std::to_string(n_) + " vectors");
    ids_ = std::move(ids);
}

VectorCollection VectorCollection::from_rows(const std::vector<std::vector<float>>& rows) {
    if (rows.empty()) throw std::invalid_argument("VectorCollection::from_rows: no rows");
    VectorCollection c(rows.front().size());
    for (const auto& r : rows) c.push_back(r);
    return c;
}

void VectorCollection::push_back(std::span<const float> v, VectorId id) {
    if (v.size() != d_)
        throw std::invalid_argument("VectorCollection::push_back: expected d=" + std::to_string(d_) + ", got " +
                                    std::to_string(v.size()));
    data_.insert(data_.end(), v.begin(), v.end());
    ids_.push_back(id);
    ++n_;
}

bool same_contents(const PdxBlock& a, const PdxBlock& b) {
    if (a.m != b.m || a.m_padded != b.m_padded || a.d != b.d || a.data != b.data || a.ids != b.ids) return false;
    if (static_cast<bool>(a.metadata) != static_cast<bool>(b.metadata)) return false;
    return !a.metadata || *a.metadata == *b.metadata;
}

std::vector<PdxBlock> to_pdx(const VectorCollection& collection, std::size_t block_size, bool pad) {
    if (block_size == 0) throw std::invalid_argument("to_pdx: block_size must be >= 1");
    std::vector<PdxBlock> blocks;
    const std::size_t n = collection.size();
    const std::size_t d = collection.dim();
    blocks.reserve((n + block_size - 1) / block_size);
    for (std::size_t start = 0; start < n; start += block_size) {
        PdxBlock block;
        block.m = std::min(block_size, n - start);
        block.m_padded = pad ? block_size : block.m;
        block.d = d;
        block.data.assign(d * block.m_padded, 0.0f);
        block.ids.assign(collection.ids().begin() + static_cast<std::ptrdiff_t>(start),
                         collection.ids().begin() + static_cast<std::ptrdiff_t>(start + block.m));
        for (std::size_t i = 0; i < block.m; ++i) {
            const auto v = collection.row(start + i);
            for (std::size_t j = 0; j < d; ++j) block.data[j * block.m_padded + i] = v[j];
        }
        block.metadata = std::make_shared<const BlockMetadata>(compute_means(block));
        blocks.push_back(std::move(block));
    }
    return blocks;
}

VectorCollection from_pdx(std::span<const PdxBlock> blocks) {
    if (blocks.empty()) return {};
    const std::size_t d = blocks.front().d;
    std::vector<float> data;
    std::vector<VectorId> ids;
    data.reserve(total_vectors(blocks) * d);
    for (const auto& block : blocks) {
        if (block.d != d)
            throw std::invalid_argument("from_pdx: block has d=" + std::to_string(block.d) + ", expected " +
                                        std::to_string(d));
        for (std::size_t i = 0; i < block.m; ++i) {
            for (std::size_t j = 0; j < d; ++j) data.push_back(block.at(j, i));
            ids.push_back(block.ids[i]);
        }
    }
    return {d, std::move(data), std::move(ids)};
}

BlockMetadata compute_means(const VectorCollection& scope) {
    if (scope.empty()) throw std::invalid_argument("compute_means: empty collection");
    const Eigen::RowVectorXd mean = scope.matrix().cast<double>().colwise().mean();
    return {{mean.data(), mean.data() + mean.size()}};
}

BlockMetadata compute_means(const PdxBlock& scope) {
    return compute_means(std::span<const PdxBlock>(&scope, 1));
}

BlockMetadata compute_means(std::span<const PdxBlock> scope) {
    const std::size_t n = total_vectors(scope);
    if (n == 0) throw std::invalid_argument("compute_means: empty scope");
    const std::size_t d = scope.front().d;
    std::vector<double> sums(d, 0.0);
    for (const auto& block : scope) {
        if (block.d != d) throw std::invalid_argument("compute_means: mixed dimensionality");
        for (std::size_t j = 0; j < d; ++j) {
            const auto dim = block.dimension(j);
            double s = 0.0;
            for (std::size_t i = 0; i < block.m; ++i) s += dim[i];
            sums[j] += s;
        }
    }
    BlockMetadata meta;
    meta.means.resize(d);
    for (std::size_t j = 0; j < d; ++j) meta.means[j] = static_cast<float>(sums[j] / static_cast<double>(n));
    return meta;
}

void share_metadata(std::span<PdxBlock> blocks, std::shared_ptr<const BlockMetadata> metadata) {
    for (auto& b : blocks) b.metadata = metadata;
}

std::size_t total_vectors(std::span<const PdxBlock> blocks) {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.m;
    return n;
}

}  // namespace pdx
