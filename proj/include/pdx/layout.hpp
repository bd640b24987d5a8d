#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pdx {

using VectorId = std::uint64_t;

inline constexpr std::size_t kDefaultBlockSize = 64;

using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-major (N-ary) collection: vector i occupies data[i*d, (i+1)*d).
class VectorCollection {
public:
    VectorCollection() = default;
    explicit VectorCollection(std::size_t d);
    VectorCollection(std::size_t n, std::size_t d);
    VectorCollection(std::size_t d, std::vector<float> data);
    VectorCollection(std::size_t d, std::vector<float> data, std::vector<VectorId> ids);

    static VectorCollection from_rows(const std::vector<std::vector<float>>& rows);

    std::size_t size() const noexcept { return n_; }
    std::size_t dim() const noexcept { return d_; }
    bool empty() const noexcept { return n_ == 0; }

    std::span<const float> row(std::size_t i) const { return {data_.data() + i * d_, d_}; }
    std::span<float> row(std::size_t i) { return {data_.data() + i * d_, d_}; }

    const std::vector<float>& data() const noexcept { return data_; }
    std::vector<float>& data() noexcept { return data_; }
    const std::vector<VectorId>& ids() const noexcept { return ids_; }

    void push_back(std::span<const float> v, VectorId id);
    void push_back(std::span<const float> v) { push_back(v, n_); }

    Eigen::Map<const RowMatrixXf> matrix() const {
        return {data_.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(d_)};
    }
    Eigen::Map<RowMatrixXf> matrix() {
        return {data_.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(d_)};
    }

    friend bool operator==(const VectorCollection&, const VectorCollection&) = default;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<float> data_;
    std::vector<VectorId> ids_;
};

// Per-dimension means over some scope (a block, a bucket, a whole collection).
struct BlockMetadata {
    std::vector<float> means;

    friend bool operator==(const BlockMetadata&, const BlockMetadata&) = default;
};

/// Dimension-major storage of up to `block_size` vectors.
///
/// Dimension j occupies data[j*m_padded, j*m_padded + m). Slots in
/// [m, m_padded) hold zeros so kernels can loop over a uniform stride;
/// they never surface as results.
///
/// `metadata` may be shared between blocks of the same scope (an IVF bucket
/// or a flat partition chain); searches cache per-scope work on its address.
struct PdxBlock {
    std::size_t m = 0;
    std::size_t m_padded = 0;
    std::size_t d = 0;
    std::vector<float> data;
    std::vector<VectorId> ids;
    std::shared_ptr<const BlockMetadata> metadata;

    std::span<const float> dimension(std::size_t j) const { return {data.data() + j * m_padded, m_padded}; }
    float at(std::size_t dim, std::size_t slot) const { return data[dim * m_padded + slot]; }
    std::span<const float> means() const {
        return metadata ? std::span<const float>(metadata->means) : std::span<const float>();
    }
};

bool same_contents(const PdxBlock& a, const PdxBlock& b);

// Partition `collection` in input order into dimension-major blocks, each
// carrying its own means. With `pad`, a partial last block is padded to
// block_size.
std::vector<PdxBlock> to_pdx(const VectorCollection& collection, std::size_t block_size = kDefaultBlockSize,
                             bool pad = true);

VectorCollection from_pdx(std::span<const PdxBlock> blocks);

BlockMetadata compute_means(const VectorCollection& scope);
BlockMetadata compute_means(const PdxBlock& scope);
BlockMetadata compute_means(std::span<const PdxBlock> scope);

// Replace every block's metadata with one shared instance.
void share_metadata(std::span<PdxBlock> blocks, std::shared_ptr<const BlockMetadata> metadata);

std::size_t total_vectors(std::span<const PdxBlock> blocks);

}  // namespace pdx
