#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdx/index.hpp"
#include "pdx/layout.hpp"
#include "pdx/pruning.hpp"

namespace pdx {

// Malformed file contents. The message carries the path and, where it
// applies, the byte offset.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// .fvecs: per record a little-endian uint32 d followed by d float32 values.
VectorCollection read_fvecs(const std::filesystem::path& path);
void write_fvecs(const VectorCollection& collection, const std::filesystem::path& path);

// .ivecs: same framing with int32 payloads (ground-truth neighbour ids).
std::vector<std::vector<std::int32_t>> read_ivecs(const std::filesystem::path& path);
void write_ivecs(const std::vector<std::vector<std::int32_t>>& rows, const std::filesystem::path& path);

inline constexpr char kPdxMagic[8] = {'P', 'D', 'X', 'v', '1', '\0', '\0', '\0'};
inline constexpr std::uint32_t kPdxVersion = 1;

enum PdxStoreFlags : std::uint32_t {
    kHasTransform = 1u << 0,
    kHasIvf = 1u << 1,
};

struct IvfSection {
    std::size_t nlist = 0;
    std::uint64_t training_seed = 0;
    std::vector<float> centroids;  // nlist x d, row-major
    // Blocks [first, first + count) of the store belong to bucket b.
    std::vector<std::size_t> bucket_first;
    std::vector<std::size_t> bucket_count;

    friend bool operator==(const IvfSection&, const IvfSection&) = default;
};

/// Persistent PDX collection. See docs/pdx_format.md for the byte layout.
struct PdxStore {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t block_size = kDefaultBlockSize;
    std::vector<PdxBlock> blocks;
    BlockMetadata global_means;
    std::optional<OrthogonalTransform> transform;
    std::optional<IvfSection> ivf;

    std::uint32_t flags() const {
        return (transform ? kHasTransform : 0u) | (ivf ? kHasIvf : 0u);
    }
};

bool same_contents(const PdxStore& a, const PdxStore& b);

PdxStore make_store(const VectorCollection& collection, std::size_t block_size = kDefaultBlockSize);
PdxStore make_store(const IvfIndex& index);
PdxStore make_store(const FlatPartitioning& flat);

IvfIndex ivf_from_store(const PdxStore& store);
FlatPartitioning flat_from_store(const PdxStore& store);

void write_pdx(const PdxStore& store, const std::filesystem::path& path);
PdxStore read_pdx(const std::filesystem::path& path);

}  // namespace pdx
