#include "pdx/io.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <map>
#include <span>

namespace pdx {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "PDX file IO assumes a little-endian host");

std::vector<char> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading " + path.string());
    return bytes;
}

class Writer {
public:
    explicit Writer(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw IoError("cannot open " + path.string() + " for writing: " + std::strerror(errno));
    }

    template <typename T>
    void put(T value) {
        out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }
    template <typename T>
    void put(std::span<const T> values) {
        out_.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    }
    void put_bytes(const char* data, std::size_t size) { out_.write(data, static_cast<std::streamsize>(size)); }

    void finish() {
        out_.flush();
        if (!out_) throw IoError("error writing " + path_.string());
    }

private:
    fs::path path_;
    std::ofstream out_;
};

class Reader {
public:
    Reader(const fs::path& path, std::vector<char> bytes) : path_(path), bytes_(std::move(bytes)) {}

    std::size_t offset() const noexcept { return offset_; }
    bool done() const noexcept { return offset_ == bytes_.size(); }
    std::size_t remaining() const noexcept { return bytes_.size() - offset_; }

    template <typename T>
    T get(const char* what) {
        T value;
        need(sizeof(T), what);
        std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
        offset_ += sizeof(T);
        return value;
    }

    template <typename T>
    void get(std::span<T> out, const char* what) {
        need(out.size_bytes(), what);
        std::memcpy(out.data(), bytes_.data() + offset_, out.size_bytes());
        offset_ += out.size_bytes();
    }

    [[noreturn]] void fail(const std::string& message, std::size_t at) const {
        throw FormatError(path_.string() + ": " + message + " at byte offset " + std::to_string(at));
    }

private:
    void need(std::size_t size, const char* what) const {
        if (size > remaining())
            fail(std::string("truncated ") + what + " (need " + std::to_string(size) + " bytes, have " +
                     std::to_string(remaining()) + ")",
                 offset_);
    }

    fs::path path_;
    std::vector<char> bytes_;
    std::size_t offset_ = 0;
};

template <typename T>
std::vector<std::vector<T>> read_vecs(const fs::path& path, std::size_t& dim) {
    Reader in(path, slurp(path));
    std::vector<std::vector<T>> rows;
    dim = 0;
    while (!in.done()) {
        const std::size_t at = in.offset();
        const auto d = in.get<std::uint32_t>("record header");
        if (d == 0) in.fail("record with zero dimensionality", at);
        if (rows.empty())
            dim = d;
        else if (d != dim)
            in.fail("inconsistent dimensionality: expected " + std::to_string(dim) + ", found " + std::to_string(d),
                    at);
        std::vector<T> row(d);
        in.get(std::span<T>(row), "record payload");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError(path.string() + ": no records (dimensionality is indeterminate)");
    return rows;
}

}  // namespace

VectorCollection read_fvecs(const fs::path& path) {
    std::size_t d = 0;
    const auto rows = read_vecs<float>(path, d);
    std::vector<float> data;
    data.reserve(rows.size() * d);
    for (const auto& r : rows) data.insert(data.end(), r.begin(), r.end());
    return {d, std::move(data)};
}

void write_fvecs(const VectorCollection& collection, const fs::path& path) {
    Writer out(path);
    const auto d = static_cast<std::uint32_t>(collection.dim());
    for (std::size_t i = 0; i < collection.size(); ++i) {
        out.put(d);
        out.put(collection.row(i));
    }
    out.finish();
}

std::vector<std::vector<std::int32_t>> read_ivecs(const fs::path& path) {
    std::size_t d = 0;
    return read_vecs<std::int32_t>(path, d);
}

void write_ivecs(const std::vector<std::vector<std::int32_t>>& rows, const fs::path& path) {
    Writer out(path);
    for (const auto& r : rows) {
        out.put(static_cast<std::uint32_t>(r.size()));
        out.put(std::span<const std::int32_t>(r));
    }
    out.finish();
}

bool same_contents(const PdxStore& a, const PdxStore& b) {
    if (a.n != b.n || a.d != b.d || a.block_size != b.block_size || a.global_means != b.global_means) return false;
    if (a.blocks.size() != b.blocks.size() || a.ivf != b.ivf) return false;
    for (std::size_t i = 0; i < a.blocks.size(); ++i)
        if (!same_contents(a.blocks[i], b.blocks[i])) return false;
    if (static_cast<bool>(a.transform) != static_cast<bool>(b.transform)) return false;
    if (a.transform && (a.transform->seed != b.transform->seed || a.transform->matrix != b.transform->matrix))
        return false;
    return true;
}

PdxStore make_store(const VectorCollection& collection, std::size_t block_size) {
    PdxStore store;
    store.n = collection.size();
    store.d = collection.dim();
    store.block_size = block_size;
    store.blocks = to_pdx(collection, block_size);
    if (!collection.empty()) store.global_means = compute_means(collection);
    return store;
}

PdxStore make_store(const IvfIndex& index) {
    PdxStore store;
    store.d = index.d;
    store.block_size = index.block_size;
    store.transform = index.transform;
    IvfSection ivf;
    ivf.nlist = index.nlist;
    ivf.training_seed = index.training_seed;
    for (std::size_t c = 0; c < index.nlist; ++c) {
        const auto centroid = index.centroid(c);
        ivf.centroids.insert(ivf.centroids.end(), centroid.begin(), centroid.end());
        ivf.bucket_first.push_back(store.blocks.size());
        ivf.bucket_count.push_back(index.buckets[c].size());
        store.blocks.insert(store.blocks.end(), index.buckets[c].begin(), index.buckets[c].end());
    }
    store.n = total_vectors(store.blocks);
    if (store.n > 0) store.global_means = compute_means(store.blocks);
    store.ivf = std::move(ivf);
    return store;
}

PdxStore make_store(const FlatPartitioning& flat) {
    PdxStore store;
    store.n = flat.size();
    store.d = flat.d;
    store.block_size = flat.partition_size;
    store.blocks = flat.partitions;
    store.transform = flat.transform;
    if (flat.global_means) store.global_means = *flat.global_means;
    return store;
}

IvfIndex ivf_from_store(const PdxStore& store) {
    if (!store.ivf) throw std::invalid_argument("ivf_from_store: store has no IVF section");
    const IvfSection& ivf = *store.ivf;
    IvfIndex index;
    index.d = store.d;
    index.nlist = ivf.nlist;
    index.training_seed = ivf.training_seed;
    index.block_size = store.block_size;
    index.transform = store.transform;
    index.centroids = to_pdx(VectorCollection(store.d, ivf.centroids), kDefaultBlockSize);
    index.buckets.resize(ivf.nlist);
    for (std::size_t c = 0; c < ivf.nlist; ++c) {
        const auto first = store.blocks.begin() + static_cast<std::ptrdiff_t>(ivf.bucket_first[c]);
        index.buckets[c].assign(first, first + static_cast<std::ptrdiff_t>(ivf.bucket_count[c]));
    }
    return index;
}

FlatPartitioning flat_from_store(const PdxStore& store) {
    FlatPartitioning flat;
    flat.d = store.d;
    flat.partition_size = store.block_size;
    flat.transform = store.transform;
    flat.partitions = store.blocks;
    if (store.n > 0) {
        flat.global_means = std::make_shared<const BlockMetadata>(store.global_means);
        share_metadata(flat.partitions, flat.global_means);
    }
    return flat;
}

namespace {

constexpr std::uint32_t kNoMetadata = 0xFFFFFFFFu;

}  // namespace

void write_pdx(const PdxStore& store, const fs::path& path) {
    // Metadata shared between blocks is written once.
    std::map<const BlockMetadata*, std::uint32_t> table_index;
    std::vector<const BlockMetadata*> table;
    for (const auto& b : store.blocks) {
        if (!b.metadata || table_index.contains(b.metadata.get())) continue;
        table_index.emplace(b.metadata.get(), static_cast<std::uint32_t>(table.size()));
        table.push_back(b.metadata.get());
    }

    Writer out(path);
    out.put_bytes(kPdxMagic, sizeof kPdxMagic);
    out.put(kPdxVersion);
    out.put(store.flags());
    out.put(static_cast<std::uint64_t>(store.n));
    out.put(static_cast<std::uint64_t>(store.d));
    out.put(static_cast<std::uint64_t>(store.block_size));
    out.put(static_cast<std::uint64_t>(store.blocks.size()));
    out.put(static_cast<std::uint64_t>(table.size()));
    out.put(static_cast<std::uint64_t>(store.transform ? store.transform->seed : 0));

    std::vector<float> global = store.global_means.means;
    global.resize(store.d, 0.0f);
    out.put(std::span<const float>(global));
    for (const auto* meta : table) {
        if (meta->means.size() != store.d) throw std::invalid_argument("write_pdx: block means have wrong length");
        out.put(std::span<const float>(meta->means));
    }
    for (const auto& b : store.blocks) {
        if (b.d != store.d) throw std::invalid_argument("write_pdx: block dimensionality differs from store");
        out.put(static_cast<std::uint64_t>(b.m));
        out.put(static_cast<std::uint64_t>(b.m_padded));
        out.put(b.metadata ? table_index.at(b.metadata.get()) : kNoMetadata);
        out.put(std::uint32_t{0});
        out.put(std::span<const VectorId>(b.ids));
        out.put(std::span<const float>(b.data));
    }
    if (store.transform) {
        const RowMatrixXf rows = store.transform->matrix;
        out.put(std::span<const float>(rows.data(), static_cast<std::size_t>(rows.size())));
    }
    if (store.ivf) {
        const IvfSection& ivf = *store.ivf;
        out.put(static_cast<std::uint64_t>(ivf.nlist));
        out.put(static_cast<std::uint64_t>(ivf.training_seed));
        out.put(std::span<const float>(ivf.centroids));
        for (std::size_t c = 0; c < ivf.nlist; ++c) {
            out.put(static_cast<std::uint64_t>(ivf.bucket_first[c]));
            out.put(static_cast<std::uint64_t>(ivf.bucket_count[c]));
        }
    }
    out.finish();
}

PdxStore read_pdx(const fs::path& path) {
    Reader in(path, slurp(path));
    char magic[sizeof kPdxMagic];
    in.get(std::span<char>(magic), "magic");
    if (std::memcmp(magic, kPdxMagic, sizeof magic) != 0) in.fail("bad magic (not a PDX store)", 0);
    const auto version = in.get<std::uint32_t>("version");
    if (version != kPdxVersion) in.fail("unsupported version " + std::to_string(version), 8);
    const auto flags = in.get<std::uint32_t>("flags");
    if ((flags & ~(kHasTransform | kHasIvf)) != 0) in.fail("unknown flags", 12);

    PdxStore store;
    store.n = in.get<std::uint64_t>("n");
    store.d = in.get<std::uint64_t>("d");
    store.block_size = in.get<std::uint64_t>("block_size");
    const auto block_count = in.get<std::uint64_t>("block_count");
    const auto table_size = in.get<std::uint64_t>("means_count");
    const auto seed = in.get<std::uint64_t>("transform_seed");
    if (store.d == 0) in.fail("zero dimensionality", 24);
    // Every block costs at least 24 header bytes; reject absurd counts early.
    if (block_count > in.remaining() / 24 || table_size > in.remaining() / (4 * store.d))
        in.fail("section counts exceed file size", 40);

    store.global_means.means.resize(store.d);
    in.get(std::span<float>(store.global_means.means), "global means");
    std::vector<std::shared_ptr<const BlockMetadata>> table;
    for (std::uint64_t t = 0; t < table_size; ++t) {
        BlockMetadata meta;
        meta.means.resize(store.d);
        in.get(std::span<float>(meta.means), "block means");
        table.push_back(std::make_shared<const BlockMetadata>(std::move(meta)));
    }

    std::size_t total = 0;
    store.blocks.reserve(block_count);
    for (std::uint64_t i = 0; i < block_count; ++i) {
        const std::size_t at = in.offset();
        PdxBlock b;
        b.d = store.d;
        b.m = in.get<std::uint64_t>("block m");
        b.m_padded = in.get<std::uint64_t>("block m_padded");
        const auto meta = in.get<std::uint32_t>("block metadata index");
        in.get<std::uint32_t>("block reserved");
        if (b.m == 0 || b.m > b.m_padded) in.fail("invalid block size", at);
        if (b.m_padded > in.remaining() / (4 * store.d)) in.fail("block larger than file", at);
        if (meta != kNoMetadata) {
            if (meta >= table.size()) in.fail("metadata index out of range", at);
            b.metadata = table[meta];
        }
        b.ids.resize(b.m);
        in.get(std::span<VectorId>(b.ids), "block ids");
        b.data.resize(store.d * b.m_padded);
        in.get(std::span<float>(b.data), "block data");
        total += b.m;
        store.blocks.push_back(std::move(b));
    }
    if (total != store.n)
        in.fail("block sizes sum to " + std::to_string(total) + ", header says n=" + std::to_string(store.n),
                in.offset());

    if (flags & kHasTransform) {
        if (store.d * store.d > in.remaining() / 4) in.fail("truncated transform", in.offset());
        RowMatrixXf rows(static_cast<Eigen::Index>(store.d), static_cast<Eigen::Index>(store.d));
        in.get(std::span<float>(rows.data(), static_cast<std::size_t>(rows.size())), "transform");
        store.transform = OrthogonalTransform{store.d, seed, rows};
    }
    if (flags & kHasIvf) {
        const std::size_t at = in.offset();
        IvfSection ivf;
        ivf.nlist = in.get<std::uint64_t>("nlist");
        ivf.training_seed = in.get<std::uint64_t>("training seed");
        if (ivf.nlist == 0 || ivf.nlist > in.remaining() / (4 * store.d)) in.fail("invalid nlist", at);
        ivf.centroids.resize(ivf.nlist * store.d);
        in.get(std::span<float>(ivf.centroids), "centroids");
        for (std::size_t c = 0; c < ivf.nlist; ++c) {
            ivf.bucket_first.push_back(in.get<std::uint64_t>("bucket offset"));
            ivf.bucket_count.push_back(in.get<std::uint64_t>("bucket block count"));
            if (ivf.bucket_first.back() + ivf.bucket_count.back() > store.blocks.size())
                in.fail("bucket refers past the last block", in.offset());
        }
        store.ivf = std::move(ivf);
    }
    if (!in.done()) in.fail("trailing bytes", in.offset());
    return store;
}

}  // namespace pdx
