// pdxbench: dataset generation, conversion, index building, ground truth and
// query benchmarking. Reports are written as one JSON object per line.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>

#include "pdx/bench.hpp"
#include "pdx/index.hpp"
#include "pdx/io.hpp"

namespace fs = std::filesystem;
using namespace pdx;

namespace {

bool is_pdx(const fs::path& p) { return p.extension() == ".pdx"; }

// Lines go to --out when given (appending), otherwise stdout.
class LineSink {
public:
    explicit LineSink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::app);
            if (!file_) throw IoError("cannot open " + path + " for writing");
        }
    }
    void write(const std::string& line) {
        std::ostream& os = file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout;
        os << line << '\n';
        os.flush();
    }

private:
    std::ofstream file_;
};

struct SearchOptions {
    std::string dataset;
    std::string queries;
    std::string ground_truth;
    std::string out;
    std::string traces;
    std::string metric = "l2";
    std::vector<std::string> pruners{"none"};
    std::string criteria = "dmeans";
    std::size_t k = 10;
    std::vector<std::size_t> nprobe;
    std::vector<float> selection_fraction{kDefaultSelectionFraction};
    float epsilon0 = kDefaultEpsilon0;
    std::size_t partition_size = kDefaultPartitionSize;
    std::uint64_t seed = 42;
    std::size_t zone_width = 0;
    std::string label;
};

// A searchable index loaded from .fvecs (flat, built in memory) or .pdx.
struct Loaded {
    std::variant<FlatPartitioning, IvfIndex> index;
    std::size_t n = 0;
    std::size_t d = 0;

    bool has_transform() const {
        return std::visit([](const auto& i) { return i.transform.has_value(); }, index);
    }
};

Loaded load_index(const SearchOptions& opt, bool want_rotation) {
    if (is_pdx(opt.dataset)) {
        const auto store = read_pdx(opt.dataset);
        if (store.ivf) {
            auto ivf = ivf_from_store(store);
            return {std::move(ivf), store.n, store.d};
        }
        return {flat_from_store(store), store.n, store.d};
    }
    const auto data = read_fvecs(opt.dataset);
    std::optional<OrthogonalTransform> t;
    if (want_rotation) t = generate_orthogonal(data.dim(), opt.seed);
    return {flat_build(data, opt.partition_size, std::move(t)), data.size(), data.dim()};
}

// Ground truth from --ground-truth (.ivecs) or brute force over the dataset.
GroundTruth load_ground_truth(const SearchOptions& opt, const Loaded& loaded, const VectorCollection& queries,
                              Metric metric) {
    GroundTruth truth;
    truth.k = opt.k;
    truth.metric = metric;
    if (!opt.ground_truth.empty()) {
        const auto rows = read_ivecs(opt.ground_truth);
        if (rows.size() != queries.size())
            throw std::invalid_argument(opt.ground_truth + ": has " + std::to_string(rows.size()) +
                                        " rows for " + std::to_string(queries.size()) + " queries");
        for (const auto& r : rows) {
            if (r.size() < opt.k)
                throw std::invalid_argument(opt.ground_truth + ": rows hold " + std::to_string(r.size()) +
                                            " ids, fewer than k=" + std::to_string(opt.k));
            truth.ids.emplace_back(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(opt.k));
        }
        return truth;
    }
    // Rotated stores keep no unrotated copy; distances survive the rotation,
    // so rank the rotated data against rotated queries.
    VectorCollection data = std::visit(
        [](const auto& i) {
            if constexpr (std::is_same_v<std::decay_t<decltype(i)>, IvfIndex>) {
                std::vector<PdxBlock> all;
                for (const auto& chain : i.buckets) all.insert(all.end(), chain.begin(), chain.end());
                return from_pdx(all);
            } else {
                return from_pdx(i.partitions);
            }
        },
        loaded.index);
    const auto* t = std::visit([](const auto& i) { return i.transform ? &*i.transform : nullptr; }, loaded.index);
    if (t == nullptr && !is_pdx(opt.dataset)) data = read_fvecs(opt.dataset);
    const auto q = t ? apply_transform(*t, queries) : queries;
    return compute_ground_truth(data, q, opt.k, metric);
}

std::string trace_line(const std::string& label, std::size_t query, const SearchTrace& trace) {
    nlohmann::ordered_json j;
    j["label"] = label;
    j["query"] = query;
    j["pruning_power"] = trace.pruning_power();
    j["values_total"] = trace.values_total;
    j["values_touched"] = trace.values_touched;
    auto& blocks = j["blocks"] = nlohmann::json::array();
    for (const auto& b : trace.blocks)
        blocks.push_back({{"block", b.block_index},
                          {"m", b.m},
                          {"step_ends", b.step_ends},
                          {"survivors", b.survivors},
                          {"prune_phase_step", b.prune_phase_step}});
    return j.dump();
}

int run_search(const SearchOptions& opt, bool sweep) {
    const Metric metric = parse_metric(opt.metric);
    std::vector<PrunerKind> pruners;
    for (const auto& p : opt.pruners) pruners.push_back(parse_pruner(p));
    const bool any_ads = std::find(pruners.begin(), pruners.end(), PrunerKind::Ads) != pruners.end();

    const auto loaded = load_index(opt, any_ads);
    if (any_ads && !loaded.has_transform())
        throw std::invalid_argument(opt.dataset + ": --pruner ads needs a rotated store (build it with --pruner ads)");
    const auto queries = read_fvecs(opt.queries);
    if (queries.dim() != loaded.d)
        throw std::invalid_argument(opt.queries + ": queries have d=" + std::to_string(queries.dim()) + " but " +
                                    opt.dataset + " has d=" + std::to_string(loaded.d));
    const auto truth = load_ground_truth(opt, loaded, queries, metric);

    const bool is_ivf = std::holds_alternative<IvfIndex>(loaded.index);
    std::vector<std::size_t> nprobes = opt.nprobe;
    if (is_ivf) {
        const std::size_t nlist = std::get<IvfIndex>(loaded.index).nlist;
        if (nprobes.empty()) {
            if (sweep)
                for (std::size_t p = 1;; p = std::min(2 * p, nlist)) {
                    nprobes.push_back(p);
                    if (p == nlist) break;
                }
            else
                nprobes.push_back(nlist);
        }
    } else {
        nprobes = {0};
    }

    LineSink sink(opt.out);
    std::optional<LineSink> trace_sink;
    if (!opt.traces.empty()) trace_sink.emplace(opt.traces);

    for (const auto pruner : pruners) {
        for (const float fraction : opt.selection_fraction) {
            for (const std::size_t nprobe : nprobes) {
                SearchParams params;
                params.k = opt.k;
                params.metric = metric;
                params.pruner = pruner;
                params.selection_fraction = fraction;
                params.epsilon0 = opt.epsilon0;
                params.bond.criteria = parse_dimension_order(opt.criteria);
                params.bond.zone_width = opt.zone_width;
                params.validate();

                RunConfig config;
                config.index = is_ivf ? "ivf" : "flat";
                config.metric = metric;
                config.pruner = pruner;
                config.criteria = params.bond.criteria;
                config.k = opt.k;
                config.nprobe = nprobe;
                config.selection_fraction = fraction;
                config.epsilon0 = opt.epsilon0;
                config.n = loaded.n;
                config.d = loaded.d;
                config.keep_traces = trace_sink.has_value();
                config.label = opt.label.empty() ? std::string(to_string(pruner)) : opt.label;

                const QueryFn fn = [&](std::span<const float> q, const SearchObservers& obs) {
                    if (is_ivf) return ivf_search(std::get<IvfIndex>(loaded.index), q, params, nprobe, obs);
                    return exact_search(std::get<FlatPartitioning>(loaded.index), q, params, obs);
                };
                const auto report = run_experiment(fn, queries, truth, config);
                sink.write(report.to_json_line());
                if (trace_sink)
                    for (std::size_t qi = 0; qi < report.traces.size(); ++qi)
                        trace_sink->write(trace_line(config.label, qi, report.traces[qi]));
            }
        }
    }
    return 0;
}

void add_search_flags(CLI::App* cmd, SearchOptions& opt, bool sweep) {
    cmd->add_option("--dataset", opt.dataset, "Base vectors (.fvecs) or a store (.pdx)")->required();
    cmd->add_option("--queries", opt.queries, "Query vectors (.fvecs)")->required();
    cmd->add_option("--ground-truth", opt.ground_truth, "Neighbour ids (.ivecs); computed when absent");
    cmd->add_option("--metric", opt.metric)->check(CLI::IsMember({"l2", "l1", "ip"}));
    cmd->add_option("--k", opt.k)->check(CLI::PositiveNumber);
    auto* pruner = cmd->add_option("--pruner", opt.pruners)->check(CLI::IsMember({"none", "ads", "bond"}));
    cmd->add_option("--criteria", opt.criteria)->check(CLI::IsMember({"sequential", "decreasing", "dmeans", "zones"}));
    cmd->add_option("--zone-width", opt.zone_width, "Zone width for --criteria zones (0: default)");
    cmd->add_option("--epsilon0", opt.epsilon0);
    auto* frac = cmd->add_option("--selection-fraction", opt.selection_fraction)->check(CLI::Range(0.0f, 1.0f));
    auto* nprobe = cmd->add_option("--nprobe", opt.nprobe, "Buckets to probe (IVF stores; default all)");
    cmd->add_option("--partition-size", opt.partition_size, "Flat partition size when --dataset is .fvecs");
    cmd->add_option("--seed", opt.seed, "Rotation seed when --dataset is .fvecs and --pruner ads");
    cmd->add_option("--out", opt.out, "Append report lines here instead of stdout");
    cmd->add_option("--traces", opt.traces, "Append per-query pruning traces (JSON lines) here");
    cmd->add_option("--label", opt.label);
    if (!sweep) {
        pruner->expected(1);
        frac->expected(1);
        nprobe->expected(0, 1);
    } else {
        pruner->expected(1, -1);
        frac->expected(1, -1);
        nprobe->expected(0, -1);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PDX vector search benchmark"};
    app.require_subcommand(1);

    // gen
    SyntheticSpec spec;
    std::string distribution = "normal", gen_out, gen_queries;
    std::size_t num_queries = 0;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset (.fvecs)");
    gen->add_option("--n", spec.n, "Base vectors")->required()->check(CLI::PositiveNumber);
    gen->add_option("--d", spec.d, "Dimensionality")->required()->check(CLI::PositiveNumber);
    gen->add_option("--distribution", distribution)->check(CLI::IsMember({"normal", "skewed", "clustered"}));
    gen->add_option("--clusters", spec.clusters)->check(CLI::PositiveNumber);
    gen->add_option("--cluster-spread", spec.cluster_spread);
    gen->add_option("--seed", spec.seed);
    gen->add_option("--num-queries", num_queries, "Extra vectors drawn from the same distribution as queries");
    gen->add_option("--queries", gen_queries, "Where to write the queries (.fvecs)");
    gen->add_option("--out", gen_out)->required();

    // convert
    std::string conv_in, conv_out;
    std::size_t conv_block = kDefaultBlockSize, conv_partition = 0;
    std::string conv_pruner = "none";
    std::uint64_t conv_seed = 42;
    auto* convert = app.add_subcommand("convert", "Convert between .fvecs and .pdx");
    convert->add_option("--dataset", conv_in)->required();
    convert->add_option("--out", conv_out)->required();
    convert->add_option("--block-size", conv_block)->check(CLI::PositiveNumber);
    convert->add_option("--partition-size", conv_partition, "Write flat partitions of this size (overrides block size)");
    convert->add_option("--pruner", conv_pruner, "ads stores a rotated collection")
        ->check(CLI::IsMember({"none", "ads", "bond"}));
    convert->add_option("--seed", conv_seed, "Rotation seed");

    // build-ivf
    std::string ivf_in, ivf_out, ivf_pruner = "none";
    IvfBuildOptions ivf_opt;
    std::uint64_t rotation_seed = 7;
    auto* build = app.add_subcommand("build-ivf", "Cluster a dataset into an IVF store (.pdx)");
    build->add_option("--dataset", ivf_in)->required();
    build->add_option("--out", ivf_out)->required();
    build->add_option("--nlist", ivf_opt.nlist, "Buckets (0: round(sqrt(n)))");
    build->add_option("--seed", ivf_opt.seed, "k-means seed");
    build->add_option("--block-size", ivf_opt.block_size)->check(CLI::PositiveNumber);
    build->add_option("--max-iters", ivf_opt.max_iters);
    build->add_option("--pruner", ivf_pruner, "ads rotates the collection before clustering")
        ->check(CLI::IsMember({"none", "ads", "bond"}));
    build->add_option("--rotation-seed", rotation_seed);

    // ground-truth
    std::string gt_data, gt_queries, gt_out, gt_metric = "l2";
    std::size_t gt_k = 100;
    auto* gt = app.add_subcommand("ground-truth", "Exact neighbours by brute force (.ivecs)");
    gt->add_option("--dataset", gt_data)->required();
    gt->add_option("--queries", gt_queries)->required();
    gt->add_option("--out", gt_out)->required();
    gt->add_option("--k", gt_k)->check(CLI::PositiveNumber);
    gt->add_option("--metric", gt_metric)->check(CLI::IsMember({"l2", "l1", "ip"}));

    SearchOptions query_opt, sweep_opt;
    auto* query = app.add_subcommand("query", "Run one search configuration and report it");
    add_search_flags(query, query_opt, false);
    auto* sweep = app.add_subcommand("sweep", "Report every combination of --pruner, --selection-fraction, --nprobe");
    add_search_flags(sweep, sweep_opt, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            spec.distribution = parse_distribution(distribution);
            const std::size_t base_n = spec.n;
            spec.n += num_queries;
            const auto data = gen_synthetic(spec);
            auto [base, queries] = split_queries(data.vectors, num_queries);
            write_fvecs(base, gen_out);
            if (num_queries > 0) {
                if (gen_queries.empty()) throw std::invalid_argument("--num-queries needs --queries");
                write_fvecs(queries, gen_queries);
            }
            nlohmann::ordered_json j{{"command", "gen"}, {"out", gen_out},         {"n", base_n},
                                     {"d", spec.d},      {"queries", num_queries}, {"distribution", distribution}};
            std::cout << j.dump() << '\n';
        } else if (*convert) {
            if (is_pdx(conv_in)) {
                const auto store = read_pdx(conv_in);
                auto data = from_pdx(store.blocks);
                if (store.transform) {
                    // Undo the rotation: X = Y * Q.
                    const OrthogonalTransform inverse{store.d, store.transform->seed,
                                                      store.transform->matrix.transpose()};
                    data = apply_transform(inverse, data);
                }
                write_fvecs(data, conv_out);
            } else {
                const auto data = read_fvecs(conv_in);
                std::optional<OrthogonalTransform> t;
                if (conv_pruner == "ads") t = generate_orthogonal(data.dim(), conv_seed);
                if (conv_partition > 0 || t) {
                    write_pdx(make_store(flat_build(data, conv_partition > 0 ? conv_partition : conv_block, t)),
                              conv_out);
                } else {
                    write_pdx(make_store(data, conv_block), conv_out);
                }
            }
            std::cout << nlohmann::ordered_json{{"command", "convert"}, {"in", conv_in}, {"out", conv_out}}.dump()
                      << '\n';
        } else if (*build) {
            const auto data = read_fvecs(ivf_in);
            if (ivf_pruner == "ads") ivf_opt.transform = generate_orthogonal(data.dim(), rotation_seed);
            const auto index = ivf_build(data, ivf_opt);
            write_pdx(make_store(index), ivf_out);
            std::cout << nlohmann::ordered_json{{"command", "build-ivf"}, {"out", ivf_out}, {"n", data.size()},
                                                {"d", data.dim()},        {"nlist", index.nlist},
                                                {"rotated", index.transform.has_value()}}
                             .dump()
                      << '\n';
        } else if (*gt) {
            const auto data = read_fvecs(gt_data);
            const auto queries = read_fvecs(gt_queries);
            if (queries.dim() != data.dim())
                throw std::invalid_argument(gt_queries + ": queries have d=" + std::to_string(queries.dim()) +
                                            " but " + gt_data + " has d=" + std::to_string(data.dim()));
            const auto truth = compute_ground_truth(data, queries, std::min(gt_k, data.size()), parse_metric(gt_metric));
            std::vector<std::vector<std::int32_t>> rows;
            for (const auto& ids : truth.ids) rows.emplace_back(ids.begin(), ids.end());
            write_ivecs(rows, gt_out);
            std::cout << nlohmann::ordered_json{{"command", "ground-truth"}, {"out", gt_out}, {"k", truth.k}}.dump()
                      << '\n';
        } else if (*query) {
            return run_search(query_opt, false);
        } else if (*sweep) {
            return run_search(sweep_opt, true);
        }
    } catch (const std::exception& e) {
        std::cerr << "pdxbench: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
