#include "ohc/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <unordered_map>

#include <CLI11.hpp>

#include "ohc/codebook.hpp"
#include "ohc/encoder.hpp"
#include "ohc/io.hpp"
#include "ohc/loss.hpp"
#include "ohc/retrieval.hpp"
#include "ohc/rng.hpp"
#include "ohc/trainer.hpp"

namespace ohc::cli {

namespace {

struct GenCodebookArgs {
    int classes = 0;
    int bits = 0;
    std::string method;
    std::uint64_t seed = 0;
    int iterations = 1000;
    std::string out;
};

void run_gen_codebook(const GenCodebookArgs& a) {
    Codebook cb;
    const CodebookMethod method = codebook_method_from_string(a.method);
    if (method == CodebookMethod::hadamard) {
        cb = hadamard_codebook(a.classes, a.bits);
    } else if (method == CodebookMethod::bernoulli) {
        cb = bernoulli_codebook(a.classes, a.bits, a.seed);
    } else {
        cb = improve_codebook(bernoulli_codebook(a.classes, a.bits, a.seed),
                              a.iterations, a.seed);
        cb.seed = a.seed;
    }
    io::write_codebook(a.out, cb);
    std::cout << "codebook classes=" << cb.classes << " bits=" << cb.bits
              << " method=" << to_string(cb.method);
    if (cb.classes >= 2) {
        std::cout << " min_distance=" << min_pairwise_distance(cb);
    }
    std::cout << "\n";
}

struct MakeToyArgs {
    int classes = 0;
    int dim = 0;
    int per_class = 0;
    double spread = 1.0;
    double separation = 0.0;
    std::uint64_t seed = 0;
    bool multilabel = false;
    std::string out_data;
    std::string out_labels;
};

void run_make_toy(const MakeToyArgs& a) {
    const LabeledDataset data = make_gaussian_clusters(
            a.classes, a.dim, a.per_class, a.spread, a.separation, a.seed, a.multilabel);
    io::write_descriptors(a.out_data, data.descriptors);
    io::LabelFile labels;
    labels.labels = data.labels;
    labels.ids.resize(data.labels.size());
    for (std::size_t i = 0; i < labels.ids.size(); ++i) {
        labels.ids[i] = static_cast<std::uint64_t>(i);
    }
    io::write_labels(a.out_labels, labels);
    std::cout << "toy dataset rows=" << data.descriptors.rows()
              << " dim=" << data.descriptors.cols() << " classes=" << data.classes
              << "\n";
}

struct TrainArgs {
    std::string data;
    std::string labels;
    std::string codebook;
    std::string config;
    std::string out_model;
    std::string out_history;
    bool quiet = false;
};

void run_train(const TrainArgs& a) {
    const TrainConfig cfg = io::read_train_config(a.config);
    const Codebook cb = io::read_codebook(a.codebook);
    LabeledDataset data;
    data.descriptors = io::read_descriptors(a.data);
    const io::LabelFile labels = io::read_labels(a.labels);
    data.labels = labels.labels;  // label line i annotates descriptor row i
    data.classes = cb.classes;

    const auto log_epoch = [&](int epoch, const EpochStats& stats) {
        if (a.quiet) return;
        std::cout << "epoch " << (epoch + 1) << "/" << cfg.epochs
                  << " loss=" << stats.mean_loss
                  << " max_bit_balance=" << stats.max_abs_bit_balance << "\n";
    };
    const TrainResult result = train(cfg, data, cb, log_epoch);
    io::write_model(a.out_model, result.params);
    if (!a.out_history.empty()) {
        io::write_history(a.out_history, result.history);
    }
}

struct EncodeArgs {
    std::string model;
    std::string data;
    std::string out_codes;
    std::string recalibrate_with;
    std::string out_continuous;
};

void run_encode(const EncodeArgs& a) {
    EncoderParams params = io::read_model(a.model);
    if (!a.recalibrate_with.empty()) {
        params = recalibrate_bn(params, io::read_descriptors(a.recalibrate_with));
    }
    const Eigen::MatrixXd data = io::read_descriptors(a.data);
    const std::vector<PackedCode> codes = encode_binary(params, data);

    std::vector<IndexEntry> entries(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        entries[i] = {static_cast<std::uint64_t>(i), codes[i]};
    }
    io::write_index(a.out_codes, build_index(std::move(entries), params.arch.bits));

    if (!a.out_continuous.empty()) {
        io::write_descriptors(a.out_continuous, encode_continuous(params, data));
    }
    std::cout << "encoded rows=" << data.rows() << " bits=" << params.arch.bits << "\n";
}

void run_index(const std::string& codes_path, const std::string& out_path) {
    io::write_index(out_path, io::read_index(codes_path));
}

struct QueryArgs {
    std::string index;
    std::string codes;
    std::size_t top = 0;
    std::string out;
};

void run_query(const QueryArgs& a) {
    const HammingIndex index = io::read_index(a.index);
    const HammingIndex queries = io::read_index(a.codes);
    io::QueryResults results;
    for (const IndexEntry& query : queries.entries) {
        results.query_ids.push_back(query.id);
        results.hits.push_back(query_top_r(index, query.code, a.top));
    }
    io::write_query_results(a.out, results);
}

struct EvaluateArgs {
    std::string index;
    std::string query_codes;
    std::string db_labels;
    std::string query_labels;
    std::size_t top_r = 0;
    std::string out_report;
};

std::unordered_map<std::uint64_t, LabelSet> label_map(const io::LabelFile& file) {
    std::unordered_map<std::uint64_t, LabelSet> map;
    map.reserve(file.ids.size());
    for (std::size_t i = 0; i < file.ids.size(); ++i) {
        map.emplace(file.ids[i], file.labels[i]);
    }
    return map;
}

void run_evaluate(const EvaluateArgs& a) {
    const HammingIndex index = io::read_index(a.index);
    const HammingIndex queries = io::read_index(a.query_codes);
    const auto db_labels = label_map(io::read_labels(a.db_labels));
    const auto query_labels = label_map(io::read_labels(a.query_labels));

    std::vector<const LabelSet*> entry_labels;
    entry_labels.reserve(index.entries.size());
    for (const IndexEntry& entry : index.entries) {
        const auto it = db_labels.find(entry.id);
        if (it == db_labels.end()) {
            throw std::runtime_error("evaluate: database id " +
                                     std::to_string(entry.id) + " has no label entry");
        }
        entry_labels.push_back(&it->second);
    }

    std::vector<std::vector<bool>> rankings;
    std::vector<std::size_t> totals;
    rankings.reserve(queries.entries.size());
    totals.reserve(queries.entries.size());
    for (const IndexEntry& query : queries.entries) {
        const auto it = query_labels.find(query.id);
        if (it == query_labels.end()) {
            throw std::runtime_error("evaluate: query id " + std::to_string(query.id) +
                                     " has no label entry");
        }
        const LabelSet& want = it->second;

        std::size_t total = 0;
        for (const LabelSet* have : entry_labels) {
            if (label_sets_intersect(want, *have)) ++total;
        }
        totals.push_back(total);

        const std::vector<QueryHit> hits = query_top_r(index, query.code, a.top_r);
        std::vector<bool> flags(hits.size());
        for (std::size_t k = 0; k < hits.size(); ++k) {
            flags[k] = label_sets_intersect(want, db_labels.at(hits[k].id));
        }
        rankings.push_back(std::move(flags));
    }

    EvalReport report;
    report.map_at_r = map_at_r(rankings, totals, a.top_r);
    report.top_r = a.top_r;
    report.queries_skipped = static_cast<std::size_t>(
            std::count(totals.begin(), totals.end(), std::size_t{0}));
    report.queries_evaluated = totals.size() - report.queries_skipped;
    io::write_report(a.out_report, report);
    if (report.map_at_r.has_value()) {
        std::cout << "map_at_r=" << *report.map_at_r << " r=" << a.top_r
                  << " queries=" << report.queries_evaluated << "\n";
    } else {
        std::cout << "map_at_r undefined: every query had zero relevant items\n";
    }
}

struct AnalyzeArgs {
    std::string codes;
    std::string continuous;
    std::string labels;
    int bins = 0;  // 0: one bin per distance value
    std::string out_report;
    std::string out_hist;
};

void run_analyze(const AnalyzeArgs& a) {
    const HammingIndex coded = io::read_index(a.codes);
    const auto by_id = label_map(io::read_labels(a.labels));

    std::vector<PackedCode> codes;
    LabelSets labels;
    codes.reserve(coded.entries.size());
    labels.reserve(coded.entries.size());
    int classes = 0;
    for (const IndexEntry& entry : coded.entries) {
        const auto it = by_id.find(entry.id);
        if (it == by_id.end()) {
            throw std::runtime_error("analyze: id " + std::to_string(entry.id) +
                                     " has no label entry");
        }
        codes.push_back(entry.code);
        labels.push_back(it->second);
        classes = std::max(classes, it->second.back() + 1);
    }
    if (codes.empty()) {
        throw std::runtime_error("analyze: no codes to analyze");
    }

    EvalReport report;
    report.separability = separability(codes, labels);
    report.orthogonality = orthogonality_score(codes, labels, classes);
    report.bit_balance = bit_balance(codes);
    const int bins = a.bins == 0 ? coded.bits + 1 : a.bins;
    report.histograms = distance_histograms(codes, labels, bins);
    if (!a.continuous.empty()) {
        const Eigen::MatrixXd continuous = io::read_descriptors(a.continuous);
        report.mean_quantization_angle_deg =
                mean_quantization_angle_deg(continuous, codes);
    }

    io::write_report(a.out_report, report);
    if (!a.out_hist.empty()) {
        io::write_histograms_csv(a.out_hist, *report.histograms);
    }
    std::cout << "separability=" << *report.separability
              << " orthogonality=" << *report.orthogonality << "\n";
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Deep hashing toolkit: binary class targets, a trainable "
                 "encoder, and Hamming retrieval"};
    app.require_subcommand(1);

    GenCodebookArgs gen;
    CLI::App* gen_cmd = app.add_subcommand(
            "gen-codebook", "Generate a binary class-target codebook");
    gen_cmd->add_option("--classes", gen.classes, "Number of classes")->required();
    gen_cmd->add_option("--bits", gen.bits, "Code length in bits")->required();
    gen_cmd->add_option("--method", gen.method, "hadamard, bernoulli, or heuristic")
            ->required()
            ->check(CLI::IsMember({"hadamard", "bernoulli", "heuristic"}));
    gen_cmd->add_option("--seed", gen.seed, "Seed for sampled methods");
    gen_cmd->add_option("--iterations", gen.iterations,
                        "Refinement iterations (heuristic only)");
    gen_cmd->add_option("--out", gen.out, "Output codebook file")->required();

    MakeToyArgs toy;
    CLI::App* toy_cmd = app.add_subcommand(
            "make-toy", "Generate a Gaussian-cluster toy dataset");
    toy_cmd->add_option("--classes", toy.classes, "Number of clusters")->required();
    toy_cmd->add_option("--dim", toy.dim, "Descriptor dimension")->required();
    toy_cmd->add_option("--per-class", toy.per_class, "Samples per cluster")->required();
    toy_cmd->add_option("--spread", toy.spread, "Within-cluster standard deviation");
    toy_cmd->add_option("--separation", toy.separation, "Center sphere radius")
            ->required();
    toy_cmd->add_option("--seed", toy.seed, "Dataset seed");
    toy_cmd->add_flag("--multilabel", toy.multilabel,
                      "Label each point with its two nearest centers");
    toy_cmd->add_option("--out-data", toy.out_data, "Output descriptor file")->required();
    toy_cmd->add_option("--out-labels", toy.out_labels, "Output label file")->required();

    TrainArgs tr;
    CLI::App* train_cmd = app.add_subcommand("train", "Train an encoder");
    train_cmd->add_option("--data", tr.data, "Descriptor file")->required();
    train_cmd->add_option("--labels", tr.labels, "Label file (line i = row i)")
            ->required();
    train_cmd->add_option("--codebook", tr.codebook, "Codebook file")->required();
    train_cmd->add_option("--config", tr.config, "Training config JSON")->required();
    train_cmd->add_option("--out-model", tr.out_model, "Output model file")->required();
    train_cmd->add_option("--out-history", tr.out_history, "Output history JSON");
    train_cmd->add_flag("--quiet", tr.quiet, "Suppress per-epoch logs");

    EncodeArgs enc;
    CLI::App* enc_cmd = app.add_subcommand("encode", "Encode descriptors to codes");
    enc_cmd->add_option("--model", enc.model, "Model file")->required();
    enc_cmd->add_option("--data", enc.data, "Descriptor file")->required();
    enc_cmd->add_option("--out-codes", enc.out_codes, "Output code file")->required();
    enc_cmd->add_option("--recalibrate-with", enc.recalibrate_with,
                        "Recompute BN statistics from this descriptor file first");
    enc_cmd->add_option("--out-continuous", enc.out_continuous,
                        "Also write pre-binarization codes");

    std::string index_codes, index_out;
    CLI::App* index_cmd = app.add_subcommand("index", "Build a retrieval index");
    index_cmd->add_option("--codes", index_codes, "Code file")->required();
    index_cmd->add_option("--out", index_out, "Output index file")->required();

    QueryArgs qu;
    CLI::App* query_cmd = app.add_subcommand("query", "Rank index entries per query");
    query_cmd->add_option("--index", qu.index, "Index file")->required();
    query_cmd->add_option("--codes", qu.codes, "Query code file")->required();
    query_cmd->add_option("--top", qu.top, "Results per query")->required();
    query_cmd->add_option("--out", qu.out, "Output CSV")->required();

    EvaluateArgs ev;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "Retrieval quality report");
    eval_cmd->add_option("--index", ev.index, "Index file")->required();
    eval_cmd->add_option("--query-codes", ev.query_codes, "Query code file")->required();
    eval_cmd->add_option("--db-labels", ev.db_labels, "Database label file")->required();
    eval_cmd->add_option("--query-labels", ev.query_labels, "Query label file")
            ->required();
    eval_cmd->add_option("--R,--top-r", ev.top_r, "Ranking depth R")->required();
    eval_cmd->add_option("--out-report", ev.out_report, "Output report JSON")
            ->required();

    AnalyzeArgs an;
    CLI::App* an_cmd = app.add_subcommand("analyze", "Code-quality analysis report");
    an_cmd->add_option("--codes", an.codes, "Code file")->required();
    an_cmd->add_option("--continuous", an.continuous,
                       "Pre-binarization codes (enables quantization angle)");
    an_cmd->add_option("--labels", an.labels, "Label file")->required();
    an_cmd->add_option("--bins", an.bins, "Histogram bins (default: one per distance)");
    an_cmd->add_option("--out-report", an.out_report, "Output report JSON")->required();
    an_cmd->add_option("--out-hist", an.out_hist, "Output histogram CSV");

    std::string rt_in, rt_out;
    CLI::App* rt_cmd = app.add_subcommand(
            "roundtrip", "Read a toolkit file and rewrite it byte-identically");
    rt_cmd->add_option("--in", rt_in, "Input file")->required();
    rt_cmd->add_option("--out", rt_out, "Output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (gen_cmd->parsed()) {
            run_gen_codebook(gen);
        } else if (toy_cmd->parsed()) {
            run_make_toy(toy);
        } else if (train_cmd->parsed()) {
            run_train(tr);
        } else if (enc_cmd->parsed()) {
            run_encode(enc);
        } else if (index_cmd->parsed()) {
            run_index(index_codes, index_out);
        } else if (query_cmd->parsed()) {
            run_query(qu);
        } else if (eval_cmd->parsed()) {
            run_evaluate(ev);
        } else if (an_cmd->parsed()) {
            run_analyze(an);
        } else if (rt_cmd->parsed()) {
            if (!io::roundtrip_check(rt_in, rt_out)) {
                std::cerr << "roundtrip mismatch: " << rt_in << " vs " << rt_out << "\n";
                return 1;
            }
            std::cout << "roundtrip ok\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("ohc");
    for (const std::string& arg : args) {
        argv.push_back(arg.c_str());
    }
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace ohc::cli
