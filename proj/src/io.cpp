#include "ohc/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace ohc::io {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (!in.good() && !in.eof()) {
        throw std::runtime_error("read failed: " + path);
    }
    return std::move(buffer).str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) {
        throw std::runtime_error("write failed: " + path);
    }
}

void append_u64_le(std::string& out, std::uint64_t value) {
    for (int byte = 0; byte < 8; ++byte) {
        out.push_back(static_cast<char>((value >> (8 * byte)) & 0xff));
    }
}

std::uint64_t read_u64_le(const std::string& bytes, std::size_t offset) {
    std::uint64_t value = 0;
    for (int byte = 0; byte < 8; ++byte) {
        value |= static_cast<std::uint64_t>(
                         static_cast<unsigned char>(bytes[offset + byte]))
                 << (8 * byte);
    }
    return value;
}

void append_f32_le(std::string& out, float value) {
    const auto raw = std::bit_cast<std::uint32_t>(value);
    for (int byte = 0; byte < 4; ++byte) {
        out.push_back(static_cast<char>((raw >> (8 * byte)) & 0xff));
    }
}

float read_f32_le(const std::string& bytes, std::size_t offset) {
    std::uint32_t raw = 0;
    for (int byte = 0; byte < 4; ++byte) {
        raw |= static_cast<std::uint32_t>(
                       static_cast<unsigned char>(bytes[offset + byte]))
               << (8 * byte);
    }
    return std::bit_cast<float>(raw);
}

std::string format_double(double value) {
    char buffer[32];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc()) {
        throw std::runtime_error("double formatting failed");
    }
    return {buffer, end};
}

// Splits a headered file into its one-line JSON header and binary payload.
std::pair<json, std::string_view> split_header(const std::string& bytes,
                                               const std::string& path) {
    const std::size_t newline = bytes.find('\n');
    if (newline == std::string::npos) {
        throw std::runtime_error(path + ": missing header line");
    }
    json header;
    try {
        header = json::parse(bytes.substr(0, newline));
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": bad header: " + e.what());
    }
    return {std::move(header), std::string_view(bytes).substr(newline + 1)};
}

void require_magic(const json& header, const std::string& magic, const std::string& path) {
    if (!header.contains("magic") || header["magic"] != magic) {
        throw std::runtime_error(path + ": expected magic \"" + magic + "\"");
    }
}

json to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(j.size());
    Eigen::Index i = 0;
    for (const auto& x : j) v(i++) = x.get<double>();
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return {};
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index r = 0;
    for (const auto& row : j) {
        if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw std::runtime_error("ragged matrix in JSON");
        }
        Eigen::Index c = 0;
        for (const auto& x : row) m(r, c++) = x.get<double>();
        ++r;
    }
    return m;
}

}  // namespace

void write_descriptors(const std::string& path, const Eigen::MatrixXd& data) {
    json header;
    header["magic"] = "OHDS1";
    header["n"] = data.rows();
    header["dim"] = data.cols();
    header["dtype"] = "f32";
    header["order"] = "row-major";

    std::string bytes = header.dump();
    bytes.push_back('\n');
    bytes.reserve(bytes.size() + 4 * static_cast<std::size_t>(data.size()));
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.cols(); ++c) {
            append_f32_le(bytes, static_cast<float>(data(r, c)));
        }
    }
    write_file(path, bytes);
}

Eigen::MatrixXd read_descriptors(const std::string& path) {
    const std::string bytes = read_file(path);
    const auto [header, payload] = split_header(bytes, path);
    require_magic(header, "OHDS1", path);
    const auto n = header.at("n").get<std::int64_t>();
    const auto dim = header.at("dim").get<std::int64_t>();
    if (n < 0 || dim < 1) {
        throw std::runtime_error(path + ": bad dimensions");
    }
    if (header.at("dtype") != "f32" || header.at("order") != "row-major") {
        throw std::runtime_error(path + ": unsupported dtype or order");
    }
    if (payload.size() != static_cast<std::size_t>(4 * n * dim)) {
        throw std::runtime_error(path + ": payload size does not match header");
    }

    Eigen::MatrixXd data(n, dim);
    const std::size_t base = bytes.size() - payload.size();
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            data(r, c) = static_cast<double>(read_f32_le(
                    bytes, base + 4 * static_cast<std::size_t>(r * dim + c)));
        }
    }
    return data;
}

void write_labels(const std::string& path, const LabelFile& file) {
    if (file.ids.size() != file.labels.size()) {
        throw std::invalid_argument("labels: one id per label set required");
    }
    std::string bytes;
    for (std::size_t i = 0; i < file.ids.size(); ++i) {
        bytes += std::to_string(file.ids[i]);
        bytes.push_back(',');
        const LabelSet& set = file.labels[i];
        for (std::size_t k = 0; k < set.size(); ++k) {
            if (k > 0) bytes.push_back(';');
            bytes += std::to_string(set[k]);
        }
        bytes.push_back('\n');
    }
    write_file(path, bytes);
}

LabelFile read_labels(const std::string& path) {
    const std::string bytes = read_file(path);
    LabelFile file;
    std::unordered_set<std::uint64_t> seen;
    std::istringstream lines(bytes);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fail = [&](const std::string& why) -> std::runtime_error {
            return std::runtime_error(path + ":" + std::to_string(line_no) + ": " + why);
        };
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) throw fail("expected id,classes");

        std::uint64_t id = 0;
        auto [id_end, id_ec] = std::from_chars(line.data(), line.data() + comma, id);
        if (id_ec != std::errc() || id_end != line.data() + comma) {
            throw fail("bad id");
        }
        if (!seen.insert(id).second) throw fail("duplicate id");

        LabelSet set;
        const char* cursor = line.data() + comma + 1;
        const char* line_end = line.data() + line.size();
        while (cursor < line_end) {
            int cls = 0;
            auto [cls_end, cls_ec] = std::from_chars(cursor, line_end, cls);
            if (cls_ec != std::errc() || cls < 0) throw fail("bad class id");
            set.push_back(cls);
            cursor = cls_end;
            if (cursor < line_end) {
                if (*cursor != ';') throw fail("expected ';' between classes");
                ++cursor;
            }
        }
        if (set.empty()) throw fail("empty class list");

        file.ids.push_back(id);
        file.labels.push_back(normalize_label_set(std::move(set)));
    }
    return file;
}

void write_codebook(const std::string& path, const Codebook& codebook) {
    codebook.validate();
    json header;
    header["magic"] = "OHCB1";
    header["classes"] = codebook.classes;
    header["bits"] = codebook.bits;
    header["method"] = to_string(codebook.method);
    if (codebook.seed.has_value()) {
        header["seed"] = *codebook.seed;
    }

    std::string bytes = header.dump();
    bytes.push_back('\n');
    for (const PackedCode& code : codebook.packed_rows) {
        for (const std::uint64_t word : code.words) {
            append_u64_le(bytes, word);
        }
    }
    write_file(path, bytes);
}

Codebook read_codebook(const std::string& path) {
    const std::string bytes = read_file(path);
    const auto [header, payload] = split_header(bytes, path);
    require_magic(header, "OHCB1", path);

    Codebook codebook;
    codebook.classes = header.at("classes").get<int>();
    codebook.bits = header.at("bits").get<int>();
    codebook.method = codebook_method_from_string(header.at("method").get<std::string>());
    if (header.contains("seed")) {
        codebook.seed = header["seed"].get<std::uint64_t>();
    }
    if (codebook.classes < 1 || codebook.bits < 1) {
        throw std::runtime_error(path + ": bad dimensions");
    }

    const std::size_t words = static_cast<std::size_t>(words_for_bits(codebook.bits));
    const std::size_t expected =
            8 * words * static_cast<std::size_t>(codebook.classes);
    if (payload.size() != expected) {
        throw std::runtime_error(path + ": payload size does not match header");
    }

    const std::size_t base = bytes.size() - payload.size();
    codebook.rows.resize(static_cast<std::size_t>(codebook.classes) *
                         static_cast<std::size_t>(codebook.bits));
    for (int c = 0; c < codebook.classes; ++c) {
        PackedCode code;
        code.bits = codebook.bits;
        code.words.resize(words);
        for (std::size_t w = 0; w < words; ++w) {
            code.words[w] = read_u64_le(
                    bytes, base + 8 * (static_cast<std::size_t>(c) * words + w));
        }
        // Reject set bits beyond the advertised width.
        if (codebook.bits % 64 != 0 &&
            (code.words.back() >> (codebook.bits % 64)) != 0) {
            throw std::runtime_error(path + ": stray bits past code width");
        }
        const std::vector<std::int8_t> signs = unpack_code(code);
        std::copy(signs.begin(), signs.end(),
                  codebook.rows.begin() +
                          static_cast<std::ptrdiff_t>(c) * codebook.bits);
    }
    codebook.rebuild_packed();
    codebook.validate();
    return codebook;
}

void write_model(const std::string& path, const EncoderParams& params) {
    params.validate();
    json j;
    j["magic"] = "OHMD1";
    j["architecture"]["input_dim"] = params.arch.input_dim;
    j["architecture"]["hidden"] = params.arch.hidden;
    j["architecture"]["feature_dim"] = params.arch.feature_dim;
    j["architecture"]["bits"] = params.arch.bits;
    j["architecture"]["use_bn"] = params.arch.use_bn;
    json layers = json::array();
    for (const DenseLayer& layer : params.mlp) {
        json jl;
        jl["weight"] = to_json(layer.weight);
        jl["bias"] = to_json(layer.bias);
        layers.push_back(std::move(jl));
    }
    j["mlp"] = std::move(layers);
    j["latent_weight"] = to_json(params.latent_weight);
    j["bn"]["gamma"] = to_json(params.bn_gamma);
    j["bn"]["beta"] = to_json(params.bn_beta);
    j["bn"]["running_mean"] = to_json(params.bn_running_mean);
    j["bn"]["running_var"] = to_json(params.bn_running_var);
    j["bn"]["momentum"] = params.bn_momentum;
    j["bn"]["epsilon"] = params.bn_epsilon;
    write_file(path, j.dump(2) + "\n");
}

EncoderParams read_model(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": bad model JSON: " + e.what());
    }
    require_magic(j, "OHMD1", path);

    EncoderParams params;
    const json& arch = j.at("architecture");
    params.arch.input_dim = arch.at("input_dim").get<int>();
    params.arch.hidden = arch.at("hidden").get<std::vector<int>>();
    params.arch.feature_dim = arch.at("feature_dim").get<int>();
    params.arch.bits = arch.at("bits").get<int>();
    params.arch.use_bn = arch.at("use_bn").get<bool>();
    for (const json& jl : j.at("mlp")) {
        DenseLayer layer;
        layer.weight = matrix_from_json(jl.at("weight"));
        layer.bias = vector_from_json(jl.at("bias"));
        params.mlp.push_back(std::move(layer));
    }
    params.latent_weight = matrix_from_json(j.at("latent_weight"));
    const json& bn = j.at("bn");
    params.bn_gamma = vector_from_json(bn.at("gamma"));
    params.bn_beta = vector_from_json(bn.at("beta"));
    params.bn_running_mean = vector_from_json(bn.at("running_mean"));
    params.bn_running_var = vector_from_json(bn.at("running_var"));
    params.bn_momentum = bn.at("momentum").get<double>();
    params.bn_epsilon = bn.at("epsilon").get<double>();
    params.validate();
    return params;
}

void write_index(const std::string& path, const HammingIndex& index) {
    json header;
    header["magic"] = "OHIX1";
    header["bits"] = index.bits;
    header["count"] = index.entries.size();

    std::string bytes = header.dump();
    bytes.push_back('\n');
    for (const IndexEntry& entry : index.entries) {
        if (entry.code.bits != index.bits) {
            throw std::invalid_argument("write_index: entry width != index width");
        }
        append_u64_le(bytes, entry.id);
        for (const std::uint64_t word : entry.code.words) {
            append_u64_le(bytes, word);
        }
    }
    write_file(path, bytes);
}

HammingIndex read_index(const std::string& path) {
    const std::string bytes = read_file(path);
    const auto [header, payload] = split_header(bytes, path);
    require_magic(header, "OHIX1", path);
    const int bits = header.at("bits").get<int>();
    const auto count = header.at("count").get<std::uint64_t>();
    if (bits < 1) {
        throw std::runtime_error(path + ": bad bit count");
    }

    const std::size_t words = static_cast<std::size_t>(words_for_bits(bits));
    const std::size_t record = 8 * (1 + words);
    if (payload.size() != record * count) {
        throw std::runtime_error(path + ": payload size does not match header");
    }

    const std::size_t base = bytes.size() - payload.size();
    std::vector<IndexEntry> entries(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t offset = base + i * record;
        entries[i].id = read_u64_le(bytes, offset);
        entries[i].code.bits = bits;
        entries[i].code.words.resize(words);
        for (std::size_t w = 0; w < words; ++w) {
            entries[i].code.words[w] = read_u64_le(bytes, offset + 8 * (1 + w));
        }
        // Reject set bits beyond the advertised width.
        if (bits % 64 != 0 &&
            (entries[i].code.words.back() >> (bits % 64)) != 0) {
            throw std::runtime_error(path + ": stray bits past code width");
        }
    }
    return build_index(std::move(entries), bits);
}

TrainConfig read_train_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": bad config JSON: " + e.what());
    }

    TrainConfig cfg;
    const json& arch = j.at("architecture");
    cfg.arch.input_dim = arch.at("input_dim").get<int>();
    cfg.arch.hidden = arch.value("hidden", std::vector<int>{});
    cfg.arch.feature_dim = arch.at("feature_dim").get<int>();
    cfg.arch.bits = arch.at("bits").get<int>();
    cfg.arch.use_bn = arch.value("use_bn", true);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
    cfg.adam_epsilon = j.value("adam_epsilon", cfg.adam_epsilon);
    cfg.margin = j.value("margin", cfg.margin);
    cfg.margin_kind = margin_kind_from_string(j.value("margin_kind", "none"));
    cfg.validate();
    return cfg;
}

void write_train_config(const std::string& path, const TrainConfig& cfg) {
    cfg.validate();
    json j;
    j["architecture"]["input_dim"] = cfg.arch.input_dim;
    j["architecture"]["hidden"] = cfg.arch.hidden;
    j["architecture"]["feature_dim"] = cfg.arch.feature_dim;
    j["architecture"]["bits"] = cfg.arch.bits;
    j["architecture"]["use_bn"] = cfg.arch.use_bn;
    j["learning_rate"] = cfg.learning_rate;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["seed"] = cfg.seed;
    j["adam_beta1"] = cfg.adam_beta1;
    j["adam_beta2"] = cfg.adam_beta2;
    j["adam_epsilon"] = cfg.adam_epsilon;
    j["margin"] = cfg.margin;
    j["margin_kind"] = to_string(cfg.margin_kind);
    write_file(path, j.dump(2) + "\n");
}

void write_history(const std::string& path, const TrainHistory& history) {
    json j = json::array();
    for (std::size_t epoch = 0; epoch < history.size(); ++epoch) {
        json row;
        row["epoch"] = epoch;
        row["mean_loss"] = history[epoch].mean_loss;
        row["max_abs_bit_balance"] = history[epoch].max_abs_bit_balance;
        row["seconds"] = history[epoch].seconds;
        j.push_back(std::move(row));
    }
    write_file(path, j.dump(2) + "\n");
}

void write_report(const std::string& path, const EvalReport& report) {
    json j;
    j["conventions"]["ap_denominator"] = "min(total_relevant, r)";
    j["conventions"]["zero_relevant_queries"] = "skipped";
    j["conventions"]["relevance"] = "label sets intersect";
    if (report.map_at_r.has_value()) {
        j["map_at_r"] = *report.map_at_r;
        j["top_r"] = report.top_r;
        j["queries_evaluated"] = report.queries_evaluated;
        j["queries_skipped"] = report.queries_skipped;
    }
    if (report.separability.has_value()) j["separability"] = *report.separability;
    if (report.orthogonality.has_value()) j["orthogonality"] = *report.orthogonality;
    if (report.mean_quantization_angle_deg.has_value()) {
        j["mean_quantization_angle_deg"] = *report.mean_quantization_angle_deg;
    }
    if (!report.bit_balance.empty()) j["bit_balance"] = report.bit_balance;
    if (report.histograms.has_value()) {
        j["histograms"]["bin_low"] = report.histograms->bin_low;
        j["histograms"]["bin_high"] = report.histograms->bin_high;
        j["histograms"]["intra"] = report.histograms->intra;
        j["histograms"]["inter"] = report.histograms->inter;
    }
    write_file(path, j.dump(2) + "\n");
}

void write_histograms_csv(const std::string& path, const DistanceHistograms& histograms) {
    std::string bytes = "bin_low,bin_high,intra_freq,inter_freq\n";
    for (std::size_t b = 0; b < histograms.intra.size(); ++b) {
        bytes += format_double(histograms.bin_low[b]);
        bytes.push_back(',');
        bytes += format_double(histograms.bin_high[b]);
        bytes.push_back(',');
        bytes += format_double(histograms.intra[b]);
        bytes.push_back(',');
        bytes += format_double(histograms.inter[b]);
        bytes.push_back('\n');
    }
    write_file(path, bytes);
}

void write_query_results(const std::string& path, const QueryResults& results) {
    if (results.query_ids.size() != results.hits.size()) {
        throw std::invalid_argument("query results: one hit list per query required");
    }
    std::string bytes = "query_id,rank,db_id,distance\n";
    for (std::size_t q = 0; q < results.query_ids.size(); ++q) {
        for (std::size_t rank = 0; rank < results.hits[q].size(); ++rank) {
            bytes += std::to_string(results.query_ids[q]);
            bytes.push_back(',');
            bytes += std::to_string(rank + 1);
            bytes.push_back(',');
            bytes += std::to_string(results.hits[q][rank].id);
            bytes.push_back(',');
            bytes += std::to_string(results.hits[q][rank].distance);
            bytes.push_back('\n');
        }
    }
    write_file(path, bytes);
}

bool roundtrip_check(const std::string& path_in, const std::string& path_out) {
    const std::string original = read_file(path_in);
    std::string magic;
    const std::size_t newline = original.find('\n');
    try {
        // Headered formats carry the magic on the first line; the model file
        // is one multi-line JSON document.
        json header = json::parse(newline == std::string::npos
                                          ? original
                                          : original.substr(0, newline));
        magic = header.value("magic", "");
    } catch (const json::exception&) {
        try {
            magic = json::parse(original).value("magic", "");
        } catch (const json::exception&) {
            throw std::runtime_error(path_in + ": no parsable header");
        }
    }

    if (magic == "OHDS1") {
        write_descriptors(path_out, read_descriptors(path_in));
    } else if (magic == "OHCB1") {
        write_codebook(path_out, read_codebook(path_in));
    } else if (magic == "OHMD1") {
        write_model(path_out, read_model(path_in));
    } else if (magic == "OHIX1") {
        write_index(path_out, read_index(path_in));
    } else {
        throw std::runtime_error(path_in + ": unrecognized magic \"" + magic + "\"");
    }
    return read_file(path_out) == original;
}

}  // namespace ohc::io
