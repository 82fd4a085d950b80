#include "mipr/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mipr/rng.hpp"

namespace mipr {

namespace {

using nlohmann::json;

constexpr double kBlobRadius = 3.0;

std::vector<Vec> blob_centers(std::size_t dims, int classes, Rng& rng) {
    std::vector<Vec> centers;
    const double min_sep = kBlobRadius * 0.8;
    for (int k = 0; k < classes; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            Vec c(dims);
            double norm = 0.0;
            for (double& v : c) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            if (norm == 0.0) continue;
            for (double& v : c) v *= kBlobRadius / norm;
            placed = true;
            for (const Vec& prev : centers) {
                double d2 = 0.0;
                for (std::size_t i = 0; i < dims; ++i) d2 += (c[i] - prev[i]) * (c[i] - prev[i]);
                if (std::sqrt(d2) < min_sep) {
                    placed = false;
                    break;
                }
            }
            if (placed) centers.push_back(std::move(c));
        }
        if (!placed) {
            // Degenerate geometry (e.g. one input dimension): fall back to
            // evenly spaced centers along the first axis.
            Vec c(dims, 0.0);
            c[0] = kBlobRadius * (2.0 * k - (classes - 1));
            centers.push_back(std::move(c));
        }
    }
    return centers;
}

Dataset sample_blobs(const GenSpec& spec, const std::vector<Vec>& centers, std::size_t n,
                     Rng& rng) {
    Dataset d;
    d.n_classes = spec.classes;
    d.inputs = Mat(n, spec.dims);
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.classes)));
        d.labels[i] = y;
        double* row = d.inputs.row(i);
        for (std::size_t j = 0; j < spec.dims; ++j)
            row[j] = centers[static_cast<std::size_t>(y)][j] + spec.noise * rng.normal();
    }
    return d;
}

Dataset sample_planted(const GenSpec& spec, const std::vector<std::size_t>& planted,
                       const Mat& mixing, std::size_t n, Rng& rng) {
    Dataset d;
    d.n_classes = spec.classes;
    d.inputs = Mat(n, spec.dims);
    d.labels.resize(n);
    Vec sub(planted.size());
    for (std::size_t i = 0; i < n; ++i) {
        double* row = d.inputs.row(i);
        int y = 0;
        for (int attempt = 0; attempt < 100; ++attempt) {
            for (std::size_t j = 0; j < spec.dims; ++j) row[j] = rng.normal();
            for (std::size_t j = 0; j < planted.size(); ++j) sub[j] = row[planted[j]];
            const Vec logits = matvec(mixing, sub);
            std::size_t arg = 0;
            double second = -1e300;
            for (std::size_t k = 1; k < logits.size(); ++k)
                if (logits[k] > logits[arg]) arg = k;
            for (std::size_t k = 0; k < logits.size(); ++k)
                if (k != arg && logits[k] > second) second = logits[k];
            y = static_cast<int>(arg);
            if (logits[arg] - second >= spec.margin) break;
        }
        d.labels[i] = y;
    }
    return d;
}

Dataset sample_xor(const GenSpec& spec, std::size_t n, Rng& rng) {
    Dataset d;
    d.n_classes = 2;
    d.inputs = Mat(n, spec.dims);
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = d.inputs.row(i);
        int parity = 0;
        for (std::size_t j = 0; j < spec.dims; ++j) {
            double v = rng.normal();
            // Keep every coordinate clear of the sign boundary so the parity
            // label has a margin.
            while (std::abs(v) < spec.margin) v = rng.normal();
            row[j] = v;
            if (v > 0.0) parity ^= 1;
        }
        d.labels[i] = parity;
    }
    return d;
}

}  // namespace

GeneratedData gen_data(const GenSpec& spec, std::uint64_t seed) {
    if (spec.dims == 0) throw std::invalid_argument("gen_data: dims must be positive");
    if (spec.train_samples == 0 || spec.dev_samples == 0 || spec.test_samples == 0)
        throw std::invalid_argument("gen_data: all splits must be nonempty");

    Rng rng(seed);
    GeneratedData out;

    if (spec.generator == "gaussian-blobs") {
        GenSpec s = spec;
        if (s.classes == 0) s.classes = 2;
        if (s.classes < 2) throw std::invalid_argument("gen_data: need at least two classes");
        if (!(s.noise > 0.0)) throw std::invalid_argument("gen_data: noise must be positive");
        const auto centers = blob_centers(s.dims, s.classes, rng);
        out.train = sample_blobs(s, centers, s.train_samples, rng);
        out.dev = sample_blobs(s, centers, s.dev_samples, rng);
        out.test = sample_blobs(s, centers, s.test_samples, rng);
    } else if (spec.generator == "planted-subspace") {
        if (spec.relevant_dims == 0 || spec.relevant_dims > spec.dims)
            throw std::invalid_argument("gen_data: relevant_dims must be in [1, dims]");
        GenSpec s = spec;
        if (s.classes == 0) s.classes = static_cast<int>(spec.relevant_dims) + 1;
        if (s.classes < 2) throw std::invalid_argument("gen_data: need at least two classes");
        out.planted = rng.sample_without_replacement(spec.dims, spec.relevant_dims);
        Mat mixing(static_cast<std::size_t>(s.classes), spec.relevant_dims);
        for (double& v : mixing.data) v = rng.normal();
        out.train = sample_planted(s, out.planted, mixing, spec.train_samples, rng);
        out.dev = sample_planted(s, out.planted, mixing, spec.dev_samples, rng);
        out.test = sample_planted(s, out.planted, mixing, spec.test_samples, rng);
    } else if (spec.generator == "xor-like") {
        if (spec.classes != 0 && spec.classes != 2)
            throw std::invalid_argument("gen_data: xor-like is a two-class task");
        if (!(spec.margin > 0.0)) throw std::invalid_argument("gen_data: margin must be positive");
        out.train = sample_xor(spec, spec.train_samples, rng);
        out.dev = sample_xor(spec, spec.dev_samples, rng);
        out.test = sample_xor(spec, spec.test_samples, rng);
    } else {
        throw std::invalid_argument("gen_data: unknown generator " + spec.generator);
    }
    return out;
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    for (std::size_t j = 0; j < data.inputs.cols; ++j) out << "x" << j << ",";
    out << "label\n";
    char num[64];
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double* row = data.inputs.row(i);
        for (std::size_t j = 0; j < data.inputs.cols; ++j) {
            std::snprintf(num, sizeof(num), "%.17g", row[j]);
            out << num << ",";
        }
        out << data.labels[i] << "\n";
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

Dataset read_csv(const std::string& path, int n_classes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path);

    std::size_t cols = 1;
    for (char c : line)
        if (c == ',') ++cols;
    if (cols < 2) throw std::runtime_error("read_csv: need at least one feature column");
    const std::size_t dims = cols - 1;

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t j = 0; j < dims; ++j) {
            if (!std::getline(ss, cell, ','))
                throw std::runtime_error("read_csv: short row in " + path);
            values.push_back(std::stod(cell));
        }
        if (!std::getline(ss, cell, ','))
            throw std::runtime_error("read_csv: missing label in " + path);
        labels.push_back(std::stoi(cell));
        ++rows;
    }
    Dataset d;
    d.inputs = Mat(rows, dims);
    d.inputs.data = std::move(values);
    d.labels = std::move(labels);
    int maxl = -1;
    for (int l : d.labels) {
        if (l < 0) throw std::runtime_error("read_csv: negative label in " + path);
        maxl = std::max(maxl, l);
    }
    d.n_classes = n_classes > 0 ? n_classes : maxl + 1;
    if (maxl >= d.n_classes) throw std::runtime_error("read_csv: label exceeds class count");
    return d;
}

void write_dataset_dir(const GeneratedData& data, const GenSpec& spec, std::uint64_t seed,
                       const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_csv(data.train, dir + "/train.csv");
    write_csv(data.dev, dir + "/dev.csv");
    write_csv(data.test, dir + "/test.csv");
    json meta;
    meta["generator"] = spec.generator;
    meta["dims"] = spec.dims;
    meta["classes"] = data.train.n_classes;
    meta["noise"] = spec.noise;
    meta["relevant_dims"] = spec.relevant_dims;
    meta["margin"] = spec.margin;
    meta["seed"] = seed;
    meta["train_samples"] = data.train.size();
    meta["dev_samples"] = data.dev.size();
    meta["test_samples"] = data.test.size();
    if (!data.planted.empty()) meta["planted"] = data.planted;
    std::ofstream out(dir + "/meta.json", std::ios::trunc);
    if (!out) throw std::runtime_error("write_dataset_dir: cannot open " + dir + "/meta.json");
    out << meta.dump(2) << "\n";
}

GeneratedData read_dataset_dir(const std::string& dir) {
    std::ifstream in(dir + "/meta.json");
    if (!in) throw std::runtime_error("read_dataset_dir: cannot open " + dir + "/meta.json");
    json meta = json::parse(in);
    const int classes = meta.at("classes").get<int>();
    GeneratedData out;
    out.train = read_csv(dir + "/train.csv", classes);
    out.dev = read_csv(dir + "/dev.csv", classes);
    out.test = read_csv(dir + "/test.csv", classes);
    if (meta.contains("planted")) out.planted = meta["planted"].get<std::vector<std::size_t>>();
    return out;
}

}  // namespace mipr
