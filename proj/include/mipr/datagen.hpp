#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mipr/nn.hpp"

namespace mipr {

// Synthetic classification tasks. Every generator is a pure function of its
// spec and seed: re-running writes byte-identical CSV files.
struct GenSpec {
    std::string generator = "gaussian-blobs";  // | planted-subspace | xor-like
    std::size_t dims = 2;                      // total input width
    int classes = 0;  // 0 = generator default (blobs/xor 2, planted relevant_dims + 1)
    double noise = 0.1;            // gaussian-blobs: within-cluster stddev
    std::size_t relevant_dims = 4; // planted-subspace: width of the planted block
    double margin = 0.1;           // decision margin enforced by resampling
    std::size_t train_samples = 2000;
    std::size_t dev_samples = 500;
    std::size_t test_samples = 500;
};

struct GeneratedData {
    Dataset train, dev, test;
    // planted-subspace: the input columns the labels actually depend on.
    std::vector<std::size_t> planted;
};

GeneratedData gen_data(const GenSpec& spec, std::uint64_t seed);

// CSV with header x0,..,x{d-1},label; floats printed with %.17g so reads
// round-trip exactly.
void write_csv(const Dataset& data, const std::string& path);
Dataset read_csv(const std::string& path, int n_classes = 0);  // 0 = infer from labels

// Writes train/dev/test CSVs plus a meta.json describing the generator,
// parameters, seed, and (for planted-subspace) the planted columns.
void write_dataset_dir(const GeneratedData& data, const GenSpec& spec, std::uint64_t seed,
                       const std::string& dir);

// Loads the three splits of write_dataset_dir. Class count comes from
// meta.json.
GeneratedData read_dataset_dir(const std::string& dir);

}  // namespace mipr
