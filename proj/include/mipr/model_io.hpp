#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "mipr/baselines.hpp"
#include "mipr/nn.hpp"

namespace mipr {

enum class ModelIoErrorKind { BadMagic, VersionMismatch, Truncated, ChecksumMismatch, Malformed };

const char* to_string(ModelIoErrorKind k);

class ModelIoError : public std::runtime_error {
public:
    ModelIoError(ModelIoErrorKind k, const std::string& msg)
        : std::runtime_error(msg), kind(k) {}
    ModelIoErrorKind kind;
};

// Input-column record for squeezed models: which columns of the original
// input a narrower network consumes. `columns` is sorted, unique, bounded by
// `original_dim`, and its size must equal the network's input width.
struct InputColumns {
    std::size_t original_dim = 0;
    IndexSet columns;
};

struct LoadedModel {
    Network net;
    std::optional<MaskSet> masks;
    std::optional<WeightMaskSet> weight_masks;
    std::optional<InputColumns> input_columns;
};

// Binary model format: magic "MIPR", u32 version, init seed, layer table,
// row-major f64 weight/bias payloads, an optional mask section (dimension
// masks, weight masks, or the input-column record of a squeezed model), and a
// trailing CRC32 over everything before it. All integers are little-endian.
// Round-trips are bit-exact. At most one mask section may be attached.
void save_model(const Network& net, const std::string& path,
                const MaskSet* masks = nullptr, const WeightMaskSet* weight_masks = nullptr,
                const InputColumns* input_columns = nullptr);

LoadedModel load_model(const std::string& path);

inline constexpr std::uint32_t kModelFormatVersion = 1;

}  // namespace mipr
