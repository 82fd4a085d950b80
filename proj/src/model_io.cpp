#include "mipr/model_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <limits>

namespace mipr {

const char* to_string(ModelIoErrorKind k) {
    switch (k) {
        case ModelIoErrorKind::BadMagic: return "bad magic";
        case ModelIoErrorKind::VersionMismatch: return "version mismatch";
        case ModelIoErrorKind::Truncated: return "truncated";
        case ModelIoErrorKind::ChecksumMismatch: return "checksum mismatch";
        case ModelIoErrorKind::Malformed: return "malformed";
    }
    return "?";
}

namespace {

constexpr char kMagic[4] = {'M', 'I', 'P', 'R'};
constexpr std::size_t kMaxDim = 1u << 24;      // sanity bound on any width
constexpr std::size_t kMaxLayers = 1u << 16;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

// Bounds-checked little-endian reader; overruns report a truncated file.
class Reader {
public:
    Reader(const std::string& buf, std::size_t limit) : buf_(buf), limit_(limit) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) {
        if (pos_ + n > limit_)
            throw ModelIoError(ModelIoErrorKind::Truncated, "model file: truncated");
    }
    const std::string& buf_;
    std::size_t limit_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::string& buf, std::size_t len) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(len)));
}

}  // namespace

void save_model(const Network& net, const std::string& path, const MaskSet* masks,
                const WeightMaskSet* weight_masks, const InputColumns* input_columns) {
    net.validate();
    if ((masks != nullptr) + (weight_masks != nullptr) + (input_columns != nullptr) > 1)
        throw std::invalid_argument("save_model: at most one mask section");
    if (masks) masks->validate_for(net);
    if (weight_masks) weight_masks->validate_for(net);
    if (input_columns) {
        validate_index_set(input_columns->columns, input_columns->original_dim,
                           "save_model: input columns");
        if (input_columns->columns.size() != net.input_dim)
            throw std::invalid_argument(
                "save_model: input column count must equal the network input width");
    }

    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kModelFormatVersion);
    put_u64(buf, net.init_seed);
    put_u64(buf, net.input_dim);
    put_u32(buf, static_cast<std::uint32_t>(net.depth()));
    for (const auto& l : net.layers) {
        put_u64(buf, l.in_dim());
        put_u64(buf, l.out_dim());
        put_u8(buf, static_cast<std::uint8_t>(l.act));
        put_u8(buf, l.residual ? 1 : 0);
    }
    for (const auto& l : net.layers) {
        for (double w : l.weight.data) put_f64(buf, w);
        for (double b : l.bias) put_f64(buf, b);
    }
    if (masks) {
        put_u8(buf, 1);
        for (const auto& m : masks->masks)
            for (std::uint8_t v : m) put_u8(buf, v);
    } else if (weight_masks) {
        put_u8(buf, 2);
        put_f64(buf, weight_masks->achieved_sparsity);
        for (const auto& m : weight_masks->masks)
            for (std::uint8_t v : m) put_u8(buf, v);
    } else if (input_columns) {
        put_u8(buf, 3);
        put_u64(buf, input_columns->original_dim);
        std::size_t next = 0;
        for (std::size_t i = 0; i < input_columns->original_dim; ++i) {
            const bool kept =
                next < input_columns->columns.size() && input_columns->columns[next] == i;
            put_u8(buf, kept ? 1 : 0);
            if (kept) ++next;
        }
    } else {
        put_u8(buf, 0);
    }
    put_u32(buf, crc_of(buf, buf.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_model: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 8) throw ModelIoError(ModelIoErrorKind::Truncated, "model file: truncated");
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw ModelIoError(ModelIoErrorKind::BadMagic, "model file: bad magic");

    // Payload parse is bounds-limited to exclude the 4-byte CRC trailer.
    if (buf.size() < 12) throw ModelIoError(ModelIoErrorKind::Truncated, "model file: truncated");
    Reader r(buf, buf.size() - 4);
    r.u32();  // magic
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        throw ModelIoError(ModelIoErrorKind::VersionMismatch,
                           "model file: unsupported version " + std::to_string(version));

    LoadedModel lm;
    lm.net.init_seed = r.u64();
    lm.net.input_dim = static_cast<std::size_t>(r.u64());
    const std::uint32_t n_layers = r.u32();
    if (n_layers == 0 || n_layers > kMaxLayers || lm.net.input_dim == 0 ||
        lm.net.input_dim > kMaxDim)
        throw ModelIoError(ModelIoErrorKind::Malformed, "model file: implausible header");

    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        LayerSpec spec;
        const std::size_t in = static_cast<std::size_t>(r.u64());
        const std::size_t out = static_cast<std::size_t>(r.u64());
        if (in == 0 || out == 0 || in > kMaxDim || out > kMaxDim)
            throw ModelIoError(ModelIoErrorKind::Malformed, "model file: implausible layer shape");
        const std::uint8_t act = r.u8();
        if (act > 2)
            throw ModelIoError(ModelIoErrorKind::Malformed, "model file: unknown activation code");
        spec.act = static_cast<Activation>(act);
        spec.residual = r.u8() != 0;
        spec.weight = Mat(out, in);
        spec.bias.assign(out, 0.0);
        shapes.emplace_back(in, out);
        lm.net.layers.push_back(std::move(spec));
    }
    for (auto& l : lm.net.layers) {
        for (double& w : l.weight.data) w = r.f64();
        for (double& b : l.bias) b = r.f64();
    }

    const std::uint8_t mask_kind = r.u8();
    if (mask_kind == 1) {
        const auto dims = lm.net.level_dims();
        std::vector<std::vector<std::size_t>> kept(dims.size());
        std::vector<std::vector<std::uint8_t>> raw(dims.size());
        for (std::size_t lvl = 0; lvl < dims.size(); ++lvl) {
            raw[lvl].resize(dims[lvl]);
            for (std::size_t i = 0; i < dims[lvl]; ++i) {
                const std::uint8_t v = r.u8();
                if (v > 1)
                    throw ModelIoError(ModelIoErrorKind::Malformed, "model file: bad mask byte");
                raw[lvl][i] = v;
                if (v) kept[lvl].push_back(i);
            }
        }
        try {
            lm.masks = MaskSet::from_kept(dims, std::move(kept));
        } catch (const std::invalid_argument& e) {
            throw ModelIoError(ModelIoErrorKind::Malformed,
                               std::string("model file: bad mask section: ") + e.what());
        }
    } else if (mask_kind == 2) {
        WeightMaskSet wm;
        wm.achieved_sparsity = r.f64();
        for (const auto& [in, out] : shapes) {
            std::vector<std::uint8_t> m(in * out);
            for (auto& v : m) {
                v = r.u8();
                if (v > 1)
                    throw ModelIoError(ModelIoErrorKind::Malformed, "model file: bad mask byte");
            }
            wm.masks.push_back(std::move(m));
        }
        lm.weight_masks = std::move(wm);
    } else if (mask_kind == 3) {
        InputColumns ic;
        ic.original_dim = static_cast<std::size_t>(r.u64());
        if (ic.original_dim == 0 || ic.original_dim > kMaxDim)
            throw ModelIoError(ModelIoErrorKind::Malformed,
                               "model file: implausible input-column width");
        for (std::size_t i = 0; i < ic.original_dim; ++i) {
            const std::uint8_t v = r.u8();
            if (v > 1)
                throw ModelIoError(ModelIoErrorKind::Malformed, "model file: bad mask byte");
            if (v) ic.columns.push_back(i);
        }
        if (ic.columns.size() != lm.net.input_dim)
            throw ModelIoError(ModelIoErrorKind::Malformed,
                               "model file: input-column count does not match input width");
        lm.input_columns = std::move(ic);
    } else if (mask_kind != 0) {
        throw ModelIoError(ModelIoErrorKind::Malformed, "model file: unknown mask section kind");
    }

    if (r.pos() != buf.size() - 4)
        throw ModelIoError(ModelIoErrorKind::Malformed, "model file: trailing bytes");
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[buf.size() - 4 + i]))
                  << (8 * i);
    if (stored != crc_of(buf, buf.size() - 4))
        throw ModelIoError(ModelIoErrorKind::ChecksumMismatch, "model file: checksum mismatch");

    try {
        lm.net.validate();
    } catch (const std::invalid_argument& e) {
        throw ModelIoError(ModelIoErrorKind::Malformed,
                           std::string("model file: inconsistent network: ") + e.what());
    }
    return lm;
}

}  // namespace mipr
