#include "mipr/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mipr {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
    }
    return "?";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    throw std::invalid_argument("unknown activation: " + s);
}

const char* to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::Sgd: return "sgd";
        case OptimizerKind::Momentum: return "momentum";
        case OptimizerKind::Adam: return "adam";
    }
    return "?";
}

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "momentum") return OptimizerKind::Momentum;
    if (s == "adam") return OptimizerKind::Adam;
    throw std::invalid_argument("unknown optimizer: " + s);
}

std::vector<std::size_t> Network::level_dims() const {
    std::vector<std::size_t> dims;
    dims.reserve(layers.size() + 1);
    dims.push_back(input_dim);
    for (const auto& l : layers) dims.push_back(l.out_dim());
    return dims;
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

void Network::validate() const {
    if (layers.empty()) throw std::invalid_argument("network: needs at least one layer");
    std::size_t prev = input_dim;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        if (l.in_dim() == 0 || l.out_dim() == 0)
            throw std::invalid_argument("network: layer " + std::to_string(i) + " has zero width");
        if (l.in_dim() != prev)
            throw std::invalid_argument("network: layer " + std::to_string(i) +
                                        " input width does not match the previous level");
        if (l.bias.size() != l.out_dim())
            throw std::invalid_argument("network: layer " + std::to_string(i) + " bias size mismatch");
        if (l.residual && l.in_dim() != l.out_dim())
            throw std::invalid_argument("network: residual layer " + std::to_string(i) +
                                        " must have equal in/out widths");
        if (!all_finite(l.weight) || !all_finite(l.bias))
            throw std::invalid_argument("network: layer " + std::to_string(i) +
                                        " has non-finite parameters");
        prev = l.out_dim();
    }
}

Network make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                 std::size_t n_classes, Activation act, std::uint64_t seed,
                 const std::vector<bool>& residual) {
    if (input_dim == 0 || n_classes < 2)
        throw std::invalid_argument("make_mlp: need input_dim >= 1 and n_classes >= 2");
    std::vector<std::size_t> widths;
    widths.push_back(input_dim);
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(n_classes);
    const std::size_t n_layers = widths.size() - 1;
    if (!residual.empty() && residual.size() != n_layers)
        throw std::invalid_argument("make_mlp: residual flags must match the layer count");

    Rng rng(seed);
    Network net;
    net.input_dim = input_dim;
    net.init_seed = seed;
    for (std::size_t l = 0; l < n_layers; ++l) {
        LayerSpec layer;
        const std::size_t in = widths[l], out = widths[l + 1];
        layer.weight = Mat(out, in);
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        for (double& w : layer.weight.data) w = rng.uniform(-bound, bound);
        layer.bias.assign(out, 0.0);
        // Hidden layers use the requested activation; the output layer emits
        // raw logits.
        layer.act = (l + 1 == n_layers) ? Activation::Identity : act;
        layer.residual = !residual.empty() && residual[l];
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

bool MaskSet::all_ones() const {
    for (const auto& m : masks)
        for (std::uint8_t v : m)
            if (!v) return false;
    return true;
}

MaskSet MaskSet::all_ones_for(const Network& net) {
    const auto dims = net.level_dims();
    std::vector<std::vector<std::size_t>> kept_sets(dims.size());
    for (std::size_t l = 0; l < dims.size(); ++l) {
        kept_sets[l].resize(dims[l]);
        std::iota(kept_sets[l].begin(), kept_sets[l].end(), 0);
    }
    return from_kept(dims, std::move(kept_sets));
}

MaskSet MaskSet::from_kept(const std::vector<std::size_t>& level_dims,
                           std::vector<std::vector<std::size_t>> kept_sets) {
    if (kept_sets.size() != level_dims.size())
        throw std::invalid_argument("masks: need one kept set per representation level");
    MaskSet ms;
    ms.masks.resize(level_dims.size());
    for (std::size_t l = 0; l < level_dims.size(); ++l) {
        validate_index_set(kept_sets[l], level_dims[l], "masks: level " + std::to_string(l));
        ms.masks[l].assign(level_dims[l], 0);
        for (std::size_t i : kept_sets[l]) ms.masks[l][i] = 1;
    }
    const std::size_t last = level_dims.size() - 1;
    if (kept_sets[last].size() != level_dims[last])
        throw std::invalid_argument("masks: the logits level is exempt from pruning");
    ms.kept = std::move(kept_sets);
    return ms;
}

void MaskSet::validate_for(const Network& net) const {
    const auto dims = net.level_dims();
    if (masks.size() != dims.size() || kept.size() != dims.size())
        throw std::invalid_argument("masks: level count does not match the network");
    for (std::size_t l = 0; l < dims.size(); ++l) {
        if (masks[l].size() != dims[l])
            throw std::invalid_argument("masks: level " + std::to_string(l) + " width mismatch");
        validate_index_set(kept[l], dims[l], "masks: level " + std::to_string(l));
        std::size_t seen = 0;
        for (std::size_t i = 0; i < masks[l].size(); ++i) {
            if (masks[l][i] > 1)
                throw std::invalid_argument("masks: entries must be 0 or 1");
            if (masks[l][i]) {
                if (seen >= kept[l].size() || kept[l][seen] != i)
                    throw std::invalid_argument("masks: kept set disagrees with the mask");
                ++seen;
            }
        }
        if (seen != kept[l].size())
            throw std::invalid_argument("masks: kept set disagrees with the mask");
    }
    for (std::uint8_t v : masks.back())
        if (!v) throw std::invalid_argument("masks: the logits level is exempt from pruning");
}

namespace {

void apply_mask_columns(Mat& a, const std::vector<std::uint8_t>& mask) {
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* r = a.row(i);
        for (std::size_t j = 0; j < a.cols; ++j)
            if (!mask[j]) r[j] = 0.0;
    }
}

Mat linear(const Mat& a, const LayerSpec& layer) {
    Mat z(a.rows, layer.out_dim());
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* zi = z.row(i);
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            const double* wr = layer.weight.row(r);
            double s = layer.bias[r];
            for (std::size_t c = 0; c < layer.in_dim(); ++c) s += wr[c] * ai[c];
            zi[r] = s;
        }
    }
    return z;
}

Mat apply_activation(const Mat& z, Activation act) {
    Mat out = z;
    switch (act) {
        case Activation::Identity: break;
        case Activation::Relu:
            for (double& v : out.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Tanh:
            for (double& v : out.data) v = std::tanh(v);
            break;
    }
    return out;
}

// Derivative of the activation evaluated at the pre-activation z.
double activation_grad(double z, Activation act) {
    switch (act) {
        case Activation::Identity: return 1.0;
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
    }
    return 0.0;
}

}  // namespace

ForwardResult forward(const Network& net, const Mat& inputs, const MaskSet* masks) {
    if (inputs.cols != net.input_dim)
        throw std::invalid_argument("forward: input width does not match the network");
    if (masks) masks->validate_for(net);

    ForwardResult res;
    res.activations.reserve(net.depth() + 1);
    res.preacts.reserve(net.depth());

    Mat a = inputs;
    if (masks) apply_mask_columns(a, masks->masks[0]);
    res.activations.push_back(a);

    for (std::size_t l = 0; l < net.depth(); ++l) {
        const LayerSpec& layer = net.layers[l];
        Mat z = linear(res.activations[l], layer);
        Mat nxt = apply_activation(z, layer.act);
        res.preacts.push_back(std::move(z));
        if (layer.residual) {
            const Mat& prev = res.activations[l];
            for (std::size_t i = 0; i < nxt.size(); ++i) nxt.data[i] += prev.data[i];
        }
        if (masks && l + 1 < net.depth()) apply_mask_columns(nxt, masks->masks[l + 1]);
        res.activations.push_back(std::move(nxt));
    }
    return res;
}

double softmax_cross_entropy(const Mat& logits, const std::vector<int>& labels, Mat* dlogits) {
    if (logits.rows != labels.size())
        throw std::invalid_argument("softmax_cross_entropy: row/label count mismatch");
    if (logits.rows == 0) throw std::invalid_argument("softmax_cross_entropy: empty batch");
    const std::size_t n = logits.rows, k = logits.cols;
    if (dlogits) *dlogits = Mat(n, k);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= k)
            throw std::invalid_argument("softmax_cross_entropy: label out of range");
        const double* zi = logits.row(i);
        double zmax = zi[0];
        for (std::size_t j = 1; j < k; ++j) zmax = std::max(zmax, zi[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(zi[j] - zmax);
        total += -(zi[static_cast<std::size_t>(y)] - zmax - std::log(sum));
        if (dlogits) {
            double* di = dlogits->row(i);
            for (std::size_t j = 0; j < k; ++j)
                di[j] = (std::exp(zi[j] - zmax) / sum) / static_cast<double>(n);
            di[static_cast<std::size_t>(y)] -= 1.0 / static_cast<double>(n);
        }
    }
    return total / static_cast<double>(n);
}

EvalResult evaluate(const Network& net, const Dataset& data, const MaskSet* masks) {
    if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
    const ForwardResult fwd = forward(net, data.inputs, masks);
    const Mat& logits = fwd.logits();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* zi = logits.row(i);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < logits.cols; ++j)
            if (zi[j] > zi[arg]) arg = j;
        if (static_cast<int>(arg) == data.labels[i]) ++correct;
    }
    EvalResult r;
    r.accuracy = static_cast<double>(correct) / static_cast<double>(logits.rows);
    r.mean_loss = softmax_cross_entropy(logits, data.labels);
    return r;
}

Gradients backward(const Network& net, const Batch& batch, const ForwardResult& fwd) {
    const std::size_t L = net.depth();
    if (fwd.activations.size() != L + 1 || fwd.preacts.size() != L)
        throw std::invalid_argument("backward: forward result does not match the network");

    Mat da;  // gradient w.r.t. activations of the current level
    softmax_cross_entropy(fwd.logits(), batch.labels, &da);

    Gradients g;
    g.dweight.resize(L);
    g.dbias.resize(L);
    for (std::size_t li = L; li-- > 0;) {
        const LayerSpec& layer = net.layers[li];
        const Mat& z = fwd.preacts[li];
        const Mat& a_in = fwd.activations[li];
        const std::size_t n = z.rows, out = z.cols, in = layer.in_dim();

        Mat dz(n, out);
        for (std::size_t i = 0; i < n * out; ++i)
            dz.data[i] = da.data[i] * activation_grad(z.data[i], layer.act);

        Mat dw(out, in);
        for (std::size_t i = 0; i < n; ++i) {
            const double* dzi = dz.row(i);
            const double* ai = a_in.row(i);
            for (std::size_t r = 0; r < out; ++r) {
                if (dzi[r] == 0.0) continue;
                double* dwr = dw.row(r);
                for (std::size_t c = 0; c < in; ++c) dwr[c] += dzi[r] * ai[c];
            }
        }
        Vec db(out, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* dzi = dz.row(i);
            for (std::size_t r = 0; r < out; ++r) db[r] += dzi[r];
        }

        Mat da_prev(n, in);
        for (std::size_t i = 0; i < n; ++i) {
            const double* dzi = dz.row(i);
            double* dpi = da_prev.row(i);
            for (std::size_t r = 0; r < out; ++r) {
                if (dzi[r] == 0.0) continue;
                const double* wr = layer.weight.row(r);
                for (std::size_t c = 0; c < in; ++c) dpi[c] += dzi[r] * wr[c];
            }
        }
        if (layer.residual)
            for (std::size_t i = 0; i < da_prev.size(); ++i) da_prev.data[i] += da.data[i];

        g.dweight[li] = std::move(dw);
        g.dbias[li] = std::move(db);
        da = std::move(da_prev);
    }
    return g;
}

FreezeSpec FreezeSpec::all_trainable(const Network& net) {
    FreezeSpec fz;
    for (const auto& l : net.layers) {
        fz.weight_trainable.emplace_back(l.weight.size(), 1);
        fz.bias_trainable.emplace_back(l.bias.size(), 1);
    }
    return fz;
}

FreezeSpec FreezeSpec::preserved_frozen(const Network& net, const MaskSet& masks) {
    masks.validate_for(net);
    FreezeSpec fz = all_trainable(net);
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& in_mask = masks.masks[l];
        const auto& out_mask = masks.masks[l + 1];
        const std::size_t in = net.layers[l].in_dim();
        for (std::size_t r = 0; r < net.layers[l].out_dim(); ++r) {
            for (std::size_t c = 0; c < in; ++c)
                if (out_mask[r] && in_mask[c]) fz.weight_trainable[l][r * in + c] = 0;
            if (out_mask[r]) fz.bias_trainable[l][r] = 0;
        }
    }
    return fz;
}

Optimizer::Optimizer(const Network& net, const TrainConfig& cfg) : cfg_(cfg) {
    for (const auto& l : net.layers) {
        wm_.emplace_back(l.weight.size(), 0.0);
        wv_.emplace_back(l.weight.size(), 0.0);
        bm_.emplace_back(l.bias.size(), 0.0);
        bv_.emplace_back(l.bias.size(), 0.0);
    }
}

void Optimizer::step(Network& net, const Gradients& grads, const FreezeSpec* freeze) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto update = [&](double* w, const double* g, Vec& m, Vec& v,
                      const std::vector<std::uint8_t>* trainable, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            if (trainable && !(*trainable)[i]) continue;
            switch (cfg_.optimizer) {
                case OptimizerKind::Sgd:
                    w[i] -= cfg_.lr * g[i];
                    break;
                case OptimizerKind::Momentum:
                    m[i] = cfg_.momentum * m[i] + g[i];
                    w[i] -= cfg_.lr * m[i];
                    break;
                case OptimizerKind::Adam: {
                    m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                    v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                    const double mh = m[i] / c1;
                    const double vh = v[i] / c2;
                    w[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
                    break;
                }
            }
        }
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        update(net.layers[l].weight.data.data(), grads.dweight[l].data.data(), wm_[l], wv_[l],
               freeze ? &freeze->weight_trainable[l] : nullptr, net.layers[l].weight.size());
        update(net.layers[l].bias.data(), grads.dbias[l].data(), bm_[l], bv_[l],
               freeze ? &freeze->bias_trainable[l] : nullptr, net.layers[l].bias.size());
    }
}

Batcher::Batcher(std::size_t n, std::size_t batch_size, std::uint64_t seed, bool shuffle)
    : n_(n), batch_size_(std::min(batch_size, n)), shuffle_(shuffle), rng_(seed) {
    if (n == 0 || batch_size == 0) throw std::invalid_argument("batcher: empty dataset or batch");
    order_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
    if (shuffle_) order_ = rng_.permutation(n_);
}

std::vector<std::size_t> Batcher::next() {
    std::vector<std::size_t> idx;
    idx.reserve(batch_size_);
    for (std::size_t i = 0; i < batch_size_; ++i) {
        if (pos_ == n_) {
            pos_ = 0;
            if (shuffle_) order_ = rng_.permutation(n_);
        }
        idx.push_back(order_[pos_++]);
    }
    return idx;
}

Batch gather_batch(const Dataset& data, const std::vector<std::size_t>& idx) {
    Batch b;
    b.inputs = Mat(idx.size(), data.inputs.cols);
    b.labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double* src = data.inputs.row(idx[i]);
        std::copy(src, src + data.inputs.cols, b.inputs.row(i));
        b.labels[i] = data.labels[idx[i]];
    }
    return b;
}

TrainResult train(Network& net, const Dataset& data, const TrainConfig& cfg,
                  const FreezeSpec* freeze) {
    net.validate();
    if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
    if (data.labels.size() != data.size())
        throw std::invalid_argument("train: row/label count mismatch");
    if (cfg.lr < 0.0) throw std::invalid_argument("train: negative learning rate");
    if (freeze) {
        if (freeze->weight_trainable.size() != net.depth() ||
            freeze->bias_trainable.size() != net.depth())
            throw std::invalid_argument("train: freeze spec does not match the network");
        for (std::size_t l = 0; l < net.depth(); ++l)
            if (freeze->weight_trainable[l].size() != net.layers[l].weight.size() ||
                freeze->bias_trainable[l].size() != net.layers[l].bias.size())
                throw std::invalid_argument("train: freeze spec does not match the network");
    }

    Optimizer opt(net, cfg);
    Batcher batcher(data.size(), cfg.batch_size, cfg.seed, cfg.shuffle);
    TrainResult res;
    res.loss_trace.reserve(cfg.steps);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const Batch b = gather_batch(data, batcher.next());
        const ForwardResult fwd = forward(net, b.inputs);
        const double loss = softmax_cross_entropy(fwd.logits(), b.labels);
        if (!std::isfinite(loss))
            throw TrainingDiverged(step, "train: non-finite loss at step " + std::to_string(step));
        const Gradients g = backward(net, b, fwd);
        opt.step(net, g, freeze);
        for (std::size_t l = 0; l < net.depth(); ++l)
            if (!all_finite(net.layers[l].weight) || !all_finite(net.layers[l].bias))
                throw TrainingDiverged(step, "train: non-finite parameter after step " +
                                                 std::to_string(step));
        res.loss_trace.push_back(loss);
    }
    res.final_loss = res.loss_trace.empty() ? 0.0 : res.loss_trace.back();
    return res;
}

Network squeeze(const Network& net, const MaskSet& masks) {
    masks.validate_for(net);
    for (std::size_t l = 0; l < net.depth(); ++l) {
        if (net.layers[l].residual && masks.kept[l] != masks.kept[l + 1])
            throw std::invalid_argument("squeeze: residual layer " + std::to_string(l) +
                                        " must share one mask across both ends");
    }
    Network out;
    out.input_dim = masks.kept[0].size();
    out.init_seed = net.init_seed;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const LayerSpec& src = net.layers[l];
        LayerSpec dst;
        dst.weight = submatrix(src.weight, masks.kept[l + 1], masks.kept[l]);
        dst.bias = gather(src.bias, masks.kept[l + 1]);
        dst.act = src.act;
        dst.residual = src.residual;
        out.layers.push_back(std::move(dst));
    }
    out.validate();
    return out;
}

FlopCount count_flops(const Network& net) {
    FlopCount fc;
    for (const auto& l : net.layers) {
        const double in = static_cast<double>(l.in_dim());
        const double out = static_cast<double>(l.out_dim());
        fc.matmul += 2.0 * in * out;
        fc.bias += out;
        fc.activation += out;
        if (l.residual) fc.residual += out;
    }
    return fc;
}

Dataset restrict_dataset(const Dataset& data, const IndexSet& cols) {
    validate_index_set(cols, data.inputs.cols, "restrict_dataset");
    Dataset out;
    out.inputs = select_columns(data.inputs, cols);
    out.labels = data.labels;
    out.n_classes = data.n_classes;
    return out;
}

}  // namespace mipr
