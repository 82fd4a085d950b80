#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mipr/linalg.hpp"
#include "mipr/rng.hpp"

namespace mipr {

enum class Activation : std::uint8_t { Identity = 0, Relu = 1, Tanh = 2 };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

// One affine layer: y = act(W x + b), plus the layer input when residual.
// Weights are stored [out_dim x in_dim].
struct LayerSpec {
    Mat weight;
    Vec bias;
    Activation act = Activation::Relu;
    bool residual = false;

    std::size_t in_dim() const { return weight.cols; }
    std::size_t out_dim() const { return weight.rows; }
};

struct Dataset {
    Mat inputs;               // [n x input_dim]
    std::vector<int> labels;  // class indices in [0, n_classes)
    int n_classes = 0;

    std::size_t size() const { return inputs.rows; }
};

struct Batch {
    Mat inputs;
    std::vector<int> labels;
};

// Feed-forward classifier. Representation levels are numbered 0..depth():
// level 0 is the input, level depth() holds the logits. The logits level is
// exempt from pruning throughout.
struct Network {
    std::size_t input_dim = 0;
    std::vector<LayerSpec> layers;
    std::uint64_t init_seed = 0;

    std::size_t depth() const { return layers.size(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }
    std::vector<std::size_t> level_dims() const;
    std::size_t param_count() const;

    // Chain compatibility, residual squareness, finite parameters.
    void validate() const;
};

// Fresh MLP with uniform fan-in init in +-sqrt(6/(in+out)) and zero biases.
// `residual` (when nonempty) flags residual layers and must match the number
// of layers; residual layers require equal in/out widths.
Network make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                 std::size_t n_classes, Activation act, std::uint64_t seed,
                 const std::vector<bool>& residual = {});

// Binary keep/drop masks over representation levels 0..depth(). The final
// (logits) level is always all-ones. `kept` mirrors `masks` with the sorted
// preserved indices per level.
struct MaskSet {
    std::vector<std::vector<std::uint8_t>> masks;
    std::vector<std::vector<std::size_t>> kept;

    std::size_t levels() const { return masks.size(); }
    bool all_ones() const;

    static MaskSet all_ones_for(const Network& net);
    // level_dims as given by Network::level_dims(); kept_sets must cover every
    // level and keep the final level complete.
    static MaskSet from_kept(const std::vector<std::size_t>& level_dims,
                             std::vector<std::vector<std::size_t>> kept_sets);

    void validate_for(const Network& net) const;
};

struct ForwardResult {
    std::vector<Mat> activations;  // levels 0..depth(), post-mask where masked
    std::vector<Mat> preacts;      // one per layer: W a + b before activation

    const Mat& logits() const { return activations.back(); }
};

// Run the network on a batch of rows. When `masks` is given, activations at
// zero-masked positions are set to exactly 0 before entering the next layer;
// logits are never masked.
ForwardResult forward(const Network& net, const Mat& inputs, const MaskSet* masks = nullptr);

// Mean softmax cross-entropy. When `dlogits` is non-null it receives the
// gradient of the mean loss with respect to the logits.
double softmax_cross_entropy(const Mat& logits, const std::vector<int>& labels,
                             Mat* dlogits = nullptr);

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

EvalResult evaluate(const Network& net, const Dataset& data, const MaskSet* masks = nullptr);

struct Gradients {
    std::vector<Mat> dweight;
    std::vector<Vec> dbias;
};

// Analytic gradients of the mean softmax cross-entropy over the batch.
// `fwd` must come from an unmasked forward pass on `batch.inputs`.
Gradients backward(const Network& net, const Batch& batch, const ForwardResult& fwd);

enum class OptimizerKind : std::uint8_t { Sgd = 0, Momentum = 1, Adam = 2 };

const char* to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

struct TrainConfig {
    std::size_t steps = 500;
    std::size_t batch_size = 32;
    double lr = 0.01;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 1;
    bool shuffle = true;
};

// Per-parameter trainable flags; 0 = frozen. Frozen entries are skipped by the
// optimizer entirely, so their stored bits never change.
struct FreezeSpec {
    std::vector<std::vector<std::uint8_t>> weight_trainable;  // row-major per layer
    std::vector<std::vector<std::uint8_t>> bias_trainable;

    static FreezeSpec all_trainable(const Network& net);
    // Freeze the preserved->preserved block of every weight matrix and the
    // preserved bias entries, as given by `masks`.
    static FreezeSpec preserved_frozen(const Network& net, const MaskSet& masks);
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t at_step, const std::string& msg)
        : std::runtime_error(msg), step(at_step) {}
    std::size_t step;
};

struct TrainResult {
    std::vector<double> loss_trace;  // one entry per step
    double final_loss = 0.0;
};

// Minibatch training with softmax cross-entropy. Throws TrainingDiverged when
// the loss or any parameter becomes non-finite.
TrainResult train(Network& net, const Dataset& data, const TrainConfig& cfg,
                  const FreezeSpec* freeze = nullptr);

// Stateful optimizer usable step by step (train() is built on it).
class Optimizer {
public:
    Optimizer(const Network& net, const TrainConfig& cfg);
    // Applies one update in place; frozen parameters are left untouched.
    void step(Network& net, const Gradients& grads, const FreezeSpec* freeze = nullptr);

private:
    TrainConfig cfg_;
    std::size_t t_ = 0;
    std::vector<Vec> wm_, wv_, bm_, bv_;  // first/second moment (Adam) or velocity
};

// Deterministic minibatch index stream over a dataset.
class Batcher {
public:
    Batcher(std::size_t n, std::size_t batch_size, std::uint64_t seed, bool shuffle);
    std::vector<std::size_t> next();

private:
    std::size_t n_, batch_size_, pos_ = 0;
    bool shuffle_;
    Rng rng_;
    std::vector<std::size_t> order_;
};

Batch gather_batch(const Dataset& data, const std::vector<std::size_t>& idx);

// Physically remove dropped dimensions: keeps W[u^{l+1} rows, u^l cols] and
// b[u^{l+1}] per layer. Residual layers must share one mask across both ends.
Network squeeze(const Network& net, const MaskSet& masks);

struct FlopCount {
    double matmul = 0.0;
    double bias = 0.0;
    double activation = 0.0;
    double residual = 0.0;

    double total() const { return matmul + bias + activation + residual; }
};

// Per-sample cost model: matmul 2*in*out, bias out, activation out, residual
// add out.
FlopCount count_flops(const Network& net);

// Restrict dataset inputs to the given (sorted) columns.
Dataset restrict_dataset(const Dataset& data, const IndexSet& cols);

}  // namespace mipr
