#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mobepi/embeddings.hpp"
#include "mobepi/hotspot_label.hpp"

namespace mobepi::net {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Fixed layout of the per-region context vector m.
namespace ctx {
inline constexpr std::size_t sc_first = 0;  // six SC values, metric enum order
inline constexpr std::size_t sc_count = 6;
inline constexpr std::size_t pattern_cascading = 6;
inline constexpr std::size_t pattern_cooccurrence = 7;
inline constexpr std::size_t connectivity = 8;
inline constexpr std::size_t population_density = 9;
inline constexpr std::size_t literacy = 10;
inline constexpr std::size_t medical = 11;
inline constexpr std::size_t poi_hospital = 12;
inline constexpr std::size_t poi_commercial = 13;
inline constexpr std::size_t poi_transit = 14;
inline constexpr std::size_t mobility_delta = 15;
inline constexpr std::size_t aggregate_flow = 16;
inline constexpr std::size_t neighbor_hotspot_14d = 17;
inline constexpr std::size_t recent_cases = 18;
inline constexpr std::size_t width = 19;
/// Entries zeroed by the no_pkg_features ablation (SC values and pattern flags).
inline constexpr std::size_t pkg_last = 7;
}  // namespace ctx

struct Step {
    std::size_t location = 0;  // index into the location vocabulary
    std::size_t day = 0;
    std::size_t hour = 0;
    std::size_t duration_bucket = 0;
    double air = 0.0;  // air-connectivity index of this step, drives the two-phase attention bias
};

struct RegionSample {
    std::string region;
    std::vector<Step> steps;
    std::vector<double> context;
    HotspotClass label = HotspotClass::none;
};

struct AblationFlags {
    bool no_pkg_features = false;
    bool no_attention = false;
    bool no_bilstm = false;
    bool no_two_phase = false;
};

struct ForwardOptions {
    AblationFlags flags;
    double air_attention_bias = 3.0;
};

struct NetShape {
    std::size_t locations = 1;
    std::size_t loc_dim = 8;
    std::size_t time_dim = 4;
    std::size_t hidden = 64;
    std::size_t context = ctx::width;

    std::size_t input() const { return loc_dim + time_dim; }
    std::size_t gru_input() const { return hidden + context; }
    friend bool operator==(const NetShape&, const NetShape&) = default;
};

/// Every trainable tensor. LSTM gate blocks are stacked row-wise in the order
/// input, forget, output, candidate; each acts on [h_{t-1}; x_t].
struct NetParams {
    NetShape shape;
    Mat loc_embed;   // loc_dim x locations
    Mat time_proj;   // time_dim x 37 (day | hour | duration one-hots)
    Mat lstm_fwd_w;  // 4H x (H + X)
    Mat lstm_fwd_b;  // 4H x 1
    Mat lstm_bwd_w;
    Mat lstm_bwd_b;
    Mat gru_wz;  // H x (H + H + M), acting on [h'_{t-1}; h_t; m]
    Mat gru_wr;
    Mat gru_wh;
    Mat out_w;  // 5 x H
    Mat out_b;  // 5 x 1

    static NetParams zeros(const NetShape& shape);
    static NetParams random(const NetShape& shape, std::uint64_t seed);

    std::vector<std::pair<std::string, Mat*>> tensors();
    std::vector<std::pair<std::string, const Mat*>> tensors() const;
    std::size_t parameter_count() const;
    bool all_finite() const;
};

struct LstmCache {
    std::vector<Vec> z;  // [h_prev; x]
    std::vector<Vec> i, f, o, g, c, h;
};

struct GruCache {
    std::vector<Vec> zin;  // [h'_prev; u]
    std::vector<Vec> z, r, n, h;
};

struct ForwardTrace {
    std::vector<Vec> x;
    LstmCache fwd, bwd;
    std::vector<Vec> h;  // bi-LSTM output per step
    Vec context;         // m after ablation masking
    GruCache gru;
    std::vector<double> scores;
    std::vector<double> attention;  // empty under no_attention
    Vec pooled;                     // r_att (or the mean under no_attention)
    Vec logits;
    Vec probs;
};

/// Embedding -> bi-LSTM (forward + backward sum) -> GRU over [h_t; m] ->
/// dot-product attention softmax(h'_t . h_t [+ bias * air_t]) pooling h'_t ->
/// softmax(W' r + b') over C1..C4, NONE.
ForwardTrace forward(const RegionSample& sample, const NetParams& params, const ForwardOptions& opts);

/// Adds d(loss)/d(params) of one sample, scaled by `scale`, into grads.
void backward(const RegionSample& sample, const NetParams& params, const ForwardTrace& trace,
              const ForwardOptions& opts, double scale, NetParams& grads);

inline constexpr double kProbFloor = 1e-12;

/// -sum_j y'_j log y_j per sample (probabilities floored at 1e-12), averaged over the batch.
double cross_entropy_loss(const std::vector<std::vector<double>>& pred, const std::vector<std::vector<double>>& truth);
double cross_entropy(const Vec& probs, HotspotClass label);

/// Mean loss over the batch. Per-sample gradients are computed in parallel into
/// private buffers and summed in sample order, so the result does not depend
/// on the thread count.
double batch_loss_and_gradient(const std::vector<const RegionSample*>& batch, const NetParams& params,
                               const ForwardOptions& opts, NetParams& grads);

/// Same contract, one sample after another on the calling thread.
double batch_loss_and_gradient_serial(const std::vector<const RegionSample*>& batch, const NetParams& params,
                                      const ForwardOptions& opts, NetParams& grads);

double batch_loss(const std::vector<RegionSample>& samples, const NetParams& params, const ForwardOptions& opts);

/// Probabilities for each sample, independent of batch composition.
std::vector<Vec> forward_batch(const std::vector<RegionSample>& samples, const NetParams& params,
                               const ForwardOptions& opts);

struct TrainConfig {
    std::size_t cell_size = 64;
    std::size_t batch_size = 10;
    std::size_t epochs = 100;
    std::uint64_t seed = 1;
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t loc_dim = 8;
    std::size_t time_dim = 4;
    double air_attention_bias = 3.0;
    AblationFlags flags;
};

struct TrainResult {
    NetParams params;
    std::vector<double> loss_curve;  // mean training loss per epoch
};

void validate_sample(const RegionSample& s, const NetShape& shape);

/// Seeded Adam over shuffled mini-batches. Needs at least two distinct labels.
TrainResult train(const std::vector<RegionSample>& dataset, std::size_t locations, const TrainConfig& cfg);

ForwardOptions options_for(const TrainConfig& cfg);

HotspotClass predict(const RegionSample& sample, const NetParams& params, const ForwardOptions& opts);
double accuracy(const std::vector<RegionSample>& samples, const NetParams& params, const ForwardOptions& opts);

struct GradientReport {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    std::vector<std::pair<std::string, double>> per_tensor;
};

/// Central differences against backprop for every element of every tensor.
/// Relative error |a - n| / max(|a| + |n|, 1e-6). epsilon must lie in [1e-7, 1e-4].
GradientReport gradient_check(const NetParams& params, const std::vector<RegionSample>& samples, double epsilon,
                              const ForwardOptions& opts);

void save_params(const NetParams& params, const std::string& path);
NetParams load_params(const std::string& path);

std::string sample_to_json_line(const RegionSample& s);
RegionSample sample_from_json_line(const std::string& line);
void save_dataset(const std::vector<RegionSample>& samples, const std::string& path);
std::vector<RegionSample> load_dataset(const std::string& path);

}  // namespace mobepi::net
