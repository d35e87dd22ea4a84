#include "mobepi/hotspot_net.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mobepi::net {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void fill_uniform(Mat& m, double bound, std::mt19937_64& rng) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = (2.0 * uniform01(rng) - 1.0) * bound;
}

Vec sigmoid(const Vec& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

/// 1 - 2 / (e^{2a} + 1): stays on Eigen's vectorized exp.
Vec tanh_v(const Vec& a) { return (1.0 - 2.0 / ((2.0 * a.array()).exp() + 1.0)).matrix(); }

Vec softmax(const Vec& a) {
    const Vec e = (a.array() - a.maxCoeff()).exp().matrix();
    return e / e.sum();
}

void set_zero(NetParams& p) {
    for (auto& [name, t] : p.tensors()) t->setZero();
}

void add_into(NetParams& dst, const NetParams& src) {
    auto d = dst.tensors();
    auto s = src.tensors();
    for (std::size_t k = 0; k < d.size(); ++k) *d[k].second += *s[k].second;
}

/// Runs one LSTM direction over the columns of X. The input half of the gate
/// pre-activations is one matrix product; only W_h h_prev is sequential.
void lstm_run(const Mat& w, const Mat& b, std::size_t H, const Mat& X, bool reverse, LstmCache& cache) {
    const auto h = static_cast<Eigen::Index>(H);
    const auto T = static_cast<std::size_t>(X.cols());
    Mat ax = w.rightCols(X.rows()) * X;
    ax.colwise() += b.col(0);
    const Vec zero = Vec::Zero(h);
    for (std::size_t k = 0; k < T; ++k) {
        const std::size_t t = reverse ? T - 1 - k : k;
        const std::size_t prev = reverse ? t + 1 : t - 1;
        const Vec& hprev = k == 0 ? zero : cache.h[prev];
        const Vec& cprev = k == 0 ? zero : cache.c[prev];
        const Vec a = ax.col(static_cast<Eigen::Index>(t)) + w.leftCols(h) * hprev;
        Vec z(h + X.rows());
        z << hprev, X.col(static_cast<Eigen::Index>(t));
        cache.z[t] = std::move(z);
        cache.i[t] = sigmoid(a.segment(0, h));
        cache.f[t] = sigmoid(a.segment(h, h));
        cache.o[t] = sigmoid(a.segment(2 * h, h));
        cache.g[t] = tanh_v(a.segment(3 * h, h));
        cache.c[t] = cache.f[t].cwiseProduct(cprev) + cache.i[t].cwiseProduct(cache.g[t]);
        cache.h[t] = cache.o[t].cwiseProduct(tanh_v(cache.c[t]));
    }
}

void resize_cache(LstmCache& c, std::size_t T) {
    for (auto* v : {&c.z, &c.i, &c.f, &c.o, &c.g, &c.c, &c.h}) v->resize(T);
}

ForwardTrace forward_unchecked(const RegionSample& sample, const NetParams& p, const ForwardOptions& opts) {
    const auto& shape = p.shape;
    const std::size_t T = sample.steps.size();
    const std::size_t H = shape.hidden;
    const auto ld = static_cast<Eigen::Index>(shape.loc_dim);
    const auto td = static_cast<Eigen::Index>(shape.time_dim);
    ForwardTrace tr;

    tr.x.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        const Step& s = sample.steps[t];
        Vec x(ld + td);
        x.head(ld) = p.loc_embed.col(static_cast<Eigen::Index>(s.location));
        x.tail(td) = p.time_proj.col(static_cast<Eigen::Index>(s.day)) +
                     p.time_proj.col(static_cast<Eigen::Index>(embed::kDays + s.hour)) +
                     p.time_proj.col(static_cast<Eigen::Index>(embed::kDays + embed::kHours + s.duration_bucket));
        tr.x[t] = std::move(x);
    }

    Mat X(ld + td, static_cast<Eigen::Index>(T));
    for (std::size_t t = 0; t < T; ++t) X.col(static_cast<Eigen::Index>(t)) = tr.x[t];
    resize_cache(tr.fwd, T);
    lstm_run(p.lstm_fwd_w, p.lstm_fwd_b, H, X, false, tr.fwd);
    tr.h = tr.fwd.h;
    if (!opts.flags.no_bilstm) {
        resize_cache(tr.bwd, T);
        lstm_run(p.lstm_bwd_w, p.lstm_bwd_b, H, X, true, tr.bwd);
        for (std::size_t t = 0; t < T; ++t) tr.h[t] += tr.bwd.h[t];
    }

    tr.context = Eigen::Map<const Vec>(sample.context.data(), static_cast<Eigen::Index>(sample.context.size()));
    if (opts.flags.no_pkg_features)
        for (std::size_t k = 0; k <= ctx::pkg_last && k < sample.context.size(); ++k)
            tr.context(static_cast<Eigen::Index>(k)) = 0.0;

    auto& g = tr.gru;
    for (auto* v : {&g.zin, &g.z, &g.r, &g.n, &g.h}) v->resize(T);
    const auto h = static_cast<Eigen::Index>(H);
    const auto m = tr.context.size();
    // Non-recurrent half [h_t; m] of every gate, one product per gate.
    Mat U(h + m, static_cast<Eigen::Index>(T));
    for (std::size_t t = 0; t < T; ++t) U.col(static_cast<Eigen::Index>(t)) << tr.h[t], tr.context;
    const Mat uz = p.gru_wz.rightCols(h + m) * U;
    const Mat ur = p.gru_wr.rightCols(h + m) * U;
    const Mat un = p.gru_wh.rightCols(h + m) * U;
    const Vec zero = Vec::Zero(h);
    for (std::size_t t = 0; t < T; ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        const Vec& hp = t == 0 ? zero : g.h[t - 1];
        g.z[t] = sigmoid(uz.col(ti) + p.gru_wz.leftCols(h) * hp);
        g.r[t] = sigmoid(ur.col(ti) + p.gru_wr.leftCols(h) * hp);
        const Vec rh = g.r[t].cwiseProduct(hp);
        g.n[t] = tanh_v(un.col(ti) + p.gru_wh.leftCols(h) * rh);
        g.h[t] = (Vec::Ones(h) - g.z[t]).cwiseProduct(hp) + g.z[t].cwiseProduct(g.n[t]);
        Vec zin(2 * h + m);
        zin << hp, U.col(ti);
        g.zin[t] = std::move(zin);
    }

    tr.pooled = Vec::Zero(h);
    if (opts.flags.no_attention) {
        for (std::size_t t = 0; t < T; ++t) tr.pooled += g.h[t];
        tr.pooled /= static_cast<double>(T);
    } else {
        Vec s(static_cast<Eigen::Index>(T));
        for (std::size_t t = 0; t < T; ++t) {
            double v = g.h[t].dot(tr.h[t]);
            if (!opts.flags.no_two_phase) v += opts.air_attention_bias * sample.steps[t].air;
            s(static_cast<Eigen::Index>(t)) = v;
        }
        const Vec a = softmax(s);
        tr.scores.assign(s.data(), s.data() + s.size());
        tr.attention.assign(a.data(), a.data() + a.size());
        for (std::size_t t = 0; t < T; ++t) tr.pooled += a(static_cast<Eigen::Index>(t)) * g.h[t];
    }

    tr.logits = p.out_w * tr.pooled + p.out_b.col(0);
    tr.probs = softmax(tr.logits);
    return tr;
}

void lstm_backward(const Mat& w, Mat& gw, Mat& gb, const LstmCache& c, const std::vector<Vec>& dh, bool reverse,
                   std::size_t H, std::vector<Vec>& dx) {
    const std::size_t T = dh.size();
    const auto h = static_cast<Eigen::Index>(H);
    const auto zdim = w.cols();
    Vec carry_h = Vec::Zero(h), carry_c = Vec::Zero(h);
    Mat DA(4 * h, static_cast<Eigen::Index>(T)), Z(zdim, static_cast<Eigen::Index>(T));
    for (std::size_t k = 0; k < T; ++k) {
        // Visit positions in the opposite order of the forward recurrence.
        const std::size_t t = reverse ? k : T - 1 - k;
        const bool first = reverse ? t + 1 == T : t == 0;
        const std::size_t prev = reverse ? t + 1 : t - 1;
        Vec cprev = Vec::Zero(h);
        if (!first) cprev = c.c[prev];

        const Vec dhh = dh[t] + carry_h;
        const Vec tc = tanh_v(c.c[t]);
        const Vec dc = carry_c + dhh.cwiseProduct(c.o[t]).cwiseProduct((1.0 - tc.array().square()).matrix());
        const Vec d_o = dhh.cwiseProduct(tc);
        const Vec d_i = dc.cwiseProduct(c.g[t]);
        const Vec d_g = dc.cwiseProduct(c.i[t]);
        const Vec d_f = dc.cwiseProduct(cprev);
        carry_c = dc.cwiseProduct(c.f[t]);

        auto da = DA.col(static_cast<Eigen::Index>(t));
        da.segment(0, h) = d_i.array() * c.i[t].array() * (1.0 - c.i[t].array());
        da.segment(h, h) = d_f.array() * c.f[t].array() * (1.0 - c.f[t].array());
        da.segment(2 * h, h) = d_o.array() * c.o[t].array() * (1.0 - c.o[t].array());
        da.segment(3 * h, h) = d_g.array() * (1.0 - c.g[t].array().square());
        Z.col(static_cast<Eigen::Index>(t)) = c.z[t];
        carry_h.noalias() = w.leftCols(h).transpose() * da;
    }
    gw.noalias() += DA * Z.transpose();
    gb.col(0) += DA.rowwise().sum();
    const Mat DX = w.rightCols(zdim - h).transpose() * DA;
    for (std::size_t t = 0; t < T; ++t) dx[t] += DX.col(static_cast<Eigen::Index>(t));
}

}  // namespace

NetParams NetParams::zeros(const NetShape& s) {
    require(s.locations > 0 && s.loc_dim > 0 && s.time_dim > 0 && s.hidden > 0, "network dimensions must be positive");
    const auto H = static_cast<Eigen::Index>(s.hidden);
    const auto X = static_cast<Eigen::Index>(s.input());
    const auto G = static_cast<Eigen::Index>(2 * s.hidden + s.context);
    NetParams p;
    p.shape = s;
    p.loc_embed = Mat::Zero(static_cast<Eigen::Index>(s.loc_dim), static_cast<Eigen::Index>(s.locations));
    p.time_proj = Mat::Zero(static_cast<Eigen::Index>(s.time_dim), static_cast<Eigen::Index>(embed::kTemporalOneHot));
    p.lstm_fwd_w = Mat::Zero(4 * H, H + X);
    p.lstm_fwd_b = Mat::Zero(4 * H, 1);
    p.lstm_bwd_w = Mat::Zero(4 * H, H + X);
    p.lstm_bwd_b = Mat::Zero(4 * H, 1);
    p.gru_wz = Mat::Zero(H, G);
    p.gru_wr = Mat::Zero(H, G);
    p.gru_wh = Mat::Zero(H, G);
    p.out_w = Mat::Zero(static_cast<Eigen::Index>(kNumClasses), H);
    p.out_b = Mat::Zero(static_cast<Eigen::Index>(kNumClasses), 1);
    return p;
}

NetParams NetParams::random(const NetShape& s, std::uint64_t seed) {
    NetParams p = zeros(s);
    std::mt19937_64 rng(seed);
    const double k = 1.0 / std::sqrt(static_cast<double>(s.hidden));
    fill_uniform(p.loc_embed, 0.5, rng);
    fill_uniform(p.time_proj, 0.5, rng);
    fill_uniform(p.lstm_fwd_w, k, rng);
    fill_uniform(p.lstm_bwd_w, k, rng);
    const auto H = static_cast<Eigen::Index>(s.hidden);
    p.lstm_fwd_b.block(H, 0, H, 1).setOnes();
    p.lstm_bwd_b.block(H, 0, H, 1).setOnes();
    fill_uniform(p.gru_wz, k, rng);
    fill_uniform(p.gru_wr, k, rng);
    fill_uniform(p.gru_wh, k, rng);
    fill_uniform(p.out_w, k, rng);
    return p;
}

std::vector<std::pair<std::string, Mat*>> NetParams::tensors() {
    return {{"loc_embed", &loc_embed}, {"time_proj", &time_proj}, {"lstm_fwd_w", &lstm_fwd_w},
            {"lstm_fwd_b", &lstm_fwd_b}, {"lstm_bwd_w", &lstm_bwd_w}, {"lstm_bwd_b", &lstm_bwd_b},
            {"gru_wz", &gru_wz},         {"gru_wr", &gru_wr},         {"gru_wh", &gru_wh},
            {"out_w", &out_w},           {"out_b", &out_b}};
}

std::vector<std::pair<std::string, const Mat*>> NetParams::tensors() const {
    std::vector<std::pair<std::string, const Mat*>> out;
    for (auto& [n, t] : const_cast<NetParams*>(this)->tensors()) out.emplace_back(n, t);
    return out;
}

std::size_t NetParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors()) n += static_cast<std::size_t>(t->size());
    return n;
}

bool NetParams::all_finite() const {
    for (const auto& [name, t] : tensors())
        if (!t->allFinite()) return false;
    return true;
}

void validate_sample(const RegionSample& s, const NetShape& shape) {
    const std::string where = "sample '" + s.region + "': ";
    if (s.steps.empty()) fail(ErrorKind::invalid_input, where + "needs at least one step");
    if (s.context.size() != shape.context)
        fail(ErrorKind::invalid_input, where + "context has " + std::to_string(s.context.size()) +
                                           " values, expected " + std::to_string(shape.context));
    for (double v : s.context)
        if (!std::isfinite(v)) fail(ErrorKind::invalid_input, where + "context value is not finite");
    for (const Step& st : s.steps) {
        if (st.location >= shape.locations)
            fail(ErrorKind::invalid_input, where + "location index " + std::to_string(st.location) + " out of range");
        if (st.day >= embed::kDays || st.hour >= embed::kHours || st.duration_bucket >= embed::kDurationBuckets)
            fail(ErrorKind::invalid_input, where + "temporal slot out of range");
        if (!std::isfinite(st.air)) fail(ErrorKind::invalid_input, where + "air connectivity is not finite");
    }
}

ForwardTrace forward(const RegionSample& sample, const NetParams& params, const ForwardOptions& opts) {
    validate_sample(sample, params.shape);
    return forward_unchecked(sample, params, opts);
}

void backward(const RegionSample& sample, const NetParams& p, const ForwardTrace& tr, const ForwardOptions& opts,
              double scale, NetParams& grads) {
    const std::size_t T = sample.steps.size();
    const std::size_t H = p.shape.hidden;
    const auto h = static_cast<Eigen::Index>(H);
    const auto ld = static_cast<Eigen::Index>(p.shape.loc_dim);
    const auto td = static_cast<Eigen::Index>(p.shape.time_dim);

    Vec dlog = tr.probs;
    dlog(static_cast<Eigen::Index>(sample.label)) -= 1.0;
    dlog *= scale;
    grads.out_w.noalias() += dlog * tr.pooled.transpose();
    grads.out_b.col(0) += dlog;
    const Vec dpool = p.out_w.transpose() * dlog;

    const auto& g = tr.gru;
    std::vector<Vec> dhp(T, Vec::Zero(h)), dh(T, Vec::Zero(h));
    if (opts.flags.no_attention) {
        for (std::size_t t = 0; t < T; ++t) dhp[t] = dpool / static_cast<double>(T);
    } else {
        std::vector<double> dalpha(T);
        double mix = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            dalpha[t] = dpool.dot(g.h[t]);
            mix += tr.attention[t] * dalpha[t];
        }
        for (std::size_t t = 0; t < T; ++t) {
            const double ds = tr.attention[t] * (dalpha[t] - mix);
            dhp[t] = tr.attention[t] * dpool + ds * tr.h[t];
            dh[t] += ds * g.h[t];
        }
    }

    const auto zdim = p.gru_wz.cols();
    const auto Ti = static_cast<Eigen::Index>(T);
    Mat DN(h, Ti), DZ(h, Ti), DR(h, Ti), ZIN(zdim, Ti), ZR(zdim, Ti);
    Vec carry = Vec::Zero(h);
    for (std::size_t t = T; t-- > 0;) {
        const auto ti = static_cast<Eigen::Index>(t);
        const Vec dH = dhp[t] + carry;
        const Vec hprev = g.zin[t].head(h);
        const Vec dn = dH.cwiseProduct(g.z[t]);
        const Vec dz = dH.cwiseProduct(g.n[t] - hprev);
        Vec dhprev = dH.cwiseProduct(Vec::Ones(h) - g.z[t]);

        DN.col(ti) = dn.array() * (1.0 - g.n[t].array().square());
        const Vec drh = p.gru_wh.leftCols(h).transpose() * DN.col(ti);
        const Vec dr = drh.cwiseProduct(hprev);
        dhprev += drh.cwiseProduct(g.r[t]);
        DZ.col(ti) = dz.array() * g.z[t].array() * (1.0 - g.z[t].array());
        DR.col(ti) = dr.array() * g.r[t].array() * (1.0 - g.r[t].array());
        dhprev.noalias() += p.gru_wz.leftCols(h).transpose() * DZ.col(ti);
        dhprev.noalias() += p.gru_wr.leftCols(h).transpose() * DR.col(ti);
        ZIN.col(ti) = g.zin[t];
        ZR.col(ti) = g.zin[t];
        ZR.col(ti).head(h) = g.r[t].cwiseProduct(hprev);
        carry = dhprev;
    }
    grads.gru_wh.noalias() += DN * ZR.transpose();
    grads.gru_wz.noalias() += DZ * ZIN.transpose();
    grads.gru_wr.noalias() += DR * ZIN.transpose();
    const auto udim = zdim - h;
    Mat DU = p.gru_wh.rightCols(udim).transpose() * DN;
    DU.noalias() += p.gru_wz.rightCols(udim).transpose() * DZ;
    DU.noalias() += p.gru_wr.rightCols(udim).transpose() * DR;
    for (std::size_t t = 0; t < T; ++t) dh[t] += DU.col(static_cast<Eigen::Index>(t)).head(h);

    std::vector<Vec> dx(T, Vec::Zero(ld + td));
    lstm_backward(p.lstm_fwd_w, grads.lstm_fwd_w, grads.lstm_fwd_b, tr.fwd, dh, false, H, dx);
    if (!opts.flags.no_bilstm) lstm_backward(p.lstm_bwd_w, grads.lstm_bwd_w, grads.lstm_bwd_b, tr.bwd, dh, true, H, dx);

    for (std::size_t t = 0; t < T; ++t) {
        const Step& s = sample.steps[t];
        grads.loc_embed.col(static_cast<Eigen::Index>(s.location)) += dx[t].head(ld);
        const Vec dt = dx[t].tail(td);
        grads.time_proj.col(static_cast<Eigen::Index>(s.day)) += dt;
        grads.time_proj.col(static_cast<Eigen::Index>(embed::kDays + s.hour)) += dt;
        grads.time_proj.col(static_cast<Eigen::Index>(embed::kDays + embed::kHours + s.duration_bucket)) += dt;
    }
}

double cross_entropy_loss(const std::vector<std::vector<double>>& pred, const std::vector<std::vector<double>>& truth) {
    require(!pred.empty(), "cross entropy needs at least one sample");
    require(pred.size() == truth.size(), "prediction and truth counts differ");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        require(pred[i].size() == truth[i].size(), "prediction and truth widths differ");
        for (std::size_t j = 0; j < pred[i].size(); ++j) {
            if (truth[i][j] == 0.0) continue;
            total -= truth[i][j] * std::log(std::max(pred[i][j], kProbFloor));
        }
    }
    return total / static_cast<double>(pred.size());
}

double cross_entropy(const Vec& probs, HotspotClass label) {
    return -std::log(std::max(probs(static_cast<Eigen::Index>(label)), kProbFloor));
}

namespace {

/// `per` holds one gradient buffer per sample; reused across calls by train().
double batch_impl(const std::vector<const RegionSample*>& batch, const NetParams& params, const ForwardOptions& opts,
                  NetParams& grads, bool parallel, std::vector<NetParams>& per) {
    require(!batch.empty(), "batch is empty");
    for (const auto* s : batch) validate_sample(*s, params.shape);
    const auto n = static_cast<std::ptrdiff_t>(batch.size());
    const double scale = 1.0 / static_cast<double>(batch.size());
    if (per.size() < batch.size() || (!per.empty() && !(per.front().shape == params.shape)))
        per.assign(batch.size(), NetParams::zeros(params.shape));
    for (std::size_t i = 0; i < batch.size(); ++i) set_zero(per[i]);
    std::vector<double> losses(batch.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto tr = forward_unchecked(*batch[i], params, opts);
        losses[i] = cross_entropy(tr.probs, batch[i]->label);
        backward(*batch[i], params, tr, opts, scale, per[i]);
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        add_into(grads, per[i]);
        loss += losses[i];
    }
    return loss * scale;
}

}  // namespace

double batch_loss_and_gradient(const std::vector<const RegionSample*>& batch, const NetParams& params,
                               const ForwardOptions& opts, NetParams& grads) {
    std::vector<NetParams> per;
    return batch_impl(batch, params, opts, grads, true, per);
}

double batch_loss_and_gradient_serial(const std::vector<const RegionSample*>& batch, const NetParams& params,
                                      const ForwardOptions& opts, NetParams& grads) {
    std::vector<NetParams> per;
    return batch_impl(batch, params, opts, grads, false, per);
}

double batch_loss(const std::vector<RegionSample>& samples, const NetParams& params, const ForwardOptions& opts) {
    require(!samples.empty(), "no samples");
    double loss = 0.0;
    for (const auto& s : samples) loss += cross_entropy(forward(s, params, opts).probs, s.label);
    return loss / static_cast<double>(samples.size());
}

std::vector<Vec> forward_batch(const std::vector<RegionSample>& samples, const NetParams& params,
                               const ForwardOptions& opts) {
    for (const auto& s : samples) validate_sample(s, params.shape);
    std::vector<Vec> out(samples.size());
    const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = forward_unchecked(samples[i], params, opts).probs;
    return out;
}

ForwardOptions options_for(const TrainConfig& cfg) { return {cfg.flags, cfg.air_attention_bias}; }

TrainResult train(const std::vector<RegionSample>& dataset, std::size_t locations, const TrainConfig& cfg) {
    require(!dataset.empty(), "training set is empty");
    require(cfg.batch_size > 0 && cfg.epochs > 0 && cfg.cell_size > 0, "batch size, epochs and cell size must be positive");
    require(cfg.step_size > 0 && cfg.beta1 >= 0 && cfg.beta1 < 1 && cfg.beta2 >= 0 && cfg.beta2 < 1 && cfg.epsilon > 0,
            "invalid Adam hyper-parameters");
    NetShape shape{locations, cfg.loc_dim, cfg.time_dim, cfg.cell_size, dataset.front().context.size()};
    std::set<HotspotClass> labels;
    for (const auto& s : dataset) {
        validate_sample(s, shape);
        labels.insert(s.label);
    }
    if (labels.size() < 2)
        fail(ErrorKind::invalid_input, "training set has a single class (" +
                                           std::string(to_string(*labels.begin())) + "); need at least two");

    const ForwardOptions opts = options_for(cfg);
    TrainResult res{NetParams::random(shape, cfg.seed), {}};
    NetParams m1 = NetParams::zeros(shape), m2 = NetParams::zeros(shape), grads = NetParams::zeros(shape);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<NetParams> per;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::vector<const RegionSample*> batch;
            for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k)
                batch.push_back(&dataset[order[k]]);
            set_zero(grads);
            epoch_loss += batch_impl(batch, res.params, opts, grads, true, per) * static_cast<double>(batch.size());

            ++step;
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            auto theta = res.params.tensors();
            auto g = grads.tensors();
            auto a = m1.tensors();
            auto b = m2.tensors();
            for (std::size_t k = 0; k < theta.size(); ++k) {
                auto& mt = *a[k].second;
                auto& vt = *b[k].second;
                const auto& gt = *g[k].second;
                mt = cfg.beta1 * mt + (1.0 - cfg.beta1) * gt;
                vt = cfg.beta2 * vt + (1.0 - cfg.beta2) * gt.cwiseProduct(gt);
                theta[k].second->array() -=
                    cfg.step_size * (mt.array() / c1) / ((vt.array() / c2).sqrt() + cfg.epsilon);
            }
        }
        res.loss_curve.push_back(epoch_loss / static_cast<double>(dataset.size()));
        if (!std::isfinite(res.loss_curve.back()) || !res.params.all_finite())
            fail(ErrorKind::invalid_input, "training diverged at epoch " + std::to_string(epoch + 1));
    }
    return res;
}

HotspotClass predict(const RegionSample& sample, const NetParams& params, const ForwardOptions& opts) {
    const Vec p = forward(sample, params, opts).probs;
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    return static_cast<HotspotClass>(best);
}

double accuracy(const std::vector<RegionSample>& samples, const NetParams& params, const ForwardOptions& opts) {
    require(!samples.empty(), "no samples");
    const auto probs = forward_batch(samples, params, opts);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        Eigen::Index best = 0;
        probs[i].maxCoeff(&best);
        if (static_cast<HotspotClass>(best) == samples[i].label) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(samples.size());
}

GradientReport gradient_check(const NetParams& params, const std::vector<RegionSample>& samples, double epsilon,
                              const ForwardOptions& opts) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-4))
        fail(ErrorKind::invalid_input, "gradient check epsilon must lie in [1e-7, 1e-4], got " + format_double(epsilon));
    require(!samples.empty(), "gradient check needs samples");
    std::vector<const RegionSample*> batch;
    for (const auto& s : samples) batch.push_back(&s);
    NetParams analytic = NetParams::zeros(params.shape);
    batch_loss_and_gradient_serial(batch, params, opts, analytic);

    NetParams probe = params;
    GradientReport rep;
    auto probe_t = probe.tensors();
    auto grad_t = analytic.tensors();
    for (std::size_t k = 0; k < probe_t.size(); ++k) {
        Mat& theta = *probe_t[k].second;
        const Mat& ga = *grad_t[k].second;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            const double orig = theta.data()[i];
            theta.data()[i] = orig + epsilon;
            const double up = batch_loss(samples, probe, opts);
            theta.data()[i] = orig - epsilon;
            const double down = batch_loss(samples, probe, opts);
            theta.data()[i] = orig;
            const double num = (up - down) / (2.0 * epsilon);
            const double a = ga.data()[i];
            worst = std::max(worst, std::abs(a - num) / std::max(std::abs(a) + std::abs(num), 1e-6));
        }
        rep.per_tensor.emplace_back(probe_t[k].first, worst);
        if (worst >= rep.max_rel_error) {
            rep.max_rel_error = worst;
            rep.worst_tensor = probe_t[k].first;
        }
    }
    return rep;
}

void save_params(const NetParams& params, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::io, "cannot write " + path);
    const auto& s = params.shape;
    os << "mobepi-params v1\n";
    os << "shape " << s.locations << ' ' << s.loc_dim << ' ' << s.time_dim << ' ' << s.hidden << ' ' << s.context
       << '\n';
    for (const auto& [name, t] : params.tensors()) {
        os << "tensor " << name << ' ' << t->rows() << ' ' << t->cols() << '\n';
        for (Eigen::Index r = 0; r < t->rows(); ++r) {
            for (Eigen::Index c = 0; c < t->cols(); ++c) os << (c ? " " : "") << format_double((*t)(r, c));
            os << '\n';
        }
    }
    if (!os) fail(ErrorKind::io, "failed writing " + path);
}

NetParams load_params(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::io, "cannot read " + path);
    std::string line;
    std::size_t lineno = 0;
    auto next = [&]() -> std::string {
        if (!std::getline(is, line)) fail(ErrorKind::parse, path + ": unexpected end of file");
        ++lineno;
        return line;
    };
    auto bad = [&](const std::string& what) { fail(ErrorKind::parse, path + ":" + std::to_string(lineno) + ": " + what); };
    if (trim(next()) != "mobepi-params v1") bad("unsupported parameter file header");
    std::istringstream sh(next());
    std::string tag;
    NetShape s;
    if (!(sh >> tag >> s.locations >> s.loc_dim >> s.time_dim >> s.hidden >> s.context) || tag != "shape")
        bad("malformed shape line");
    NetParams p = NetParams::zeros(s);
    for (auto& [name, t] : p.tensors()) {
        std::istringstream th(next());
        std::string tname;
        Eigen::Index rows = 0, cols = 0;
        if (!(th >> tag >> tname >> rows >> cols) || tag != "tensor") bad("malformed tensor line");
        if (tname != name) bad("expected tensor " + name + ", found " + tname);
        if (rows != t->rows() || cols != t->cols()) bad("tensor " + name + " has the wrong dimensions");
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto fields = split(trim(next()), ' ');
            if (static_cast<Eigen::Index>(fields.size()) != cols) bad("wrong number of values in " + name);
            for (Eigen::Index c = 0; c < cols; ++c) {
                double v = 0.0;
                try {
                    v = parse_double(fields[static_cast<std::size_t>(c)]);
                } catch (const Error&) {
                    bad("bad value in " + name);
                }
                if (!std::isfinite(v)) bad("bad value in " + name);
                (*t)(r, c) = v;
            }
        }
    }
    return p;
}

std::string sample_to_json_line(const RegionSample& s) {
    nlohmann::json j;
    j["region"] = s.region;
    j["label"] = to_string(s.label);
    j["context"] = s.context;
    auto steps = nlohmann::json::array();
    for (const Step& st : s.steps)
        steps.push_back({{"loc", st.location}, {"day", st.day}, {"hour", st.hour}, {"dur", st.duration_bucket},
                         {"air", st.air}});
    j["steps"] = steps;
    return j.dump();
}

RegionSample sample_from_json_line(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        RegionSample s;
        s.region = j.at("region").get<std::string>();
        s.label = parse_class(j.at("label").get<std::string>());
        s.context = j.at("context").get<std::vector<double>>();
        for (const auto& st : j.at("steps"))
            s.steps.push_back({st.at("loc").get<std::size_t>(), st.at("day").get<std::size_t>(),
                               st.at("hour").get<std::size_t>(), st.at("dur").get<std::size_t>(),
                               st.at("air").get<double>()});
        return s;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, std::string("bad sample record: ") + e.what());
    }
}

void save_dataset(const std::vector<RegionSample>& samples, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::io, "cannot write " + path);
    for (const auto& s : samples) os << sample_to_json_line(s) << '\n';
}

std::vector<RegionSample> load_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::io, "cannot read " + path);
    std::vector<RegionSample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(sample_from_json_line(line));
        } catch (const Error& e) {
            fail(ErrorKind::parse, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace mobepi::net
