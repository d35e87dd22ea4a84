#include "mobepi/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace mobepi::embed {

void validate(const EmbedConfig& cfg) {
    require(cfg.dim >= 2, "embedding dim must be >= 2");
    require(cfg.window >= 1, "context window must be >= 1");
    require(cfg.learning_rate > 0, "learning_rate must be > 0");
}

std::size_t EmbeddingTable::index_of(const std::string& id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) fail(ErrorKind::not_found, "unknown location " + id);
    return static_cast<std::size_t>(it - ids.begin());
}

EmbeddingTable init_table(const Corpus& corpus, std::size_t dim, std::uint64_t seed) {
    std::set<std::string> vocab;
    for (const auto& seq : corpus) vocab.insert(seq.begin(), seq.end());
    EmbeddingTable t;
    t.ids.assign(vocab.begin(), vocab.end());
    t.dim = dim;
    std::mt19937_64 rng(seed);
    const double half = 0.5 / static_cast<double>(dim);
    std::uniform_real_distribution<double> u(-half, half);
    t.input.resize(t.ids.size() * dim);
    t.output.resize(t.ids.size() * dim);
    for (double& v : t.input) v = u(rng);
    for (double& v : t.output) v = u(rng);
    return t;
}

namespace {

using Encoded = std::vector<std::vector<std::size_t>>;

Encoded encode(const EmbeddingTable& table, const Corpus& corpus) {
    Encoded out;
    for (const auto& seq : corpus) {
        std::vector<std::size_t> row;
        for (const auto& id : seq) row.push_back(table.index_of(id));
        out.push_back(std::move(row));
    }
    return out;
}

std::size_t token_count(const Corpus& corpus) {
    std::size_t t = 0;
    for (const auto& s : corpus) t += s.size();
    return t;
}

void softmax_scores(const EmbeddingTable& table, std::size_t center, std::vector<double>& p) {
    const std::size_t n = table.size(), d = table.dim;
    p.resize(n);
    const double* v = table.in_row(center);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double* u = table.out_row(i);
        double s = 0;
        for (std::size_t k = 0; k < d; ++k) s += u[k] * v[k];
        p[i] = s;
        mx = std::max(mx, s);
    }
    double z = 0;
    for (double& x : p) {
        x = std::exp(x - mx);
        z += x;
    }
    for (double& x : p) x /= z;
}

template <typename Fn>
void for_each_context(const std::vector<std::size_t>& seq, std::size_t t, std::size_t window, Fn&& fn) {
    const std::size_t lo = t >= window ? t - window : 0;
    const std::size_t hi = std::min(seq.size() - 1, t + window);
    for (std::size_t j = lo; j <= hi; ++j)
        if (j != t) fn(seq[j]);
}

}  // namespace

double skipgram_objective(const EmbeddingTable& table, const Corpus& corpus, std::size_t window) {
    const auto enc = encode(table, corpus);
    std::vector<double> p;
    double total = 0;
    for (const auto& seq : enc)
        for (std::size_t t = 0; t < seq.size(); ++t) {
            softmax_scores(table, seq[t], p);
            for_each_context(seq, t, window, [&](std::size_t ctx) { total += std::log(p[ctx]); });
        }
    return total / static_cast<double>(token_count(corpus));
}

std::pair<std::vector<double>, std::vector<double>> skipgram_gradient(const EmbeddingTable& table,
                                                                      const Corpus& corpus, std::size_t window) {
    const auto enc = encode(table, corpus);
    const std::size_t n = table.size(), d = table.dim;
    std::vector<double> g_in(table.input.size(), 0.0), g_out(table.output.size(), 0.0);
    std::vector<double> p;
    const double scale = 1.0 / static_cast<double>(token_count(corpus));
    for (const auto& seq : enc)
        for (std::size_t t = 0; t < seq.size(); ++t) {
            const std::size_t c = seq[t];
            softmax_scores(table, c, p);
            std::vector<double> hits(n, 0.0);
            double contexts = 0;
            for_each_context(seq, t, window, [&](std::size_t ctx) {
                hits[ctx] += 1;
                contexts += 1;
            });
            const double* v = table.in_row(c);
            for (std::size_t i = 0; i < n; ++i) {
                const double coeff = (hits[i] - contexts * p[i]) * scale;
                const double* u = table.out_row(i);
                for (std::size_t k = 0; k < d; ++k) {
                    g_in[c * d + k] += coeff * u[k];
                    g_out[i * d + k] += coeff * v[k];
                }
            }
        }
    return {std::move(g_in), std::move(g_out)};
}

std::vector<double> train_epochs(EmbeddingTable& table, const Corpus& corpus, const EmbedConfig& cfg) {
    validate(cfg);
    require(!corpus.empty(), "corpus must be non-empty");
    for (const auto& seq : corpus) require(seq.size() >= 2, "every corpus sequence needs length >= 2");
    const auto enc = encode(table, corpus);
    const std::size_t n = table.size(), d = table.dim;

    std::vector<std::pair<std::size_t, std::size_t>> positions;
    for (std::size_t s = 0; s < enc.size(); ++s)
        for (std::size_t t = 0; t < enc[s].size(); ++t) positions.emplace_back(s, t);

    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<double> p, hits(n), grad_v(d);
    std::vector<double> curve;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) std::shuffle(positions.begin(), positions.end(), rng);
        for (auto [s, t] : positions) {
            const auto& seq = enc[s];
            const std::size_t c = seq[t];
            softmax_scores(table, c, p);
            std::fill(hits.begin(), hits.end(), 0.0);
            double contexts = 0;
            for_each_context(seq, t, cfg.window, [&](std::size_t ctx) {
                hits[ctx] += 1;
                contexts += 1;
            });
            std::fill(grad_v.begin(), grad_v.end(), 0.0);
            double* v = table.input.data() + c * d;
            for (std::size_t i = 0; i < n; ++i) {
                const double coeff = hits[i] - contexts * p[i];
                double* u = table.output.data() + i * d;
                for (std::size_t k = 0; k < d; ++k) {
                    grad_v[k] += coeff * u[k];
                    u[k] += cfg.learning_rate * coeff * v[k];
                }
            }
            for (std::size_t k = 0; k < d; ++k) v[k] += cfg.learning_rate * grad_v[k];
        }
        curve.push_back(skipgram_objective(table, corpus, cfg.window));
    }
    return curve;
}

EmbeddingTable train_location_embeddings(const Corpus& corpus, const EmbedConfig& cfg) {
    validate(cfg);
    require(!corpus.empty(), "corpus must be non-empty");
    auto table = init_table(corpus, cfg.dim, cfg.seed);
    train_epochs(table, corpus, cfg);
    return table;
}

std::vector<double> context_distribution(std::size_t center, const EmbeddingTable& table) {
    require(center < table.size(), "centre index out of range");
    std::vector<double> p;
    softmax_scores(table, center, p);
    return p;
}

double context_probability(const std::string& center, const std::string& context, const EmbeddingTable& table) {
    const auto c = table.index_of(center);
    const auto o = table.index_of(context);
    return context_distribution(c, table)[o];
}

namespace {

void write_rows(const EmbeddingTable& t, const std::vector<double>& data, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::io, "cannot write " + path);
    os << "id";
    for (std::size_t k = 0; k < t.dim; ++k) os << ",v_" << k;
    os << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
        os << t.ids[i];
        for (std::size_t k = 0; k < t.dim; ++k) os << ',' << format_double(data[i * t.dim + k]);
        os << '\n';
    }
}

std::pair<std::vector<std::string>, std::vector<double>> read_rows(const std::string& path, std::size_t& dim) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::io, "cannot read " + path);
    std::string line;
    std::getline(is, line);
    const auto header = split(line, ',');
    if (header.empty() || header[0] != "id") fail(ErrorKind::parse, path + ":1: expected header 'id,v_0,...'");
    dim = header.size() - 1;
    std::vector<std::string> ids;
    std::vector<double> data;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != dim + 1)
            fail(ErrorKind::parse, path + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim + 1) +
                                       " columns");
        ids.push_back(cells[0]);
        for (std::size_t k = 1; k < cells.size(); ++k) {
            try {
                data.push_back(parse_double(cells[k]));
            } catch (const Error& e) {
                fail(ErrorKind::parse, path + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }
    return {ids, data};
}

}  // namespace

void save_table(const EmbeddingTable& table, const std::string& input_csv, const std::string& output_csv) {
    write_rows(table, table.input, input_csv);
    write_rows(table, table.output, output_csv);
}

EmbeddingTable load_table(const std::string& input_csv, const std::string& output_csv) {
    std::size_t d_in = 0, d_out = 0;
    auto [ids, in] = read_rows(input_csv, d_in);
    auto [ids2, out] = read_rows(output_csv, d_out);
    if (ids != ids2 || d_in != d_out) fail(ErrorKind::parse, "input and output tables disagree on ids or width");
    require(std::is_sorted(ids.begin(), ids.end()), "table ids must be sorted");
    EmbeddingTable t;
    t.ids = std::move(ids);
    t.dim = d_in;
    t.input = std::move(in);
    t.output = std::move(out);
    return t;
}

std::size_t duration_bucket(double s) {
    if (s < 15 * 60) return 0;
    if (s < 3600) return 1;
    if (s < 3 * 3600) return 2;
    if (s < 8 * 3600) return 3;
    if (s < 24 * 3600) return 4;
    return 5;
}

TemporalSlots temporal_slots(std::size_t day_of_week, Timestamp timestamp, double duration_s) {
    require(duration_s >= 0, "duration must be >= 0");
    require(day_of_week < kDays, "day_of_week must be in 0..6");
    Timestamp tod = timestamp % 86400;
    if (tod < 0) tod += 86400;
    return {day_of_week, static_cast<std::size_t>(tod / 3600), duration_bucket(duration_s)};
}

TemporalEncoder::TemporalEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), matrix_(dim * kTemporalOneHot) {
    require(dim >= 1, "temporal dim must be >= 1");
    std::mt19937_64 rng(seed);
    const double half = 0.5 / static_cast<double>(dim);
    std::uniform_real_distribution<double> u(-half, half);
    for (double& v : matrix_) v = u(rng);
}

TemporalEncoder::TemporalEncoder(std::vector<double> matrix, std::size_t dim) : dim_(dim), matrix_(std::move(matrix)) {
    require(matrix_.size() == dim * kTemporalOneHot, "temporal projection has the wrong size");
}

TemporalVector TemporalEncoder::encode(std::size_t day_of_week, Timestamp timestamp, double duration_s) const {
    TemporalVector v;
    v.slots = temporal_slots(day_of_week, timestamp, duration_s);
    v.one_hot.assign(kTemporalOneHot, 0.0);
    v.one_hot[v.slots.day] = 1.0;
    v.one_hot[kDays + v.slots.hour] = 1.0;
    v.one_hot[kDays + kHours + v.slots.duration] = 1.0;
    v.projection.assign(dim_, 0.0);
    for (std::size_t r = 0; r < dim_; ++r)
        for (std::size_t c = 0; c < kTemporalOneHot; ++c) v.projection[r] += matrix_[r * kTemporalOneHot + c] * v.one_hot[c];
    return v;
}

TemporalVector embed_temporal(std::size_t day_of_week, Timestamp timestamp, double duration_s, const EmbedConfig& cfg) {
    return TemporalEncoder(cfg.dim, cfg.seed).encode(day_of_week, timestamp, duration_s);
}

}  // namespace mobepi::embed
