#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mobepi/common.hpp"

namespace mobepi::embed {

struct EmbedConfig {
    std::size_t dim = 16;
    std::size_t window = 2;  // context radius c
    std::size_t epochs = 20;
    double learning_rate = 0.025;
    std::uint64_t seed = 1;
    bool shuffle = true;
};

void validate(const EmbedConfig& cfg);

/// Input (centre) and output (context) vectors per location, row-major N x dim.
struct EmbeddingTable {
    std::vector<std::string> ids;
    std::size_t dim = 0;
    std::vector<double> input;
    std::vector<double> output;

    std::size_t size() const { return ids.size(); }
    std::size_t index_of(const std::string& id) const;
    const double* in_row(std::size_t i) const { return input.data() + i * dim; }
    const double* out_row(std::size_t i) const { return output.data() + i * dim; }
    friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

using Corpus = std::vector<std::vector<std::string>>;

/// Vocabulary in sorted id order, vectors seeded uniform in [-0.5/dim, 0.5/dim].
EmbeddingTable init_table(const Corpus& corpus, std::size_t dim, std::uint64_t seed);

/// Skip-gram with full softmax, plain SGD ascent one centre position at a time.
EmbeddingTable train_location_embeddings(const Corpus& corpus, const EmbedConfig& cfg);

/// Continues training an existing table for cfg.epochs; returns the objective after each epoch.
std::vector<double> train_epochs(EmbeddingTable& table, const Corpus& corpus, const EmbedConfig& cfg);

/// (1/T) sum_t sum_{-c<=j<=c, j!=0} log p(l_{t+j} | l_t), T = total tokens.
double skipgram_objective(const EmbeddingTable& table, const Corpus& corpus, std::size_t window);

/// Analytic gradient of skipgram_objective w.r.t. (input, output), same layout as the table.
std::pair<std::vector<double>, std::vector<double>> skipgram_gradient(const EmbeddingTable& table,
                                                                      const Corpus& corpus, std::size_t window);

/// exp(out_ctx . in_centre) / sum_i exp(out_i . in_centre)
double context_probability(const std::string& center, const std::string& context, const EmbeddingTable& table);
std::vector<double> context_distribution(std::size_t center, const EmbeddingTable& table);

void save_table(const EmbeddingTable& table, const std::string& input_csv, const std::string& output_csv);
EmbeddingTable load_table(const std::string& input_csv, const std::string& output_csv);

// ---------------------------------------------------------------------------
// Temporal context vectors

inline constexpr std::size_t kDays = 7;
inline constexpr std::size_t kHours = 24;
inline constexpr std::size_t kDurationBuckets = 6;
inline constexpr std::size_t kTemporalOneHot = kDays + kHours + kDurationBuckets;

/// {<15m, <1h, <3h, <8h, <24h, >=24h}
std::size_t duration_bucket(double duration_s);

struct TemporalSlots {
    std::size_t day = 0;
    std::size_t hour = 0;
    std::size_t duration = 0;
    friend bool operator==(const TemporalSlots&, const TemporalSlots&) = default;
};

/// Hour from the UTC time of day of the timestamp.
TemporalSlots temporal_slots(std::size_t day_of_week, Timestamp timestamp, double duration_s);

struct TemporalVector {
    TemporalSlots slots;
    std::vector<double> one_hot;     // width kTemporalOneHot, three ones
    std::vector<double> projection;  // width dim
};

/// Seeded dense projection of the concatenated one-hot blocks.
class TemporalEncoder {
public:
    TemporalEncoder(std::size_t dim, std::uint64_t seed);
    explicit TemporalEncoder(std::vector<double> matrix, std::size_t dim);

    std::size_t dim() const { return dim_; }
    const std::vector<double>& matrix() const { return matrix_; }  // dim x kTemporalOneHot, row-major
    TemporalVector encode(std::size_t day_of_week, Timestamp timestamp, double duration_s) const;

private:
    std::size_t dim_;
    std::vector<double> matrix_;
};

TemporalVector embed_temporal(std::size_t day_of_week, Timestamp timestamp, double duration_s,
                              const EmbedConfig& cfg);

}  // namespace mobepi::embed
