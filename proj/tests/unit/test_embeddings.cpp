#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "mobepi/embeddings.hpp"

using namespace mobepi;
using namespace mobepi::embed;

namespace {

Corpus five_corpus() {
    // A and B always sit next to each other.
    return {{"A", "B", "C", "D"}, {"E", "A", "B", "C"}, {"D", "E", "A", "B"}, {"B", "A", "E", "D"},
            {"C", "A", "B", "E"}};
}

EmbeddingTable table3() {
    EmbeddingTable t;
    t.ids = {"a", "b", "c"};
    t.dim = 2;
    t.input = {1, 0, 0, 0, 0, 0};
    t.output = {0, 0, std::log(2.0), 0, std::log(4.0), 0};
    return t;
}

}  // namespace

TEST_CASE("hand-set softmax") {
    const auto t = table3();
    CHECK(context_probability("a", "a", t) == doctest::Approx(1.0 / 7));
    CHECK(context_probability("a", "b", t) == doctest::Approx(2.0 / 7));
    CHECK(context_probability("a", "c", t) == doctest::Approx(4.0 / 7));
    CHECK_THROWS_AS(context_probability("a", "zzz", t), Error);
    CHECK_THROWS_AS(context_probability("zzz", "a", t), Error);
}

TEST_CASE("identical vectors give uniform probabilities") {
    EmbeddingTable t;
    t.ids = {"a", "b", "c", "d"};
    t.dim = 3;
    t.input.assign(12, 0.3);
    t.output.assign(12, -0.2);
    for (const auto& c : t.ids) CHECK(context_probability("b", c, t) == doctest::Approx(0.25));
}

TEST_CASE("rows of a trained table sum to one") {
    EmbedConfig cfg;
    cfg.epochs = 5;
    const auto t = train_location_embeddings(five_corpus(), cfg);
    for (std::size_t c = 0; c < t.size(); ++c) {
        double s = 0;
        for (double p : context_distribution(c, t)) s += p;
        CHECK(std::abs(s - 1.0) <= 1e-9);
    }
}

TEST_CASE("same seed, same table") {
    EmbedConfig cfg;
    cfg.epochs = 7;
    CHECK(train_location_embeddings(five_corpus(), cfg) == train_location_embeddings(five_corpus(), cfg));
    cfg.seed = 2;
    EmbedConfig other = cfg;
    other.seed = 3;
    CHECK_FALSE(train_location_embeddings(five_corpus(), cfg) == train_location_embeddings(five_corpus(), other));
}

TEST_CASE("A's most likely context is B") {
    EmbedConfig cfg;
    cfg.epochs = 200;
    cfg.window = 1;
    cfg.learning_rate = 0.05;
    const auto t = train_location_embeddings(five_corpus(), cfg);
    const double pab = context_probability("A", "B", t);
    for (const auto& c : t.ids)
        if (c != "B") CHECK(context_probability("A", c, t) < pab);
}

TEST_CASE("two-token corpus objective rises over ten epochs") {
    const Corpus corpus = {{"A", "B"}};
    EmbedConfig cfg;
    cfg.window = 1;
    cfg.epochs = 1;
    auto t = init_table(corpus, cfg.dim, cfg.seed);
    double prev = skipgram_objective(t, corpus, 1);
    const double expect = 0.5 * (std::log(context_probability("A", "B", t)) + std::log(context_probability("B", "A", t)));
    CHECK(prev == doctest::Approx(expect));
    for (int e = 0; e < 10; ++e) {
        const auto obj = train_epochs(t, corpus, cfg);
        REQUIRE(obj.size() == 1);
        CHECK(obj[0] > prev);
        prev = obj[0];
    }
}

TEST_CASE("objective is non-decreasing with a small step") {
    EmbedConfig cfg;
    cfg.epochs = 30;
    cfg.learning_rate = 0.05;
    auto t = init_table(five_corpus(), cfg.dim, cfg.seed);
    double prev = skipgram_objective(t, five_corpus(), cfg.window);
    for (double o : train_epochs(t, five_corpus(), cfg)) {
        CHECK(o >= prev);
        prev = o;
    }
}

TEST_CASE("analytic gradient matches central differences") {
    const Corpus corpus = five_corpus();
    std::mt19937_64 rng(31);
    std::normal_distribution<double> nd(0, 0.5);
    const double h = 1e-5;
    for (int point = 0; point < 20; ++point) {
        auto t = init_table(corpus, 4, static_cast<std::uint64_t>(point));
        for (auto& x : t.input) x = nd(rng);
        for (auto& x : t.output) x = nd(rng);
        const auto [gi, go] = skipgram_gradient(t, corpus, 2);
        double diff = 0, na = 0, nn = 0;
        auto probe = [&](std::vector<double>& param, const std::vector<double>& analytic) {
            for (std::size_t k = 0; k < param.size(); ++k) {
                const double keep = param[k];
                param[k] = keep + h;
                const double up = skipgram_objective(t, corpus, 2);
                param[k] = keep - h;
                const double down = skipgram_objective(t, corpus, 2);
                param[k] = keep;
                const double num = (up - down) / (2 * h);
                diff += (num - analytic[k]) * (num - analytic[k]);
                na += analytic[k] * analytic[k];
                nn += num * num;
            }
        };
        probe(t.input, gi);
        probe(t.output, go);
        CHECK(std::sqrt(diff) / std::max(std::sqrt(na), std::sqrt(nn)) < 1e-5);
    }
}

TEST_CASE("config and corpus validation") {
    EmbedConfig cfg;
    cfg.dim = 1;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.window = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.learning_rate = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
    CHECK_THROWS_AS(train_location_embeddings({}, EmbedConfig{}), Error);
    CHECK_THROWS_AS(train_location_embeddings({{"A"}}, EmbedConfig{}), Error);
}

TEST_CASE("table csv round trip") {
    EmbedConfig cfg;
    cfg.epochs = 3;
    const auto t = train_location_embeddings(five_corpus(), cfg);
    const auto dir = std::filesystem::path(MOBEPI_TEST_TMP) / "embed";
    std::filesystem::create_directories(dir);
    save_table(t, (dir / "in.csv").string(), (dir / "out.csv").string());
    CHECK(load_table((dir / "in.csv").string(), (dir / "out.csv").string()) == t);
}

TEST_CASE("temporal vectors") {
    EmbedConfig cfg;
    cfg.dim = 8;
    const auto a = embed_temporal(2, 3600 * 13 + 5, 1200, cfg);
    const auto b = embed_temporal(2, 3600 * 13 + 900, 1500, cfg);
    CHECK(a.slots == b.slots);
    CHECK(a.projection == b.projection);
    CHECK(a.projection.size() == 8);
    double ones = 0;
    for (double x : a.one_hot) ones += x;
    CHECK(ones == 3.0);
    CHECK(a.slots.hour == 13);

    const auto c = embed_temporal(2, 3600 * 13 + 5, 5 * 3600, cfg);
    CHECK(c.slots.duration != a.slots.duration);
    CHECK(c.one_hot != a.one_hot);
    CHECK(c.projection != a.projection);
    for (std::size_t k = 0; k < cfg.dim; ++k) CHECK(std::isfinite(c.projection[k]));
}

TEST_CASE("duration buckets") {
    CHECK(duration_bucket(0) == 0);
    CHECK(duration_bucket(899) == 0);
    CHECK(duration_bucket(900) == 1);
    CHECK(duration_bucket(3 * 3600 - 1) == 2);
    CHECK(duration_bucket(8 * 3600 - 1) == 3);
    CHECK(duration_bucket(86399) == 4);
    CHECK(duration_bucket(86400) == 5);
}

TEST_CASE("seeded projection columns are linearly independent") {
    // Every pair of one-hot inputs that differ in one block must project apart;
    // a rank check on the 8 x 37 matrix via Gram-Schmidt on its 8 rows.
    const TemporalEncoder enc(8, 1);
    const auto& m = enc.matrix();
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < 8; ++r) rows.emplace_back(m.begin() + r * kTemporalOneHot, m.begin() + (r + 1) * kTemporalOneHot);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t q = 0; q < r; ++q) {
            double d = 0;
            for (std::size_t k = 0; k < kTemporalOneHot; ++k) d += rows[r][k] * rows[q][k];
            for (std::size_t k = 0; k < kTemporalOneHot; ++k) rows[r][k] -= d * rows[q][k];
        }
        double n = 0;
        for (double x : rows[r]) n += x * x;
        n = std::sqrt(n);
        CHECK(n > 1e-8);
        for (double& x : rows[r]) x /= n;
    }
}
