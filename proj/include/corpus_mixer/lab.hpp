#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corpus_mixer/corpus.hpp"
#include "corpus_mixer/json_io.hpp"
#include "corpus_mixer/kmeans.hpp"
#include "corpus_mixer/mixture.hpp"
#include "corpus_mixer/regression.hpp"
#include "corpus_mixer/rng.hpp"
#include "corpus_mixer/sampling.hpp"
#include "corpus_mixer/search.hpp"

namespace corpus_mixer {

// ---- planted mixing laws ----

enum class LawKind { linear, log_linear, quadratic_bowl, interaction };
std::string_view to_string(LawKind kind);
LawKind parse_law_kind(std::string_view name);

// linear:         sum c_i w_i
// log_linear:     bias + sum c_i log(w_i + epsilon)
// quadratic_bowl: sum c_i (w_i - center_i)^2
// interaction:    sum c_i w_i + sum_{i<j} A_ij w_i w_j   (A row-major k x k)
struct MixingLaw {
    std::string name = "loss";
    LawKind kind = LawKind::linear;
    TaxonomyPtr taxonomy;
    std::vector<double> coefficients;
    std::vector<double> center;
    std::vector<double> pairwise;
    double bias = 0.0;
    double epsilon = 1e-3;
    double noise_sigma = 0.0;

    void validate() const;
    double value(std::span<const double> weights) const;  // noiseless
    json to_json() const;
    static MixingLaw from_json(const json& doc);
};

// Law value plus N(0, noise_sigma^2); draws nothing when sigma is 0.
double evaluate_law(const MixingLaw& law, const Mixture& mix, RngStream& rng);

// Mean of the noiseless laws, usable wherever a fitted model is.
class LawPredictor final : public LossPredictor {
public:
    explicit LawPredictor(std::vector<MixingLaw> laws);
    const TaxonomyPtr& taxonomy() const override { return laws_.front().taxonomy; }
    using LossPredictor::predict;
    double predict(std::span<const double> weights) const override;
    const std::vector<MixingLaw>& laws() const noexcept { return laws_; }

private:
    std::vector<MixingLaw> laws_;
};

struct LawOptimum {
    Mixture mixture;
    double value;
    bool exact;  // closed form or exhaustive; false means a dense adaptive search
};

// Minimizer of the averaged noiseless laws over {w : w_i <= cap * prior_i}.
// Linear laws are filled greedily; a bowl whose center is feasible sits at
// its center; other laws use brute force (arity <= 5) or a dense search.
LawOptimum law_optimum(const std::vector<MixingLaw>& laws, const Mixture& prior, double cap);

// Positive random coefficients from (seed, 0). A bowl's center is the prior
// reweighted by factors in [0.5, 2], so it stays within a cap of 4.
MixingLaw random_law(LawKind kind, const Mixture& prior, std::uint64_t seed, std::string name = "loss");

// ---- synthetic corpora ----

struct ScoreModel {
    std::string name;
    std::vector<double> topic_offsets;   // empty means all 0
    std::vector<double> format_offsets;  // empty means all 0
    double noise_sigma = 1.0;
};

struct GeneratorSpec {
    std::vector<double> joint;  // topic x format, row-major, sums to 1
    std::size_t n_docs = 10000;
    double token_median = 500.0;
    double token_sigma = 1.0;
    std::vector<ScoreModel> scores;
    std::uint64_t seed = 0;

    void validate() const;
    json to_json() const;
    static GeneratorSpec from_json(const json& doc);
};

// Zipf-like topic and format marginals with extra mass on a topic/format
// diagonal, and a "quality" score whose topic offsets run from -1 to 1 and
// format offsets from -0.5 to 0.5 (noise sigma 1).
GeneratorSpec default_generator_spec(std::size_t n_docs, std::uint64_t seed);

// Record i depends only on (spec, i). Throws InvalidSpec.
DocumentRecord generate_record(const GeneratorSpec& spec, std::size_t i);
std::vector<DocumentRecord> generate_corpus(const GeneratorSpec& spec);

// Row i: topic_strength * onehot(topic) ++ format_strength * onehot(format)
// plus N(0, noise^2) per coordinate (dimension topics + formats).
EmbeddingSet generate_embeddings(std::span<const DocumentRecord> records, double topic_strength,
                                 double format_strength, double noise, std::uint64_t seed);

// ---- end-to-end rehearsal ----

struct RegmixConfig {
    std::vector<MixingLaw> laws;
    Mixture reference;  // untempered corpus prior; the cap and KL refer to it
    SamplerConfig sampler;
    GbtParams gbt;
    SearchParams search;
    std::vector<std::uint64_t> seeds = {0, 1};
    std::size_t holdout = 50;
    std::uint64_t noise_seed = 0;
};

struct RegmixReport {
    std::vector<double> holdout_spearman;  // per law
    SearchResult search;
    double predicted_value;  // averaged true law at the searched mixture
    LawOptimum optimum;
    double gap;              // predicted_value - optimum.value
    double law_range;        // max - min of the averaged law over observations

    json to_json() const;
};

std::vector<RunObservation> observe_laws(const std::vector<MixingLaw>& laws, std::span<const Mixture> mixtures,
                                         std::uint64_t noise_seed);

// Scores a fit on all but the last `holdout` observations against them, then
// refits on every observation and searches the averaged surrogates.
RegmixReport regmix_from_observations(const RegmixConfig& cfg, const std::vector<RunObservation>& observations);

// Samples the config mixtures first.
RegmixReport end_to_end_regmix(const RegmixConfig& cfg);

}  // namespace corpus_mixer
