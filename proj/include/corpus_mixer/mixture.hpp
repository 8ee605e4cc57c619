#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "corpus_mixer/json_io.hpp"
#include "corpus_mixer/taxonomy.hpp"

namespace corpus_mixer {

// Sum tolerance accepted as-is; deviations up to kRenormalizeTolerance are
// renormalized, anything larger is rejected.
inline constexpr double kMixtureTolerance = 1e-9;
inline constexpr double kRenormalizeTolerance = 1e-6;

// A probability vector over the categories of one taxonomy.
class Mixture {
public:
    Mixture(TaxonomyPtr taxonomy, std::vector<double> weights);

    // Normalizes arbitrary non-negative masses (token counts, table percentages).
    static Mixture from_masses(TaxonomyPtr taxonomy, std::span<const double> masses);
    static Mixture uniform(TaxonomyPtr taxonomy);
    static Mixture indicator(TaxonomyPtr taxonomy, std::size_t id);

    const TaxonomyPtr& taxonomy() const noexcept { return taxonomy_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::size_t arity() const noexcept { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }

    // {"taxonomy": spec, "weights": {name: weight}}
    json to_json() const;
    // Missing categories read as 0; unknown names are an error.
    static Mixture from_json(const json& doc);

    bool operator==(const Mixture& other) const noexcept {
        return *taxonomy_ == *other.taxonomy_ && weights_ == other.weights_;
    }

private:
    TaxonomyPtr taxonomy_;
    std::vector<double> weights_;
};

void require_same_taxonomy(const Taxonomy& a, const Taxonomy& b);

// normalize(p_i^(1/tau)); tau > 1 flattens, tau < 1 sharpens.
Mixture temper(const Mixture& p, double tau);

// KL(p || q) in nats; +infinity when q lacks support where p has mass.
double kl_divergence(const Mixture& p, const Mixture& q);
double kl_divergence(std::span<const double> p, std::span<const double> q);

// mix_i / corpus_i, with 0/0 -> 0 and x/0 -> +infinity.
std::vector<double> upsampling_factors(const Mixture& mix, const Mixture& corpus);

// cell(t, f) = topic_mix[t] * format_mix[f] over the product taxonomy.
Mixture product_mixture(const Mixture& row_mix, const Mixture& col_mix);

// Sums a product mixture over columns (axis 0) or rows (axis 1).
Mixture product_marginal(const Mixture& product, int axis);

bool within_cap(std::span<const double> candidate, std::span<const double> reference, double cap,
                double slack = 1e-12);

double linf_distance(std::span<const double> a, std::span<const double> b);

}  // namespace corpus_mixer
