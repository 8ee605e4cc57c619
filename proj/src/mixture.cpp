#include "corpus_mixer/mixture.hpp"

#include "corpus_mixer/error.hpp"

#include <cmath>
#include <numeric>

namespace corpus_mixer {

Mixture::Mixture(TaxonomyPtr taxonomy, std::vector<double> weights)
    : taxonomy_(std::move(taxonomy)), weights_(std::move(weights)) {
    if (!taxonomy_) throw Error(ErrorCode::invalid_mixture, "mixture without taxonomy");
    if (weights_.size() != taxonomy_->arity()) {
        throw Error(ErrorCode::invalid_mixture, "expected " + std::to_string(taxonomy_->arity()) +
                                                    " weights, got " + std::to_string(weights_.size()));
    }
    double total = 0.0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0) {
            throw Error(ErrorCode::invalid_mixture, "weights must be finite and non-negative");
        }
        total += w;
    }
    const double deviation = std::abs(total - 1.0);
    if (deviation > kRenormalizeTolerance) {
        throw Error(ErrorCode::invalid_mixture, "weights sum to " + std::to_string(total));
    }
    if (deviation > kMixtureTolerance) {
        for (double& w : weights_) w /= total;
    }
}

Mixture Mixture::from_masses(TaxonomyPtr taxonomy, std::span<const double> masses) {
    double total = 0.0;
    for (double m : masses) {
        if (!std::isfinite(m) || m < 0.0) {
            throw Error(ErrorCode::invalid_mixture, "masses must be finite and non-negative");
        }
        total += m;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::invalid_mixture, "masses sum to zero");
    std::vector<double> weights(masses.begin(), masses.end());
    for (double& w : weights) w /= total;
    return Mixture(std::move(taxonomy), std::move(weights));
}

Mixture Mixture::uniform(TaxonomyPtr taxonomy) {
    const std::size_t n = taxonomy->arity();
    return Mixture(std::move(taxonomy), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Mixture Mixture::indicator(TaxonomyPtr taxonomy, std::size_t id) {
    std::vector<double> weights(taxonomy->arity(), 0.0);
    weights.at(id) = 1.0;
    return Mixture(std::move(taxonomy), std::move(weights));
}

json Mixture::to_json() const {
    json weights = json::object();
    for (std::size_t i = 0; i < weights_.size(); ++i) weights[taxonomy_->name(i)] = weights_[i];
    return {{"taxonomy", taxonomy_->spec()}, {"weights", std::move(weights)}};
}

Mixture Mixture::from_json(const json& doc) {
    try {
        auto tax = parse_taxonomy_spec(doc.at("taxonomy").get<std::string>());
        std::vector<double> weights(tax->arity(), 0.0);
        for (const auto& [name, value] : doc.at("weights").items()) {
            weights[resolve_label(name, *tax)] += value.get<double>();
        }
        return Mixture(std::move(tax), std::move(weights));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_mixture, std::string("malformed mixture JSON: ") + e.what());
    }
}

void require_same_taxonomy(const Taxonomy& a, const Taxonomy& b) {
    if (!(a == b)) {
        throw Error(ErrorCode::taxonomy_mismatch, "taxonomy " + a.spec() + " vs " + b.spec());
    }
}

Mixture temper(const Mixture& p, double tau) {
    if (!std::isfinite(tau) || !(tau > 0.0)) {
        throw Error(ErrorCode::invalid_temperature, "temperature must be positive and finite");
    }
    std::vector<double> powered(p.arity());
    for (std::size_t i = 0; i < p.arity(); ++i) {
        powered[i] = p[i] > 0.0 ? std::pow(p[i], 1.0 / tau) : 0.0;
    }
    return Mixture::from_masses(p.taxonomy(), powered);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return INFINITY;
        total += p[i] * std::log(p[i] / q[i]);
    }
    // Rounding can leave a tiny negative total when p and q nearly coincide.
    return total < 0.0 ? 0.0 : total;
}

double kl_divergence(const Mixture& p, const Mixture& q) {
    require_same_taxonomy(*p.taxonomy(), *q.taxonomy());
    return kl_divergence(p.weights(), q.weights());
}

std::vector<double> upsampling_factors(const Mixture& mix, const Mixture& corpus) {
    require_same_taxonomy(*mix.taxonomy(), *corpus.taxonomy());
    std::vector<double> factors(mix.arity());
    for (std::size_t i = 0; i < mix.arity(); ++i) {
        if (corpus[i] > 0.0) {
            factors[i] = mix[i] / corpus[i];
        } else {
            factors[i] = mix[i] > 0.0 ? INFINITY : 0.0;
        }
    }
    return factors;
}

Mixture product_mixture(const Mixture& row_mix, const Mixture& col_mix) {
    auto tax = product_taxonomy(row_mix.taxonomy(), col_mix.taxonomy());
    std::vector<double> cells(tax->arity());
    for (std::size_t r = 0; r < row_mix.arity(); ++r) {
        for (std::size_t c = 0; c < col_mix.arity(); ++c) {
            cells[product_cell(r, c, col_mix.arity())] = row_mix[r] * col_mix[c];
        }
    }
    return Mixture(std::move(tax), std::move(cells));
}

Mixture product_marginal(const Mixture& product, int axis) {
    const auto& tax = *product.taxonomy();
    if (tax.kind() != TaxonomyKind::product) {
        throw Error(ErrorCode::taxonomy_mismatch, "marginal of a non-product mixture");
    }
    const std::size_t cols = tax.cols()->arity();
    const auto& target = axis == 0 ? tax.rows() : tax.cols();
    std::vector<double> out(target->arity(), 0.0);
    for (std::size_t cell = 0; cell < product.arity(); ++cell) {
        const auto [r, c] = split_product_cell(cell, cols);
        out[axis == 0 ? r : c] += product[cell];
    }
    return Mixture(target, std::move(out));
}

bool within_cap(std::span<const double> candidate, std::span<const double> reference, double cap,
                double slack) {
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        const double limit = reference[i] > 0.0 ? cap * reference[i] : 0.0;
        if (candidate[i] > limit + slack) return false;
    }
    return true;
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace corpus_mixer
