#include "corpus_mixer/sampling.hpp"

#include "corpus_mixer/error.hpp"
#include "corpus_mixer/parallel.hpp"

#include <optional>

namespace corpus_mixer {

void SamplerConfig::validate() const {
    if (n_mixtures < 1) throw Error(ErrorCode::invalid_config, "n_mixtures must be >= 1");
    if (!(log_alpha_low < log_alpha_high) || !std::isfinite(log_alpha_low) || !std::isfinite(log_alpha_high)) {
        throw Error(ErrorCode::invalid_config, "log-alpha range must satisfy low < high");
    }
    if (cap && !(*cap > 1.0)) throw Error(ErrorCode::invalid_config, "cap must exceed 1");
}

Mixture sample_dirichlet(TaxonomyPtr tax, std::span<const double> alpha, RngStream& rng) {
    std::vector<double> weights(alpha.size());
    sample_dirichlet(alpha, rng, weights);
    return Mixture(std::move(tax), std::move(weights));
}

namespace {

void check_cap_feasible(const SamplerConfig& cfg, const Mixture& reference) {
    if (!cfg.cap) return;
    double support_mass = 0.0;
    for (std::size_t i = 0; i < reference.arity(); ++i) {
        if (cfg.prior[i] > 0.0) support_mass += reference[i];
    }
    if (*cfg.cap * support_mass < 1.0) {
        throw Error(ErrorCode::cap_infeasible, "cap times reference mass on the prior support is below 1");
    }
}

}  // namespace

SampledMixture sample_config_mixture(const SamplerConfig& cfg, const Mixture& reference, std::size_t index) {
    require_same_taxonomy(*cfg.prior.taxonomy(), *reference.taxonomy());
    RngStream rng(cfg.seed, index);
    const double alpha = std::exp(cfg.log_alpha_low + (cfg.log_alpha_high - cfg.log_alpha_low) * rng.uniform());
    std::vector<double> params(cfg.prior.arity());
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = alpha * cfg.prior[i];
    std::vector<double> weights(params.size());
    const std::size_t attempts = cfg.cap ? kCapAttemptsPerMixture : 1;
    for (std::size_t a = 0; a < attempts; ++a) {
        sample_dirichlet(params, rng, weights);
        if (!cfg.cap || within_cap(weights, reference.weights(), *cfg.cap, 0.0)) {
            return {index, alpha, Mixture(cfg.prior.taxonomy(), std::move(weights))};
        }
    }
    throw Error(ErrorCode::cap_infeasible,
                "mixture " + std::to_string(index) + " exhausted " + std::to_string(attempts) + " cap attempts");
}

std::vector<SampledMixture> sample_config_mixtures(const SamplerConfig& cfg, const Mixture& reference) {
    cfg.validate();
    require_same_taxonomy(*cfg.prior.taxonomy(), *reference.taxonomy());
    check_cap_feasible(cfg, reference);
    std::vector<std::optional<SampledMixture>> slots(cfg.n_mixtures);
    parallel_for(cfg.n_mixtures, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) slots[i] = sample_config_mixture(cfg, reference, i);
    });
    std::vector<SampledMixture> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace corpus_mixer
