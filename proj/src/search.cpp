#include "corpus_mixer/search.hpp"

#include "corpus_mixer/error.hpp"
#include "corpus_mixer/parallel.hpp"
#include "corpus_mixer/rng.hpp"

#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>

namespace corpus_mixer {

void SearchParams::validate() const {
    if (n_per_step == 0 || steps == 0) throw Error(ErrorCode::invalid_config, "n_per_step and steps must be positive");
    if (!(kl_coeff >= 0.0) || !std::isfinite(kl_coeff)) throw Error(ErrorCode::invalid_config, "gamma must be >= 0");
    if (!(smoothing > 0.0 && smoothing <= 1.0)) throw Error(ErrorCode::invalid_config, "eta must lie in (0, 1]");
    if (!(cap > 0.0)) throw Error(ErrorCode::invalid_config, "cap must be positive");
    if (!(log_alpha_low < log_alpha_high)) throw Error(ErrorCode::invalid_config, "log-alpha range must satisfy low < high");
    if (line_search_points == 0) throw Error(ErrorCode::invalid_config, "line_search_points must be positive");
    if (attempts_per_candidate == 0) throw Error(ErrorCode::invalid_config, "attempts_per_candidate must be positive");
}

json SearchParams::to_json() const {
    return {{"n_per_step", n_per_step},
            {"steps", steps},
            {"kl_coeff", kl_coeff},
            {"smoothing", smoothing},
            {"cap", cap},
            {"log_alpha_low", log_alpha_low},
            {"log_alpha_high", log_alpha_high},
            {"line_search_points", line_search_points},
            {"attempts_per_candidate", attempts_per_candidate},
            {"seed", seed}};
}

double objective(const LossPredictor& predictor, std::span<const double> prior, double gamma,
                 std::span<const double> candidate) {
    double penalty = 0.0;
    if (gamma > 0.0) {
        const double kl = kl_divergence(prior, candidate);
        if (std::isinf(kl)) return INFINITY;
        penalty = gamma * kl;
    }
    const double value = predictor.predict(candidate) + penalty;
    return std::isnan(value) ? INFINITY : value;
}

double objective(const LossPredictor& predictor, const Mixture& prior, double gamma, const Mixture& candidate) {
    require_same_taxonomy(*predictor.taxonomy(), *prior.taxonomy());
    require_same_taxonomy(*prior.taxonomy(), *candidate.taxonomy());
    return objective(predictor, prior.weights(), gamma, candidate.weights());
}

namespace {

std::vector<double> interpolate(std::span<const double> a, std::span<const double> b, double beta) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = beta * a[i] + (1.0 - beta) * b[i];
    return out;
}

}  // namespace

ScoredMixture line_search(const LossPredictor& predictor, const Mixture& prior, double gamma, const Mixture& w,
                          const Mixture& w_tilde, std::size_t points) {
    require_same_taxonomy(*w.taxonomy(), *w_tilde.taxonomy());
    require_same_taxonomy(*prior.taxonomy(), *w.taxonomy());
    if (points == 0) throw Error(ErrorCode::invalid_config, "line search needs at least one point");
    std::optional<ScoredMixture> best;
    for (std::size_t j = 0; j < points; ++j) {
        const double beta = points == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(points - 1);
        Mixture candidate(w.taxonomy(), interpolate(w.weights(), w_tilde.weights(), beta));
        const double value = objective(predictor, prior.weights(), gamma, candidate.weights());
        if (!best || value < best->value) best = ScoredMixture{std::move(candidate), value};
    }
    return std::move(*best);
}

namespace {

struct CandidateBest {
    double value = INFINITY;
    std::size_t index = std::numeric_limits<std::size_t>::max();
    std::vector<double> weights;
    std::size_t accepted = 0;
    std::size_t draws = 0;

    bool beats(double v, std::size_t i) const { return v < value || (v == value && i < index); }
};

std::uint64_t candidate_stream(std::size_t step, std::size_t candidate) {
    return (static_cast<std::uint64_t>(step + 1) << 32) | static_cast<std::uint64_t>(candidate);
}

}  // namespace

SearchResult adaptive_search(const LossPredictor& predictor, const Mixture& prior, const SearchParams& params) {
    params.validate();
    require_same_taxonomy(*predictor.taxonomy(), *prior.taxonomy());
    if (params.cap < 1.0) throw Error(ErrorCode::cap_infeasible, "cap below 1 excludes every mixture");
    if (params.n_per_step >= (std::size_t{1} << 32)) throw Error(ErrorCode::invalid_config, "n_per_step too large");

    const auto& tax = prior.taxonomy();
    const auto p = prior.weights();
    const double gamma = params.kl_coeff;

    Mixture best = prior;
    double best_value = objective(predictor, p, gamma, p);
    Mixture w = prior;
    std::vector<SearchStep> trace;
    trace.reserve(params.steps);

    for (std::size_t t = 0; t < params.steps; ++t) {
        std::vector<CandidateBest> partials;
        std::mutex partials_mutex;
        parallel_for(params.n_per_step, [&](std::size_t begin, std::size_t end) {
            CandidateBest local;
            std::vector<double> alpha(w.arity());
            std::vector<double> draw(w.arity());
            for (std::size_t i = begin; i < end; ++i) {
                RngStream rng(params.seed, candidate_stream(t, i));
                const double scale = std::exp(params.log_alpha_low +
                                              (params.log_alpha_high - params.log_alpha_low) * rng.uniform());
                for (std::size_t k = 0; k < alpha.size(); ++k) alpha[k] = scale * w[k];
                bool feasible = false;
                for (std::size_t a = 0; a < params.attempts_per_candidate && !feasible; ++a) {
                    sample_dirichlet(alpha, rng, draw);
                    ++local.draws;
                    feasible = within_cap(draw, p, params.cap);
                }
                if (!feasible) continue;
                ++local.accepted;
                const double value = objective(predictor, p, gamma, draw);
                if (local.beats(value, i)) {
                    local.value = value;
                    local.index = i;
                    local.weights = draw;
                }
            }
            std::lock_guard lock(partials_mutex);
            partials.push_back(std::move(local));
        });

        CandidateBest step_best;
        for (auto& part : partials) {
            step_best.accepted += part.accepted;
            step_best.draws += part.draws;
            if (part.accepted > 0 && (step_best.weights.empty() || step_best.beats(part.value, part.index))) {
                step_best.value = part.value;
                step_best.index = part.index;
                step_best.weights = std::move(part.weights);
            }
        }
        if (step_best.accepted == 0) {
            throw Error(ErrorCode::no_feasible_candidate, "step " + std::to_string(t + 1) + ": every draw violated the cap");
        }

        ScoredMixture candidate{Mixture(tax, std::move(step_best.weights)), step_best.value};
        auto refined = line_search(predictor, prior, gamma, w, candidate.mixture, params.line_search_points);
        if (!within_cap(refined.mixture.weights(), p, params.cap)) {
            throw std::logic_error("line search left the cap region");
        }

        std::vector<double> next(w.arity());
        for (std::size_t k = 0; k < next.size(); ++k) {
            next[k] = params.smoothing * refined.mixture[k] + (1.0 - params.smoothing) * w[k];
        }
        w = Mixture(tax, std::move(next));
        if (refined.value < best_value) {
            best = refined.mixture;
            best_value = refined.value;
        }
        trace.push_back({t + 1, step_best.accepted, step_best.draws, std::move(candidate), std::move(refined), w,
                         best_value});
    }
    return {std::move(best), best_value, params.seed, std::move(trace)};
}

SearchResult multi_seed_search(const LossPredictor& predictor, const Mixture& prior, SearchParams params,
                               std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) throw Error(ErrorCode::invalid_config, "at least one seed is required");
    std::optional<SearchResult> best;
    for (const auto seed : seeds) {
        params.seed = seed;
        auto result = adaptive_search(predictor, prior, params);
        if (!best || result.value < best->value) best = std::move(result);
    }
    return std::move(*best);
}

BruteForceResult brute_force_search(const LossPredictor& predictor, const Mixture& prior, double gamma, double cap,
                                    double resolution) {
    require_same_taxonomy(*predictor.taxonomy(), *prior.taxonomy());
    const std::size_t arity = prior.arity();
    if (arity > 5) throw Error(ErrorCode::arity_too_large, "brute force supports at most 5 domains");
    if (!(resolution > 0.0) || resolution > 1.0) throw Error(ErrorCode::invalid_config, "resolution must lie in (0, 1]");
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / resolution));
    if (std::abs(static_cast<double>(steps) * resolution - 1.0) > 1e-9) {
        throw Error(ErrorCode::invalid_config, "1 / resolution must be an integer");
    }
    const auto p = prior.weights();
    std::vector<std::size_t> counts(arity, 0);
    std::vector<double> point(arity);
    std::optional<BruteForceResult> best;
    std::size_t evaluated = 0;

    // Lexicographic enumeration of compositions of `steps` into `arity` parts.
    auto visit = [&](auto&& self, std::size_t pos, std::size_t remaining) -> void {
        if (pos + 1 == arity) {
            counts[pos] = remaining;
            for (std::size_t k = 0; k < arity; ++k) {
                point[k] = static_cast<double>(counts[k]) / static_cast<double>(steps);
            }
            if (!within_cap(point, p, cap)) return;
            ++evaluated;
            const double value = objective(predictor, p, gamma, point);
            if (!best || value < best->value) best = BruteForceResult{Mixture(prior.taxonomy(), point), value, 0};
            return;
        }
        for (std::size_t c = 0; c <= remaining; ++c) {
            counts[pos] = c;
            self(self, pos + 1, remaining - c);
        }
    };
    visit(visit, 0, steps);
    if (!best) throw Error(ErrorCode::cap_infeasible, "no lattice point satisfies the cap");
    best->evaluated = evaluated;
    return std::move(*best);
}

json trace_to_json(const SearchResult& result) {
    json steps = json::array();
    for (const auto& s : result.trace) {
        steps.push_back({{"step", s.step},
                         {"accepted", s.accepted},
                         {"draws", s.draws},
                         {"best_candidate", s.best_candidate.mixture.to_json()},
                         {"best_candidate_value", s.best_candidate.value},
                         {"line_search", s.after_line_search.mixture.to_json()},
                         {"line_search_value", s.after_line_search.value},
                         {"updated_prior", s.updated_prior.to_json()},
                         {"best_value", s.best_value}});
    }
    return {{"seed", result.seed}, {"value", result.value}, {"steps", std::move(steps)}};
}

}  // namespace corpus_mixer
