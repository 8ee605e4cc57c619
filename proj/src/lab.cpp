#include "corpus_mixer/lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "corpus_mixer/error.hpp"
#include "corpus_mixer/parallel.hpp"

namespace corpus_mixer {

std::string_view to_string(LawKind kind) {
    switch (kind) {
        case LawKind::linear: return "linear";
        case LawKind::log_linear: return "log_linear";
        case LawKind::quadratic_bowl: return "quadratic_bowl";
        case LawKind::interaction: return "interaction";
    }
    return "?";
}

LawKind parse_law_kind(std::string_view name) {
    for (auto k : {LawKind::linear, LawKind::log_linear, LawKind::quadratic_bowl, LawKind::interaction})
        if (to_string(k) == name) return k;
    throw Error(ErrorCode::invalid_spec, "unknown law kind '" + std::string(name) + "'");
}

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void MixingLaw::validate() const {
    if (!taxonomy) throw Error(ErrorCode::invalid_spec, "law '" + name + "' has no taxonomy");
    const std::size_t k = taxonomy->arity();
    if (coefficients.size() != k || !all_finite(coefficients))
        throw Error(ErrorCode::invalid_spec, "law '" + name + "' needs " + std::to_string(k) + " finite coefficients");
    if (kind == LawKind::quadratic_bowl && (center.size() != k || !all_finite(center)))
        throw Error(ErrorCode::invalid_spec, "bowl '" + name + "' needs a " + std::to_string(k) + "-entry center");
    if (kind == LawKind::interaction && (pairwise.size() != k * k || !all_finite(pairwise)))
        throw Error(ErrorCode::invalid_spec, "interaction law '" + name + "' needs a k x k pairwise matrix");
    if (kind == LawKind::log_linear && !(epsilon > 0.0))
        throw Error(ErrorCode::invalid_spec, "log-linear law '" + name + "' needs epsilon > 0");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma) || !std::isfinite(bias))
        throw Error(ErrorCode::invalid_spec, "law '" + name + "' has an invalid noise sigma or bias");
}

double MixingLaw::value(std::span<const double> w) const {
    const std::size_t k = coefficients.size();
    double s = 0.0;
    switch (kind) {
        case LawKind::linear:
            for (std::size_t i = 0; i < k; ++i) s += coefficients[i] * w[i];
            return s;
        case LawKind::log_linear:
            for (std::size_t i = 0; i < k; ++i) s += coefficients[i] * std::log(w[i] + epsilon);
            return bias + s;
        case LawKind::quadratic_bowl:
            for (std::size_t i = 0; i < k; ++i) {
                const double d = w[i] - center[i];
                s += coefficients[i] * d * d;
            }
            return s;
        case LawKind::interaction:
            for (std::size_t i = 0; i < k; ++i) {
                s += coefficients[i] * w[i];
                for (std::size_t j = i + 1; j < k; ++j) s += pairwise[i * k + j] * w[i] * w[j];
            }
            return s;
    }
    return s;
}

json MixingLaw::to_json() const {
    json j = {{"name", name}, {"kind", to_string(kind)}, {"taxonomy", taxonomy->spec()}, {"coefficients", coefficients}};
    if (kind == LawKind::quadratic_bowl) j["center"] = center;
    if (kind == LawKind::interaction) j["pairwise"] = pairwise;
    if (kind == LawKind::log_linear) {
        j["bias"] = bias;
        j["epsilon"] = epsilon;
    }
    j["noise_sigma"] = noise_sigma;
    return j;
}

MixingLaw MixingLaw::from_json(const json& doc) {
    try {
        MixingLaw law;
        law.name = doc.value("name", std::string("loss"));
        law.kind = parse_law_kind(doc.at("kind").get<std::string>());
        law.taxonomy = parse_taxonomy_spec(doc.at("taxonomy").get<std::string>());
        law.coefficients = doc.at("coefficients").get<std::vector<double>>();
        if (doc.contains("center")) law.center = doc.at("center").get<std::vector<double>>();
        if (doc.contains("pairwise")) law.pairwise = doc.at("pairwise").get<std::vector<double>>();
        law.bias = doc.value("bias", 0.0);
        law.epsilon = doc.value("epsilon", 1e-3);
        law.noise_sigma = doc.value("noise_sigma", 0.0);
        law.validate();
        return law;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_spec, std::string("malformed law: ") + e.what());
    }
}

double evaluate_law(const MixingLaw& law, const Mixture& mix, RngStream& rng) {
    require_same_taxonomy(*law.taxonomy, *mix.taxonomy());
    const double v = law.value(mix.weights());
    return law.noise_sigma > 0.0 ? v + law.noise_sigma * rng.normal() : v;
}

LawPredictor::LawPredictor(std::vector<MixingLaw> laws) : laws_(std::move(laws)) {
    if (laws_.empty()) throw Error(ErrorCode::invalid_spec, "no laws given");
    for (const auto& law : laws_) {
        law.validate();
        require_same_taxonomy(*law.taxonomy, *laws_.front().taxonomy);
    }
}

double LawPredictor::predict(std::span<const double> weights) const {
    double s = 0.0;
    for (const auto& law : laws_) s += law.value(weights);
    return s / static_cast<double>(laws_.size());
}

LawOptimum law_optimum(const std::vector<MixingLaw>& laws, const Mixture& prior, double cap) {
    LawPredictor pred(laws);
    require_same_taxonomy(*pred.taxonomy(), *prior.taxonomy());
    if (!(cap >= 1.0)) throw Error(ErrorCode::cap_infeasible, "cap must be at least 1");
    const std::size_t k = prior.arity();
    std::vector<double> upper(k);
    for (std::size_t i = 0; i < k; ++i) upper[i] = prior[i] > 0.0 ? std::min(1.0, cap * prior[i]) : 0.0;
    const double n_laws = static_cast<double>(laws.size());

    auto is_linear = [](const MixingLaw& l) {
        return l.kind == LawKind::linear ||
               (l.kind == LawKind::interaction &&
                std::all_of(l.pairwise.begin(), l.pairwise.end(), [](double a) { return a == 0.0; }));
    };
    if (std::all_of(laws.begin(), laws.end(), is_linear)) {
        std::vector<double> c(k, 0.0);
        for (const auto& l : laws)
            for (std::size_t i = 0; i < k; ++i) c[i] += l.coefficients[i] / n_laws;
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c[a] < c[b]; });
        std::vector<double> w(k, 0.0);
        double left = 1.0;
        for (auto i : order) {
            w[i] = std::min(upper[i], left);
            left -= w[i];
            if (left <= 0.0) break;
        }
        Mixture m = Mixture::from_masses(prior.taxonomy(), w);
        const double v = pred.predict(m.weights());
        return {std::move(m), v, true};
    }

    const bool all_bowls = std::all_of(laws.begin(), laws.end(),
                                       [](const MixingLaw& l) { return l.kind == LawKind::quadratic_bowl; });
    if (all_bowls) {
        // The mean of bowls is a bowl centred at the curvature-weighted centre.
        std::vector<double> centre(k, 0.0);
        bool ok = true;
        double total = 0.0;
        for (std::size_t i = 0; i < k && ok; ++i) {
            double s = 0.0;
            double sc = 0.0;
            for (const auto& l : laws) {
                s += l.coefficients[i];
                sc += l.coefficients[i] * l.center[i];
            }
            ok = s > 0.0;
            if (ok) centre[i] = sc / s;
            ok = ok && centre[i] >= 0.0 && centre[i] <= upper[i] + 1e-12;
            total += centre[i];
        }
        if (ok && std::abs(total - 1.0) <= kMixtureTolerance) {
            Mixture m(prior.taxonomy(), centre);
            const double v = pred.predict(m.weights());
            return {std::move(m), v, true};
        }
    }

    if (k <= 5) {
        const double resolution = k <= 4 ? 0.005 : 0.01;
        auto bf = brute_force_search(pred, prior, 0.0, cap, resolution);
        return {std::move(bf.mixture), bf.value, true};
    }
    SearchParams dense;
    dense.n_per_step = 20000;
    dense.steps = 30;
    dense.kl_coeff = 0.0;
    dense.cap = cap;
    const std::uint64_t seeds[] = {0, 1, 2};
    auto r = multi_seed_search(pred, prior, dense, seeds);
    return {std::move(r.mixture), r.value, false};
}

MixingLaw random_law(LawKind kind, const Mixture& prior, std::uint64_t seed, std::string name) {
    const std::size_t k = prior.arity();
    RngStream rng(seed, 0);
    MixingLaw law;
    law.name = std::move(name);
    law.kind = kind;
    law.taxonomy = prior.taxonomy();
    law.coefficients.resize(k);
    for (auto& c : law.coefficients) c = 0.5 + rng.uniform();
    if (kind == LawKind::quadratic_bowl) {
        std::vector<double> masses(k);
        for (std::size_t i = 0; i < k; ++i) masses[i] = prior[i] * std::exp2(2.0 * rng.uniform() - 1.0);
        const auto centre = Mixture::from_masses(prior.taxonomy(), masses);
        law.center.assign(centre.weights().begin(), centre.weights().end());
    }
    if (kind == LawKind::interaction) {
        law.pairwise.assign(k * k, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j) law.pairwise[i * k + j] = 2.0 * rng.uniform() - 1.0;
    }
    if (kind == LawKind::log_linear) law.bias = 3.0;
    law.validate();
    return law;
}

// ---- generator ----

void GeneratorSpec::validate() const {
    const auto topics = canonical_topics()->arity();
    const auto formats = canonical_formats()->arity();
    if (joint.size() != topics * formats)
        throw Error(ErrorCode::invalid_spec, "joint must have " + std::to_string(topics * formats) + " cells");
    double s = 0.0;
    for (double v : joint) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::invalid_spec, "joint cells must be non-negative");
        s += v;
    }
    if (std::abs(s - 1.0) > kMixtureTolerance)
        throw Error(ErrorCode::invalid_spec, "joint sums to " + std::to_string(s) + ", not 1");
    if (n_docs == 0) throw Error(ErrorCode::invalid_spec, "n_docs must be positive");
    if (!(token_median >= 1.0) || !(token_sigma >= 0.0) || !std::isfinite(token_median) || !std::isfinite(token_sigma))
        throw Error(ErrorCode::invalid_spec, "token distribution needs median >= 1 and sigma >= 0");
    for (const auto& sm : scores) {
        if (sm.name.empty()) throw Error(ErrorCode::invalid_spec, "score model without a name");
        if ((!sm.topic_offsets.empty() && sm.topic_offsets.size() != topics) ||
            (!sm.format_offsets.empty() && sm.format_offsets.size() != formats))
            throw Error(ErrorCode::invalid_spec, "score '" + sm.name + "' has misaligned offsets");
        if (!(sm.noise_sigma >= 0.0)) throw Error(ErrorCode::invalid_spec, "score '" + sm.name + "' noise < 0");
    }
}

namespace {

json offsets_to_json(const std::vector<double>& offsets, const Taxonomy& tax) {
    json j = json::object();
    for (std::size_t i = 0; i < offsets.size(); ++i)
        if (offsets[i] != 0.0) j[tax.name(i)] = offsets[i];
    return j;
}

std::vector<double> offsets_from_json(const json& j, const Taxonomy& tax) {
    std::vector<double> out(tax.arity(), 0.0);
    for (const auto& [name, v] : j.items()) out[resolve_label(name, tax)] = v.get<double>();
    return out;
}

}  // namespace

json GeneratorSpec::to_json() const {
    json sc = json::array();
    for (const auto& sm : scores) {
        sc.push_back({{"name", sm.name},
                      {"topic_offsets", offsets_to_json(sm.topic_offsets, *canonical_topics())},
                      {"format_offsets", offsets_to_json(sm.format_offsets, *canonical_formats())},
                      {"noise_sigma", sm.noise_sigma}});
    }
    return {{"joint", Mixture::from_masses(canonical_product(), joint).to_json()},
            {"n_docs", n_docs},
            {"token_median", token_median},
            {"token_sigma", token_sigma},
            {"scores", sc},
            {"seed", seed}};
}

GeneratorSpec GeneratorSpec::from_json(const json& doc) {
    try {
        GeneratorSpec spec;
        const auto& jm = doc.at("joint");
        if (jm.at("taxonomy") != "product") throw Error(ErrorCode::invalid_spec, "joint must be over 'product'");
        auto tax = canonical_product();
        spec.joint.assign(tax->arity(), 0.0);
        for (const auto& [name, v] : jm.at("weights").items()) spec.joint[resolve_label(name, *tax)] += v.get<double>();
        spec.n_docs = doc.value("n_docs", spec.n_docs);
        spec.token_median = doc.value("token_median", spec.token_median);
        spec.token_sigma = doc.value("token_sigma", spec.token_sigma);
        spec.seed = doc.value("seed", spec.seed);
        if (doc.contains("scores")) {
            for (const auto& s : doc.at("scores")) {
                ScoreModel sm;
                sm.name = s.at("name").get<std::string>();
                if (s.contains("topic_offsets")) sm.topic_offsets = offsets_from_json(s["topic_offsets"], *canonical_topics());
                if (s.contains("format_offsets"))
                    sm.format_offsets = offsets_from_json(s["format_offsets"], *canonical_formats());
                sm.noise_sigma = s.value("noise_sigma", 1.0);
                spec.scores.push_back(std::move(sm));
            }
        }
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_spec, std::string("malformed generator spec: ") + e.what());
    }
}

GeneratorSpec default_generator_spec(std::size_t n_docs, std::uint64_t seed) {
    const std::size_t nt = canonical_topics()->arity();
    const std::size_t nf = canonical_formats()->arity();
    GeneratorSpec spec;
    spec.n_docs = n_docs;
    spec.seed = seed;
    spec.joint.resize(nt * nf);
    double total = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t f = 0; f < nf; ++f) {
            const double base = 1.0 / std::sqrt(static_cast<double>((t + 1) * (f + 1)));
            const double v = base * (f == (t * 7) % nf ? 4.0 : 1.0);
            spec.joint[t * nf + f] = v;
            total += v;
        }
    }
    for (auto& v : spec.joint) v /= total;
    ScoreModel q;
    q.name = "quality";
    q.topic_offsets.resize(nt);
    q.format_offsets.resize(nf);
    for (std::size_t t = 0; t < nt; ++t) q.topic_offsets[t] = -1.0 + 2.0 * static_cast<double>(t) / static_cast<double>(nt - 1);
    for (std::size_t f = 0; f < nf; ++f) q.format_offsets[f] = 0.5 - static_cast<double>(f) / static_cast<double>(nf - 1);
    spec.scores.push_back(std::move(q));
    return spec;
}

namespace {

DocumentRecord record_at(const GeneratorSpec& spec, std::size_t i) {
    const std::size_t n_formats = canonical_formats()->arity();
    RngStream rng(spec.seed, i);
    const double u = rng.uniform();
    std::size_t cell = spec.joint.size();
    double acc = 0.0;
    for (std::size_t c = 0; c < spec.joint.size(); ++c) {
        if (spec.joint[c] <= 0.0) continue;
        acc += spec.joint[c];
        cell = c;
        if (u < acc) break;
    }
    DocumentRecord doc;
    char id[32];
    std::snprintf(id, sizeof id, "doc-%08zu", i);
    doc.id = id;
    doc.topic = cell / n_formats;
    doc.format = cell % n_formats;
    const double t = spec.token_median * std::exp(spec.token_sigma * rng.normal());
    doc.tokens = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(std::min(t, 1e15))));
    for (const auto& sm : spec.scores) {
        double s = sm.noise_sigma * rng.normal();
        if (!sm.topic_offsets.empty()) s += sm.topic_offsets[doc.topic];
        if (!sm.format_offsets.empty()) s += sm.format_offsets[doc.format];
        doc.scores[sm.name] = s;
    }
    return doc;
}

}  // namespace

DocumentRecord generate_record(const GeneratorSpec& spec, std::size_t i) {
    spec.validate();
    return record_at(spec, i);
}

std::vector<DocumentRecord> generate_corpus(const GeneratorSpec& spec) {
    spec.validate();
    std::vector<DocumentRecord> out(spec.n_docs);
    parallel_for(spec.n_docs, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) out[i] = record_at(spec, i);
    });
    return out;
}

EmbeddingSet generate_embeddings(std::span<const DocumentRecord> records, double topic_strength,
                                 double format_strength, double noise, std::uint64_t seed) {
    const std::size_t nt = canonical_topics()->arity();
    const std::size_t nf = canonical_formats()->arity();
    EmbeddingSet set;
    set.dim = nt + nf;
    set.ids.resize(records.size());
    set.values.assign(records.size() * set.dim, 0.0f);
    parallel_for(records.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            RngStream rng(seed, i);
            float* row = set.values.data() + i * set.dim;
            for (std::size_t c = 0; c < set.dim; ++c) row[c] = static_cast<float>(noise * rng.normal());
            row[records[i].topic] += static_cast<float>(topic_strength);
            row[nt + records[i].format] += static_cast<float>(format_strength);
            set.ids[i] = records[i].id;
        }
    });
    return set;
}

// ---- rehearsal ----

std::vector<RunObservation> observe_laws(const std::vector<MixingLaw>& laws, std::span<const Mixture> mixtures,
                                         std::uint64_t noise_seed) {
    std::vector<RunObservation> out;
    out.reserve(mixtures.size());
    for (std::size_t i = 0; i < mixtures.size(); ++i) {
        RngStream rng(noise_seed, i);
        RunObservation obs{mixtures[i], {}};
        for (const auto& law : laws) obs.losses[law.name] = evaluate_law(law, mixtures[i], rng);
        out.push_back(std::move(obs));
    }
    return out;
}

RegmixReport regmix_from_observations(const RegmixConfig& cfg, const std::vector<RunObservation>& observations) {
    if (cfg.laws.empty()) throw Error(ErrorCode::invalid_spec, "no laws given");
    if (observations.size() <= cfg.holdout + 1)
        throw Error(ErrorCode::insufficient_data, std::to_string(observations.size()) + " observations leave nothing to fit after holding out " +
                                                      std::to_string(cfg.holdout));
    const std::size_t n_train = observations.size() - cfg.holdout;
    std::vector<RunObservation> train(observations.begin(), observations.begin() + static_cast<std::ptrdiff_t>(n_train));

    RegmixReport report{.holdout_spearman = {},
                        .search = {Mixture(cfg.reference), 0.0, 0, {}},
                        .predicted_value = 0.0,
                        .optimum = {Mixture(cfg.reference), 0.0, false},
                        .gap = 0.0,
                        .law_range = 0.0};
    std::vector<std::shared_ptr<const LossPredictor>> members;
    for (const auto& law : cfg.laws) {
        auto model = std::make_shared<SurrogateModel>(fit(train, law.name, cfg.gbt));
        std::vector<double> predicted;
        std::vector<double> actual;
        for (std::size_t i = n_train; i < observations.size(); ++i) {
            predicted.push_back(model->predict(observations[i].mixture));
            actual.push_back(observations[i].losses.at(law.name));
        }
        report.holdout_spearman.push_back(predicted.size() >= 2 ? spearman(predicted, actual)
                                                                : std::numeric_limits<double>::quiet_NaN());
        if (cfg.holdout > 0) model = std::make_shared<SurrogateModel>(fit(observations, law.name, cfg.gbt));
        members.push_back(std::move(model));
    }
    MultiTargetPredictor surrogate(std::move(members));
    report.search = multi_seed_search(surrogate, cfg.reference, cfg.search, cfg.seeds);

    LawPredictor truth(cfg.laws);
    report.predicted_value = truth.predict(report.search.mixture);
    report.optimum = law_optimum(cfg.laws, cfg.reference, cfg.search.cap);
    report.gap = report.predicted_value - report.optimum.value;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& obs : observations) {
        const double v = truth.predict(obs.mixture);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    report.law_range = hi - lo;
    return report;
}

RegmixReport end_to_end_regmix(const RegmixConfig& cfg) {
    const auto sampled = sample_config_mixtures(cfg.sampler, cfg.reference);
    std::vector<Mixture> mixtures;
    mixtures.reserve(sampled.size());
    for (const auto& s : sampled) mixtures.push_back(s.mixture);
    return regmix_from_observations(cfg, observe_laws(cfg.laws, mixtures, cfg.noise_seed));
}

json RegmixReport::to_json() const {
    json sp = json::array();
    for (double s : holdout_spearman) sp.push_back(std::isfinite(s) ? json(s) : json(nullptr));
    return {{"holdout_spearman", sp},
            {"predicted_mixture", search.mixture.to_json()},
            {"predicted_objective", search.value},
            {"predicted_law_value", predicted_value},
            {"optimum_mixture", optimum.mixture.to_json()},
            {"optimum_law_value", optimum.value},
            {"optimum_exact", optimum.exact},
            {"gap", gap},
            {"law_range", law_range},
            {"search_seed", search.seed},
            {"trace", trace_to_json(search)}};
}

}  // namespace corpus_mixer
