#include "corpus_mixer/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "corpus_mixer/error.hpp"
#include "corpus_mixer/parallel.hpp"
#include "corpus_mixer/rng.hpp"

namespace corpus_mixer {

std::vector<std::uint64_t> token_budgets(const Mixture& mix, std::uint64_t total_budget) {
    if (total_budget == 0) throw Error(ErrorCode::invalid_config, "total budget must be at least 1");
    const std::size_t k = mix.arity();
    std::vector<std::uint64_t> out(k);
    std::vector<double> rem(k);
    std::uint64_t assigned = 0;
    const auto b = static_cast<long double>(total_budget);
    for (std::size_t i = 0; i < k; ++i) {
        const long double share = static_cast<long double>(mix[i]) * b;
        const long double fl = std::floor(share);
        out[i] = std::min<std::uint64_t>(static_cast<std::uint64_t>(fl), total_budget);
        rem[i] = static_cast<double>(share - fl);
        assigned += out[i];
    }
    // Floors of shares summing to ~B can exceed B only through rounding.
    while (assigned > total_budget) {
        std::size_t j = 0;
        for (std::size_t i = 1; i < k; ++i)
            if (out[i] > 0 && (out[j] == 0 || rem[i] < rem[j])) j = i;
        --out[j];
        --assigned;
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return rem[a] > rem[c]; });
    for (std::size_t r = 0; assigned < total_budget; r = (r + 1) % k) {
        ++out[order[r]];
        ++assigned;
    }
    return out;
}

std::string_view to_string(SelectionMode mode) { return mode == SelectionMode::random ? "random" : "quality"; }

std::uint64_t SelectionManifest::total_target() const {
    std::uint64_t s = 0;
    for (const auto& d : domains) s += d.target_tokens;
    return s;
}

std::uint64_t SelectionManifest::total_realized() const {
    std::uint64_t s = 0;
    for (const auto& d : domains) s += d.realized_tokens;
    return s;
}

std::vector<std::vector<const DocumentRecord*>> domain_members(const CorpusIndex& index, const Taxonomy& tax) {
    if (index.stats_only() && !index.empty())
        throw Error(ErrorCode::invalid_config, "selection needs a full index, not a stats-only one");
    std::vector<std::vector<const DocumentRecord*>> out(tax.arity());
    for (const auto& doc : index.documents()) out[index.category_of(doc, tax)].push_back(&doc);
    return out;
}

namespace {

void check_budgets(const Taxonomy& tax, std::span<const std::uint64_t> budgets) {
    if (budgets.size() != tax.arity())
        throw Error(ErrorCode::length_mismatch, "got " + std::to_string(budgets.size()) + " budgets for " +
                                                    std::to_string(tax.arity()) + " domains");
}

void describe_domain(DomainSelection& sel, const std::vector<const DocumentRecord*>& members,
                     std::uint64_t target) {
    sel.target_tokens = target;
    for (const auto* doc : members) {
        sel.available_tokens += doc->tokens;
        sel.max_document_tokens = std::max(sel.max_document_tokens, doc->tokens);
    }
}

void take(DomainSelection& sel, const DocumentRecord& doc) {
    sel.documents.push_back({doc.id, doc.tokens});
    sel.realized_tokens += doc.tokens;
}

}  // namespace

SelectionManifest select_random(const CorpusIndex& index, TaxonomyPtr tax, std::span<const std::uint64_t> budgets,
                                std::uint64_t seed) {
    check_budgets(*tax, budgets);
    auto members = domain_members(index, *tax);
    SelectionManifest m;
    m.taxonomy = tax;
    m.mode = SelectionMode::random;
    m.seed = seed;
    m.domains.resize(tax->arity());
    parallel_for(tax->arity(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t d = lo; d < hi; ++d) {
            auto& pool = members[d];
            auto& sel = m.domains[d];
            describe_domain(sel, pool, budgets[d]);
            RngStream rng(seed, d);
            // Lazy Fisher-Yates: position k gets a uniform pick of the rest.
            for (std::size_t k = 0; k < pool.size() && sel.realized_tokens < sel.target_tokens; ++k) {
                std::swap(pool[k], pool[k + rng.uniform_index(pool.size() - k)]);
                take(sel, *pool[k]);
            }
            sel.exhausted = sel.realized_tokens < sel.target_tokens;
        }
    });
    return m;
}

SelectionManifest select_by_quality(const CorpusIndex& index, TaxonomyPtr tax, std::span<const std::uint64_t> budgets,
                                    const std::string& score_name) {
    check_budgets(*tax, budgets);
    auto members = domain_members(index, *tax);
    for (const auto& doc : index.documents())
        if (!doc.scores.contains(score_name))
            throw Error(ErrorCode::missing_score, "document '" + doc.id + "' has no score '" + score_name + "'");
    SelectionManifest m;
    m.taxonomy = tax;
    m.mode = SelectionMode::quality;
    m.score_name = score_name;
    m.domains.resize(tax->arity());
    parallel_for(tax->arity(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t d = lo; d < hi; ++d) {
            auto& pool = members[d];
            auto& sel = m.domains[d];
            describe_domain(sel, pool, budgets[d]);
            std::vector<std::pair<double, const DocumentRecord*>> ranked;
            ranked.reserve(pool.size());
            for (const auto* doc : pool) ranked.emplace_back(doc->scores.at(score_name), doc);
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second->id < b.second->id;
            });
            for (std::size_t k = 0; k < ranked.size() && sel.realized_tokens < sel.target_tokens; ++k)
                take(sel, *ranked[k].second);
            sel.exhausted = sel.realized_tokens < sel.target_tokens;
        }
    });
    return m;
}

Redistribution redistribute_overflow(const Mixture& target, std::span<const std::uint64_t> availability,
                                     std::uint64_t total_budget) {
    const std::size_t k = target.arity();
    if (availability.size() != k)
        throw Error(ErrorCode::length_mismatch, "availability has " + std::to_string(availability.size()) +
                                                    " cells, mixture has " + std::to_string(k));
    if (total_budget == 0) throw Error(ErrorCode::invalid_config, "total budget must be at least 1");
    const std::uint64_t avail_total = std::accumulate(availability.begin(), availability.end(), std::uint64_t{0});
    if (avail_total < total_budget)
        throw Error(ErrorCode::insufficient_corpus, "corpus holds " + std::to_string(avail_total) +
                                                        " tokens, budget is " + std::to_string(total_budget));

    const auto b = static_cast<double>(total_budget);
    std::vector<double> x(target.weights().begin(), target.weights().end());
    Redistribution out{target, std::vector<bool>(k, false), 0};
    for (;;) {
        bool changed = false;
        for (std::size_t i = 0; i < k; ++i) {
            if (!out.clamped[i] && x[i] * b > static_cast<double>(availability[i])) {
                x[i] = static_cast<double>(availability[i]) / b;
                out.clamped[i] = true;
                changed = true;
            }
        }
        if (!changed) break;
        ++out.rounds;
        double clamped_mass = 0.0;
        double free_mass = 0.0;
        double free_avail = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (out.clamped[i]) {
                clamped_mass += x[i];
            } else {
                free_mass += x[i];
                free_avail += static_cast<double>(availability[i]);
            }
        }
        const double remaining = std::max(0.0, 1.0 - clamped_mass);
        if (free_mass > 0.0) {
            const double scale = remaining / free_mass;
            for (std::size_t i = 0; i < k; ++i)
                if (!out.clamped[i]) x[i] *= scale;
        } else if (free_avail > 0.0) {
            // Every weighted cell is pinned; fill the zero-weight cells by
            // their share of what is left.
            for (std::size_t i = 0; i < k; ++i)
                if (!out.clamped[i]) x[i] = remaining * static_cast<double>(availability[i]) / free_avail;
        }
    }
    out.mixture = Mixture(target.taxonomy(), std::move(x));
    return out;
}

ManifestStats manifest_stats(const SelectionManifest& manifest) {
    ManifestStats s;
    const std::size_t k = manifest.domains.size();
    s.shortfall.resize(k);
    s.overshoot.resize(k);
    std::vector<double> realized(k);
    for (std::size_t d = 0; d < k; ++d) {
        const auto& dom = manifest.domains[d];
        realized[d] = static_cast<double>(dom.realized_tokens);
        if (dom.realized_tokens < dom.target_tokens) s.shortfall[d] = dom.target_tokens - dom.realized_tokens;
        else s.overshoot[d] = dom.realized_tokens - dom.target_tokens;
        if (dom.exhausted) s.exhausted.push_back(d);
    }
    if (manifest.total_realized() > 0) s.realized = Mixture::from_masses(manifest.taxonomy, realized);
    return s;
}

Mixture implicit_mixture(const CorpusIndex& index, TaxonomyPtr tax) {
    if (index.empty()) throw Error(ErrorCode::empty_selection, "corpus is empty");
    const auto counts = index.category_counts(*tax);
    std::vector<double> masses(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) masses[i] = static_cast<double>(counts[i].tokens);
    return Mixture::from_masses(tax, masses);
}

Mixture implicit_mixture(std::span<const std::string> doc_ids, const CorpusIndex& index, TaxonomyPtr tax) {
    std::vector<double> masses(tax->arity(), 0.0);
    std::uint64_t total = 0;
    for (const auto& id : doc_ids) {
        const auto* doc = index.find(id);
        if (!doc) throw Error(ErrorCode::unknown_label, "document '" + id + "' is not in the corpus");
        masses[index.category_of(*doc, *tax)] += static_cast<double>(doc->tokens);
        total += doc->tokens;
    }
    if (total == 0) throw Error(ErrorCode::empty_selection, "selection holds no tokens");
    return Mixture::from_masses(tax, masses);
}

Mixture implicit_mixture(const SelectionManifest& manifest, const CorpusIndex& index, TaxonomyPtr tax) {
    std::vector<std::string> ids;
    for (const auto& dom : manifest.domains)
        for (const auto& doc : dom.documents) ids.push_back(doc.id);
    return implicit_mixture(ids, index, tax);
}

std::string manifest_jsonl(const SelectionManifest& manifest) {
    std::string out;
    for (std::size_t d = 0; d < manifest.domains.size(); ++d) {
        for (const auto& doc : manifest.domains[d].documents) {
            json line;
            line["id"] = doc.id;
            line["tokens"] = doc.tokens;
            line["domain"] = manifest.taxonomy->name(d);
            out += line.dump();
            out += '\n';
        }
    }
    return out;
}

json manifest_summary(const SelectionManifest& manifest) {
    json j;
    j["taxonomy"] = manifest.taxonomy->spec();
    j["mode"] = to_string(manifest.mode);
    if (manifest.mode == SelectionMode::random) j["seed"] = manifest.seed;
    else j["score"] = manifest.score_name;
    j["total_target_tokens"] = manifest.total_target();
    j["total_realized_tokens"] = manifest.total_realized();
    std::size_t n_docs = 0;
    json domains = json::array();
    for (std::size_t d = 0; d < manifest.domains.size(); ++d) {
        const auto& dom = manifest.domains[d];
        n_docs += dom.documents.size();
        domains.push_back({{"domain", manifest.taxonomy->name(d)},
                           {"target_tokens", dom.target_tokens},
                           {"realized_tokens", dom.realized_tokens},
                           {"available_tokens", dom.available_tokens},
                           {"documents", dom.documents.size()},
                           {"exhausted", dom.exhausted}});
    }
    j["total_documents"] = n_docs;
    const auto stats = manifest_stats(manifest);
    j["realized_mixture"] = stats.realized ? stats.realized->to_json() : json(nullptr);
    json exhausted = json::array();
    for (auto d : stats.exhausted) exhausted.push_back(manifest.taxonomy->name(d));
    j["exhausted_domains"] = exhausted;
    j["domains"] = domains;
    return j;
}

std::vector<std::string> read_manifest_ids(const std::filesystem::path& path) {
    std::vector<std::string> ids;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            ids.push_back(json::parse(line).at("id").get<std::string>());
        } catch (const json::exception& e) {
            throw Error(ErrorCode::malformed_record,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return ids;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

HoldoutSplit split_holdout(const CorpusIndex& index, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw Error(ErrorCode::invalid_config, "holdout fraction must be in [0, 1)");
    CorpusBuilder builder(index.topics(), index.formats());
    std::vector<std::string> held;
    for (const auto& doc : index.documents()) {
        RngStream rng(seed, fnv1a(doc.id));
        if (rng.uniform() < fraction) held.push_back(doc.id);
        else builder.add(doc);
    }
    return {std::move(builder).build(), std::move(held)};
}

ComposedSelection compose_quality_mixture(const CorpusIndex& index, const Mixture& topic_mix,
                                          const Mixture& format_mix, const std::string& score_name,
                                          std::uint64_t total_budget) {
    require_same_taxonomy(*topic_mix.taxonomy(), *index.topics());
    require_same_taxonomy(*format_mix.taxonomy(), *index.formats());
    Mixture intended = product_mixture(topic_mix, format_mix);
    const auto counts = index.category_counts(*intended.taxonomy());
    std::vector<std::uint64_t> avail(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) avail[i] = counts[i].tokens;
    auto feasible = redistribute_overflow(intended, avail, total_budget).mixture;
    auto budgets = token_budgets(feasible, total_budget);
    auto manifest = select_by_quality(index, intended.taxonomy(), budgets, score_name);
    return {std::move(intended), std::move(feasible), std::move(budgets), std::move(manifest)};
}

}  // namespace corpus_mixer
