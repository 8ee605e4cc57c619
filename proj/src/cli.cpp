#include "corpus_mixer/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "corpus_mixer/corpus.hpp"
#include "corpus_mixer/error.hpp"
#include "corpus_mixer/kmeans.hpp"
#include "corpus_mixer/lab.hpp"
#include "corpus_mixer/mixture.hpp"
#include "corpus_mixer/regression.hpp"
#include "corpus_mixer/sampling.hpp"
#include "corpus_mixer/search.hpp"
#include "corpus_mixer/selection.hpp"
#include "corpus_mixer/stats.hpp"

namespace corpus_mixer::cli {

namespace fs = std::filesystem;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json artifact(const json& config, json body) {
    json doc;
    doc["metadata"] = artifact_metadata();
    doc["config"] = config;
    for (auto& [k, v] : body.items()) doc[k] = std::move(v);
    return doc;
}

json factors_json(const Mixture& mix, const Mixture& reference) {
    json j = json::object();
    const auto f = upsampling_factors(mix, reference);
    for (std::size_t i = 0; i < f.size(); ++i) j[mix.taxonomy()->name(i)] = finite_or_null(f[i]);
    return j;
}

// A bare mixture, or any artifact carrying one under "mixture" (search and
// implicit outputs).
Mixture read_mixture(const std::string& path) {
    const auto doc = read_json_file(path);
    if (!doc.contains("taxonomy") && doc.contains("mixture")) return Mixture::from_json(doc.at("mixture"));
    return Mixture::from_json(doc);
}

void write_mixture(const std::string& path, const json& config, const Mixture& mix) {
    write_json_atomic(path, artifact(config, mix.to_json()));
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir + ": " + ec.message());
}

// ---- shared option groups ----

struct CorpusOptions {
    std::vector<std::string> inputs;
    bool stats_only = false;
    bool skip_malformed = false;

    void add(CLI::App* app, bool allow_stats_only) {
        app->add_option("--input", inputs, "corpus JSONL files or globs")->required();
        if (allow_stats_only) app->add_flag("--stats-only", stats_only, "keep aggregate counts only");
        app->add_flag("--skip-malformed", skip_malformed, "skip unparseable lines instead of failing");
    }

    IngestResult load() const {
        std::vector<fs::path> paths;
        for (const auto& pattern : inputs)
            for (auto& p : expand_glob(pattern)) paths.push_back(std::move(p));
        return read_corpus_files(paths, canonical_topics(), canonical_formats(), {stats_only, skip_malformed});
    }

    json to_json() const {
        return {{"input", inputs}, {"stats_only", stats_only}, {"skip_malformed", skip_malformed}};
    }
};

TaxonomyPtr resolve_taxonomy(const std::string& spec, const CorpusIndex& index) {
    if (spec == "cluster") {
        if (index.cluster_arity() == 0) throw Error(ErrorCode::missing_annotation, "corpus has no cluster annotations");
        return cluster_taxonomy(index.cluster_arity());
    }
    return parse_taxonomy_spec(spec);
}

struct SearchOptions {
    SearchParams params;
    std::size_t n_seeds = kSearchSeedCount;

    void add(CLI::App* app) {
        app->add_option("--n-per-step", params.n_per_step, "candidate mixtures per step")->capture_default_str();
        app->add_option("--steps", params.steps, "search steps")->capture_default_str();
        app->add_option("--kl-coeff", params.kl_coeff, "KL regularization weight")->capture_default_str();
        app->add_option("--smoothing", params.smoothing, "prior update rate")->capture_default_str();
        app->add_option("--cap", params.cap, "max upsampling factor against the prior")->capture_default_str();
        app->add_option("--line-search-points", params.line_search_points)->capture_default_str();
        app->add_option("--log-alpha-low", params.log_alpha_low)->capture_default_str();
        app->add_option("--log-alpha-high", params.log_alpha_high)->capture_default_str();
        app->add_option("--attempts", params.attempts_per_candidate, "cap redraws per candidate")
            ->capture_default_str();
        app->add_option("--seed", params.seed, "first search seed")->capture_default_str();
        app->add_option("--n-seeds", n_seeds, "independent searches; the best is kept")->capture_default_str();
    }

    std::vector<std::uint64_t> seeds() const {
        if (n_seeds == 0) throw Error(ErrorCode::invalid_config, "--n-seeds must be positive");
        std::vector<std::uint64_t> s(n_seeds);
        for (std::size_t i = 0; i < n_seeds; ++i) s[i] = params.seed + i;
        return s;
    }

    json to_json() const {
        json j = params.to_json();
        j["n_seeds"] = n_seeds;
        return j;
    }
};

struct GbtOptions {
    GbtParams params;

    void add(CLI::App* app) {
        app->add_option("--n-trees", params.n_trees)->capture_default_str();
        app->add_option("--max-depth", params.max_depth)->capture_default_str();
        app->add_option("--learning-rate", params.learning_rate)->capture_default_str();
        app->add_option("--min-leaf", params.min_samples_leaf)->capture_default_str();
    }
};

struct SamplerOptions {
    double temperature = kPriorTemperature;
    std::size_t n = kConfigMixtureCount;
    double log_alpha_low = kConfigLogAlphaLow;
    double log_alpha_high = kConfigLogAlphaHigh;
    double cap = 0.0;
    std::uint64_t seed = 0;

    void add(CLI::App* app) {
        app->add_option("--temperature", temperature, "prior temperature")->capture_default_str();
        app->add_option("--n", n, "number of mixtures")->capture_default_str();
        app->add_option("--log-alpha-low", log_alpha_low)->capture_default_str();
        app->add_option("--log-alpha-high", log_alpha_high)->capture_default_str();
        app->add_option("--cap", cap, "max upsampling factor (0 = none)")->capture_default_str();
        app->add_option("--seed", seed)->capture_default_str();
    }

    SamplerConfig config(const Mixture& reference) const {
        SamplerConfig cfg{temper(reference, temperature), n, log_alpha_low, log_alpha_high, std::nullopt, seed};
        if (cap > 0.0) cfg.cap = cap;
        return cfg;
    }

    json to_json() const {
        return {{"temperature", temperature},
                {"n_mixtures", n},
                {"log_alpha_low", log_alpha_low},
                {"log_alpha_high", log_alpha_high},
                {"cap", cap > 0.0 ? json(cap) : json(nullptr)},
                {"seed", seed}};
    }
};

std::vector<std::shared_ptr<const LossPredictor>> load_models(const std::vector<std::string>& paths) {
    std::vector<std::shared_ptr<const LossPredictor>> models;
    for (const auto& path : paths) {
        const auto doc = read_json_file(path);
        if (doc.contains("models")) {
            for (const auto& m : doc.at("models")) models.push_back(std::make_shared<SurrogateModel>(SurrogateModel::from_json(m)));
        } else {
            models.push_back(std::make_shared<SurrogateModel>(SurrogateModel::from_json(doc)));
        }
    }
    if (models.empty()) throw Error(ErrorCode::invalid_spec, "no models found");
    return models;
}

void write_manifest(const std::string& dir, const SelectionManifest& manifest, json summary) {
    ensure_dir(dir);
    write_file_atomic(fs::path(dir) / "manifest.jsonl", manifest_jsonl(manifest));
    write_json_atomic(fs::path(dir) / "summary.json", summary);
}

json budgets_json(const Taxonomy& tax, std::span<const std::uint64_t> budgets) {
    json j = json::object();
    for (std::size_t i = 0; i < budgets.size(); ++i)
        if (budgets[i] > 0) j[tax.name(i)] = budgets[i];
    return j;
}

std::vector<Mixture> read_sampled_mixtures(const std::string& path, std::optional<Mixture>& reference) {
    const auto doc = read_json_file(path);
    std::vector<Mixture> out;
    try {
        if (doc.contains("reference")) reference = Mixture::from_json(doc.at("reference"));
        for (const auto& m : doc.at("mixtures")) out.push_back(Mixture::from_json(m.at("mixture")));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_spec, path + ": " + e.what());
    }
    return out;
}

}  // namespace

json default_config() {
    SearchOptions search;
    GbtParams gbt;
    SamplerOptions sampler;
    KMeansParams km;
    return {{"sample-mixtures", sampler.to_json()},
            {"fit", gbt.to_json()},
            {"search", search.to_json()},
            {"cluster", {{"k", km.k}, {"seed", km.seed}, {"max_iters", km.max_iters}, {"tol", km.tol}, {"normalize", true}}},
            {"stats", {{"weighting", to_string(Weighting::tokens)}}}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Corpus domain statistics, mixture search and data selection", "corpus-mixer"};
    app.set_version_flag("--version", std::string(kToolVersion));
    bool dump_config = false;
    app.add_flag("--dump-config", dump_config, "print default parameters as JSON and exit");

    // stats
    auto* stats = app.add_subcommand("stats", "domain composition, NPMI and NMI of a corpus");
    CorpusOptions stats_corpus;
    std::string stats_weighting = "tokens";
    std::string stats_out;
    std::string stats_prior_out;
    std::string stats_taxonomy = "topic";
    stats_corpus.add(stats, true);
    stats->add_option("--weighting", stats_weighting)->check(CLI::IsMember({"tokens", "documents"}))->capture_default_str();
    stats->add_option("--out", stats_out, "report JSON")->required();
    stats->add_option("--prior-out", stats_prior_out, "also write the corpus prior as a mixture");
    stats->add_option("--taxonomy", stats_taxonomy, "taxonomy of --prior-out")->capture_default_str();

    // sample-mixtures
    auto* sample = app.add_subcommand("sample-mixtures", "draw config mixtures around the tempered prior");
    std::string sample_prior;
    std::string sample_out;
    SamplerOptions sampler;
    sample->add_option("--prior", sample_prior, "untempered corpus prior mixture")->required();
    sample->add_option("--out", sample_out, "mixtures JSON")->required();
    sampler.add(sample);

    // fit
    auto* fitc = app.add_subcommand("fit", "fit per-target GBT surrogates on run observations");
    std::string fit_obs;
    std::vector<std::string> fit_targets;
    std::size_t fit_holdout = 0;
    std::string fit_out;
    GbtOptions gbt;
    fitc->add_option("--observations", fit_obs, "JSONL of {mixture, losses}")->required();
    fitc->add_option("--target", fit_targets, "loss names (default: all)");
    fitc->add_option("--holdout", fit_holdout, "score on the last H observations")->capture_default_str();
    fitc->add_option("--out", fit_out, "model JSON")->required();
    gbt.add(fitc);

    // search
    auto* searchc = app.add_subcommand("search", "adaptive search for the lowest predicted loss");
    std::vector<std::string> search_models;
    std::string search_prior;
    std::string search_out;
    bool search_trace = false;
    SearchOptions search;
    searchc->add_option("--model", search_models, "model JSON files; targets are averaged")->required();
    searchc->add_option("--prior", search_prior, "corpus prior mixture")->required();
    searchc->add_option("--out", search_out, "result JSON")->required();
    searchc->add_flag("--trace", search_trace, "include the per-step trace");
    search.add(searchc);

    // select
    auto* selectc = app.add_subcommand("select", "materialize a mixture as a document manifest");
    CorpusOptions select_corpus;
    std::string select_mixture;
    std::uint64_t select_budget = 0;
    std::string select_mode = "random";
    std::string select_score;
    std::uint64_t select_seed = 0;
    bool select_redistribute = false;
    double select_holdout = 0.0;
    std::string select_out;
    select_corpus.add(selectc, false);
    selectc->add_option("--mixture", select_mixture)->required();
    selectc->add_option("--budget", select_budget, "total tokens")->required()->check(CLI::PositiveNumber);
    selectc->add_option("--mode", select_mode)->check(CLI::IsMember({"random", "quality"}))->capture_default_str();
    selectc->add_option("--score", select_score, "score name for quality mode");
    selectc->add_option("--seed", select_seed)->capture_default_str();
    selectc->add_flag("--redistribute", select_redistribute, "move infeasible mass to cells with spare tokens");
    selectc->add_option("--holdout-fraction", select_holdout, "documents set aside before selection")
        ->capture_default_str();
    selectc->add_option("--out", select_out, "output directory")->required();

    // implicit
    auto* implicitc = app.add_subcommand("implicit", "domain composition of a selection");
    CorpusOptions implicit_corpus;
    std::string implicit_manifest;
    std::string implicit_taxonomy = "topic";
    std::string implicit_out;
    implicit_corpus.add(implicitc, false);
    implicitc->add_option("--manifest", implicit_manifest, "manifest JSONL (default: whole corpus)");
    implicitc->add_option("--taxonomy", implicit_taxonomy)->capture_default_str();
    implicitc->add_option("--out", implicit_out)->required();

    // cluster
    auto* clusterc = app.add_subcommand("cluster", "k-means over document embeddings");
    std::string cl_embeddings;
    std::string cl_ids;
    KMeansParams km;
    bool cl_no_normalize = false;
    std::string cl_out;
    std::string cl_assignments;
    std::vector<std::string> cl_inputs;
    std::string cl_weighting = "tokens";
    clusterc->add_option("--embeddings", cl_embeddings)->required();
    clusterc->add_option("--ids", cl_ids)->required();
    clusterc->add_option("--k", km.k)->capture_default_str();
    clusterc->add_option("--seed", km.seed)->capture_default_str();
    clusterc->add_option("--max-iters", km.max_iters)->capture_default_str();
    clusterc->add_option("--tol", km.tol)->capture_default_str();
    clusterc->add_flag("--no-normalize", cl_no_normalize, "skip L2 normalization");
    clusterc->add_option("--out", cl_out, "model JSON")->required();
    clusterc->add_option("--assignments", cl_assignments, "JSONL of {id, cluster}");
    clusterc->add_option("--input", cl_inputs, "corpus to compare clusters against topic/format");
    clusterc->add_option("--weighting", cl_weighting)->check(CLI::IsMember({"tokens", "documents"}))->capture_default_str();

    // compose
    auto* composec = app.add_subcommand("compose", "topic x format mixture with per-cell quality selection");
    CorpusOptions compose_corpus;
    std::string compose_topic;
    std::string compose_format;
    std::string compose_score;
    std::uint64_t compose_budget = 0;
    std::string compose_out;
    compose_corpus.add(composec, false);
    composec->add_option("--topic-mixture", compose_topic)->required();
    composec->add_option("--format-mixture", compose_format)->required();
    composec->add_option("--score", compose_score)->required();
    composec->add_option("--budget", compose_budget)->required()->check(CLI::PositiveNumber);
    composec->add_option("--out", compose_out, "output directory")->required();

    // lab
    auto* lab = app.add_subcommand("lab", "synthetic corpora and planted mixing laws");
    lab->require_subcommand(1);
    auto* gen = lab->add_subcommand("generate", "write a synthetic corpus");
    std::string gen_spec;
    std::size_t gen_docs = 10000;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    std::string gen_spec_out;
    std::string gen_emb_out;
    std::string gen_ids_out;
    double gen_topic_strength = 1.0;
    double gen_format_strength = 0.3;
    double gen_emb_noise = 0.3;
    gen->add_option("--spec", gen_spec, "generator spec JSON (default: built-in planted spec)");
    gen->add_option("--n-docs", gen_docs)->capture_default_str();
    gen->add_option("--seed", gen_seed)->capture_default_str();
    gen->add_option("--out", gen_out, "corpus JSONL")->required();
    gen->add_option("--spec-out", gen_spec_out, "write the spec used");
    gen->add_option("--embeddings-out", gen_emb_out, "topic-correlated embeddings (binary)");
    gen->add_option("--ids-out", gen_ids_out, "id sidecar for --embeddings-out");
    gen->add_option("--topic-strength", gen_topic_strength)->capture_default_str();
    gen->add_option("--format-strength", gen_format_strength)->capture_default_str();
    gen->add_option("--embedding-noise", gen_emb_noise)->capture_default_str();

    auto* lawc = lab->add_subcommand("law", "write a random planted law");
    std::string law_kind = "quadratic_bowl";
    std::string law_prior;
    std::string law_name = "loss";
    std::uint64_t law_seed = 0;
    double law_noise = 0.0;
    std::string law_out;
    lawc->add_option("--kind", law_kind)
        ->check(CLI::IsMember({"linear", "log_linear", "quadratic_bowl", "interaction"}))
        ->capture_default_str();
    lawc->add_option("--prior", law_prior)->required();
    lawc->add_option("--name", law_name)->capture_default_str();
    lawc->add_option("--seed", law_seed)->capture_default_str();
    lawc->add_option("--noise-sigma", law_noise)->capture_default_str();
    lawc->add_option("--out", law_out)->required();

    auto* regmix = lab->add_subcommand("regmix", "observe planted laws, fit, search and score the result");
    std::vector<std::string> rm_laws;
    std::string rm_mixtures;
    std::size_t rm_holdout = 50;
    std::uint64_t rm_noise_seed = 0;
    std::string rm_out;
    std::string rm_obs_out;
    GbtOptions rm_gbt;
    SearchOptions rm_search;
    regmix->add_option("--law", rm_laws, "law JSON files")->required();
    regmix->add_option("--mixtures", rm_mixtures, "output of sample-mixtures")->required();
    regmix->add_option("--holdout", rm_holdout)->capture_default_str();
    regmix->add_option("--noise-seed", rm_noise_seed)->capture_default_str();
    regmix->add_option("--out", rm_out)->required();
    regmix->add_option("--observations-out", rm_obs_out, "JSONL of the simulated runs");
    rm_gbt.add(regmix);
    rm_search.add(regmix);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (dump_config) {
            out << default_config().dump(2) << "\n";
            return 0;
        }

        if (*stats) {
            auto loaded = stats_corpus.load();
            const auto w = parse_weighting(stats_weighting);
            json config = stats_corpus.to_json();
            config["weighting"] = stats_weighting;
            write_json_atomic(stats_out, artifact(config, {{"malformed_lines", loaded.malformed_lines},
                                                           {"report", composition_report(loaded.index, w)}}));
            if (!stats_prior_out.empty()) {
                config["taxonomy"] = stats_taxonomy;
                write_mixture(stats_prior_out, config,
                              domain_proportions(loaded.index, resolve_taxonomy(stats_taxonomy, loaded.index), w));
            }
            return 0;
        }

        if (*sample) {
            const auto reference = read_mixture(sample_prior);
            const auto cfg = sampler.config(reference);
            json rows = json::array();
            for (const auto& s : sample_config_mixtures(cfg, reference))
                rows.push_back({{"index", s.index}, {"alpha", s.alpha}, {"mixture", s.mixture.to_json()}});
            json config = sampler.to_json();
            config["prior"] = sample_prior;
            write_json_atomic(sample_out, artifact(config, {{"reference", reference.to_json()},
                                                            {"prior", cfg.prior.to_json()},
                                                            {"mixtures", rows}}));
            return 0;
        }

        if (*fitc) {
            auto observations = read_observations(fit_obs);
            if (fit_targets.empty()) {
                std::set<std::string> names;
                for (const auto& o : observations)
                    for (const auto& [name, v] : o.losses) names.insert(name);
                fit_targets.assign(names.begin(), names.end());
            }
            if (fit_holdout >= observations.size())
                throw Error(ErrorCode::insufficient_data, "holdout leaves no observations to fit");
            const auto n_train = observations.size() - fit_holdout;
            std::vector<RunObservation> train(observations.begin(), observations.begin() + static_cast<std::ptrdiff_t>(n_train));
            json models = json::array();
            json holdout = json::object();
            for (const auto& target : fit_targets) {
                auto model = fit(train, target, gbt.params);
                models.push_back(model.to_json());
                std::vector<double> pred;
                std::vector<double> actual;
                for (std::size_t i = n_train; i < observations.size(); ++i) {
                    auto it = observations[i].losses.find(target);
                    if (it == observations[i].losses.end()) continue;
                    pred.push_back(model.predict(observations[i].mixture));
                    actual.push_back(it->second);
                }
                if (pred.size() >= 2) holdout[target] = spearman(pred, actual);
            }
            json config = gbt.params.to_json();
            config["observations"] = fit_obs;
            config["targets"] = fit_targets;
            config["holdout"] = fit_holdout;
            json body = {{"models", models}};
            if (fit_holdout > 0) body["holdout_spearman"] = holdout;
            write_json_atomic(fit_out, artifact(config, std::move(body)));
            return 0;
        }

        if (*searchc) {
            MultiTargetPredictor predictor(load_models(search_models));
            const auto prior = read_mixture(search_prior);
            const auto seeds = search.seeds();
            const auto result = multi_seed_search(predictor, prior, search.params, seeds);
            json config = search.to_json();
            config["models"] = search_models;
            config["prior"] = search_prior;
            json body = {{"mixture", result.mixture.to_json()},
                         {"objective", result.value},
                         {"seed", result.seed},
                         {"upsampling_factors", factors_json(result.mixture, prior)}};
            if (search_trace) body["trace"] = trace_to_json(result);
            write_json_atomic(search_out, artifact(config, std::move(body)));
            return 0;
        }

        if (*selectc) {
            if (select_mode == "quality" && select_score.empty())
                throw CLI::ValidationError("--score", "required with --mode quality");
            auto loaded = select_corpus.load();
            const auto target = read_mixture(select_mixture);
            const auto tax = target.taxonomy();
            CorpusIndex index = std::move(loaded.index);
            std::vector<std::string> held;
            if (select_holdout > 0.0) {
                auto split = split_holdout(index, select_holdout, select_seed);
                index = std::move(split.train);
                held = std::move(split.holdout_ids);
            }
            Mixture feasible = target;
            if (select_redistribute) {
                const auto counts = index.category_counts(*tax);
                std::vector<std::uint64_t> avail(counts.size());
                for (std::size_t i = 0; i < counts.size(); ++i) avail[i] = counts[i].tokens;
                feasible = redistribute_overflow(target, avail, select_budget).mixture;
            }
            const auto budgets = token_budgets(feasible, select_budget);
            const auto manifest = select_mode == "random"
                                      ? select_random(index, tax, budgets, select_seed)
                                      : select_by_quality(index, tax, budgets, select_score);
            json config = select_corpus.to_json();
            config.update({{"mixture", select_mixture},
                           {"budget", select_budget},
                           {"mode", select_mode},
                           {"score", select_score},
                           {"seed", select_seed},
                           {"redistribute", select_redistribute},
                           {"holdout_fraction", select_holdout}});
            json body = manifest_summary(manifest);
            body["intended_mixture"] = target.to_json();
            if (select_redistribute) body["feasible_mixture"] = feasible.to_json();
            body["budgets"] = budgets_json(*tax, budgets);
            if (select_holdout > 0.0) {
                body["holdout_documents"] = held.size();
                ensure_dir(select_out);
                std::string text;
                for (const auto& id : held) text += id + "\n";
                write_file_atomic(fs::path(select_out) / "holdout.txt", text);
            }
            write_manifest(select_out, manifest, artifact(config, std::move(body)));
            return 0;
        }

        if (*implicitc) {
            auto loaded = implicit_corpus.load();
            const auto tax = resolve_taxonomy(implicit_taxonomy, loaded.index);
            const auto corpus_mix = implicit_mixture(loaded.index, tax);
            json config = implicit_corpus.to_json();
            config["taxonomy"] = implicit_taxonomy;
            config["manifest"] = implicit_manifest;
            json body;
            if (implicit_manifest.empty()) {
                body["documents"] = loaded.index.document_count();
                body["mixture"] = corpus_mix.to_json();
            } else {
                const auto ids = read_manifest_ids(implicit_manifest);
                const auto mix = implicit_mixture(ids, loaded.index, tax);
                body["documents"] = ids.size();
                body["mixture"] = mix.to_json();
                body["corpus_mixture"] = corpus_mix.to_json();
                body["upsampling_factors"] = factors_json(mix, corpus_mix);
            }
            write_json_atomic(implicit_out, artifact(config, std::move(body)));
            return 0;
        }

        if (*clusterc) {
            auto set = read_embeddings(cl_embeddings, cl_ids);
            if (!cl_no_normalize) l2_normalize(set);
            const auto model = kmeans(set, km);
            const auto labels = assign_all(model, set);
            json config = {{"embeddings", cl_embeddings}, {"ids", cl_ids}, {"k", km.k}, {"seed", km.seed},
                           {"max_iters", km.max_iters}, {"tol", km.tol}, {"normalize", !cl_no_normalize}};
            json body = model.to_json();
            if (!cl_inputs.empty()) {
                CorpusOptions corpus{cl_inputs, false, false};
                const auto loaded = corpus.load();
                std::vector<std::size_t> assignments;
                std::vector<std::size_t> topics;
                std::vector<std::size_t> formats;
                std::vector<double> weights;
                for (std::size_t i = 0; i < set.size(); ++i) {
                    const auto* doc = loaded.index.find(set.ids[i]);
                    if (!doc) throw Error(ErrorCode::unknown_label, "embedding id '" + set.ids[i] + "' is not in the corpus");
                    assignments.push_back(labels[i]);
                    topics.push_back(doc->topic);
                    formats.push_back(doc->format);
                    weights.push_back(cl_weighting == "tokens" ? static_cast<double>(doc->tokens) : 1.0);
                }
                body["nmi"] = {{"weighting", cl_weighting},
                               {"topic", cluster_taxonomy_nmi(assignments, topics, weights)},
                               {"format", cluster_taxonomy_nmi(assignments, formats, weights)}};
                config["input"] = cl_inputs;
            }
            write_json_atomic(cl_out, artifact(config, std::move(body)));
            if (!cl_assignments.empty()) {
                std::string text;
                for (std::size_t i = 0; i < set.size(); ++i)
                    text += json({{"id", set.ids[i]}, {"cluster", labels[i]}}).dump() + "\n";
                write_file_atomic(cl_assignments, text);
            }
            return 0;
        }

        if (*composec) {
            auto loaded = compose_corpus.load();
            const auto result = compose_quality_mixture(loaded.index, read_mixture(compose_topic),
                                                        read_mixture(compose_format), compose_score, compose_budget);
            json config = compose_corpus.to_json();
            config.update({{"topic_mixture", compose_topic},
                           {"format_mixture", compose_format},
                           {"score", compose_score},
                           {"budget", compose_budget}});
            json body = manifest_summary(result.manifest);
            body["intended_mixture"] = result.intended.to_json();
            body["feasible_mixture"] = result.feasible.to_json();
            write_manifest(compose_out, result.manifest, artifact(config, std::move(body)));
            return 0;
        }

        if (*gen) {
            GeneratorSpec spec = gen_spec.empty() ? default_generator_spec(gen_docs, gen_seed)
                                                  : GeneratorSpec::from_json(read_json_file(gen_spec));
            if (!gen_spec.empty()) {
                if (gen->count("--n-docs")) spec.n_docs = gen_docs;
                if (gen->count("--seed")) spec.seed = gen_seed;
            }
            const auto records = generate_corpus(spec);
            std::string text;
            for (const auto& r : records)
                text += record_to_json(r, *canonical_topics(), *canonical_formats()).dump() + "\n";
            write_file_atomic(gen_out, text);
            if (!gen_spec_out.empty()) write_json_atomic(gen_spec_out, artifact({{"spec", gen_spec}}, spec.to_json()));
            if (!gen_emb_out.empty()) {
                if (gen_ids_out.empty()) throw CLI::ValidationError("--ids-out", "required with --embeddings-out");
                write_embeddings(generate_embeddings(records, gen_topic_strength, gen_format_strength, gen_emb_noise, spec.seed),
                                 gen_emb_out, gen_ids_out);
            }
            return 0;
        }

        if (*lawc) {
            const auto law = random_law(parse_law_kind(law_kind), read_mixture(law_prior), law_seed, law_name);
            MixingLaw noisy = law;
            noisy.noise_sigma = law_noise;
            noisy.validate();
            json config = {{"kind", law_kind}, {"prior", law_prior}, {"name", law_name}, {"seed", law_seed},
                           {"noise_sigma", law_noise}};
            write_json_atomic(law_out, artifact(config, noisy.to_json()));
            return 0;
        }

        if (*regmix) {
            std::vector<MixingLaw> laws;
            for (const auto& p : rm_laws) laws.push_back(MixingLaw::from_json(read_json_file(p)));
            std::optional<Mixture> reference;
            const auto mixtures = read_sampled_mixtures(rm_mixtures, reference);
            if (!reference) throw Error(ErrorCode::invalid_spec, rm_mixtures + " has no reference prior");
            RegmixConfig cfg{.laws = laws,
                             .reference = *reference,
                             .sampler = SamplerConfig{*reference, kConfigMixtureCount, kConfigLogAlphaLow, kConfigLogAlphaHigh, std::nullopt, 0},
                             .gbt = rm_gbt.params,
                             .search = rm_search.params,
                             .seeds = rm_search.seeds(),
                             .holdout = rm_holdout,
                             .noise_seed = rm_noise_seed};
            const auto observations = observe_laws(laws, mixtures, rm_noise_seed);
            if (!rm_obs_out.empty()) {
                std::string text;
                for (const auto& o : observations) text += observation_to_json(o).dump() + "\n";
                write_file_atomic(rm_obs_out, text);
            }
            const auto report = regmix_from_observations(cfg, observations);
            json config = rm_search.to_json();
            config["gbt"] = rm_gbt.params.to_json();
            config.update({{"laws", rm_laws}, {"mixtures", rm_mixtures}, {"holdout", rm_holdout},
                           {"noise_seed", rm_noise_seed}});
            write_json_atomic(rm_out, artifact(config, report.to_json()));
            return 0;
        }

        out << app.help();
        return 2;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << json({{"error", to_string(e.code())}, {"message", e.what()}}).dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << json({{"error", "Internal"}, {"message", e.what()}}).dump() << "\n";
        return 1;
    }
}

}  // namespace corpus_mixer::cli
