#include "corpus_mixer/regression.hpp"

#include "corpus_mixer/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace corpus_mixer {

std::vector<RunObservation> read_observations(const std::filesystem::path& path) {
    std::vector<RunObservation> out;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto doc = json::parse(line);
            std::map<std::string, double> losses;
            for (const auto& [name, value] : doc.at("losses").items()) {
                const double v = value.get<double>();
                if (!std::isfinite(v)) throw Error(ErrorCode::malformed_record, "loss '" + name + "' is not finite");
                losses[name] = v;
            }
            if (losses.empty()) throw Error(ErrorCode::malformed_record, "observation without losses");
            out.push_back({Mixture::from_json(doc.at("mixture")), std::move(losses)});
        } catch (const json::exception& e) {
            throw Error(ErrorCode::malformed_record, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

json observation_to_json(const RunObservation& obs) {
    json losses = json::object();
    for (const auto& [name, value] : obs.losses) losses[name] = value;
    return {{"mixture", obs.mixture.to_json()}, {"losses", std::move(losses)}};
}

double LossPredictor::predict(const Mixture& mix) const {
    require_same_taxonomy(*taxonomy(), *mix.taxonomy());
    return predict(mix.weights());
}

void GbtParams::validate() const {
    if (n_trees == 0) throw Error(ErrorCode::invalid_config, "n_trees must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw Error(ErrorCode::invalid_config, "learning_rate must be positive");
    }
    if (min_samples_leaf == 0) throw Error(ErrorCode::invalid_config, "min_samples_leaf must be positive");
}

json GbtParams::to_json() const {
    return {{"n_trees", n_trees},
            {"max_depth", max_depth},
            {"learning_rate", learning_rate},
            {"min_samples_leaf", min_samples_leaf}};
}

GbtParams GbtParams::from_json(const json& doc) {
    GbtParams p;
    p.n_trees = doc.at("n_trees").get<std::size_t>();
    p.max_depth = doc.at("max_depth").get<std::size_t>();
    p.learning_rate = doc.at("learning_rate").get<double>();
    p.min_samples_leaf = doc.at("min_samples_leaf").get<std::size_t>();
    return p;
}

json RegressionTree::to_json() const {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array();
    for (const auto& n : nodes_) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

RegressionTree RegressionTree::from_json(const json& doc) {
    const auto feature = doc.at("feature").get<std::vector<int>>();
    const auto threshold = doc.at("threshold").get<std::vector<double>>();
    const auto left = doc.at("left").get<std::vector<int>>();
    const auto right = doc.at("right").get<std::vector<int>>();
    const auto value = doc.at("value").get<std::vector<double>>();
    const std::size_t n = feature.size();
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n) {
        throw Error(ErrorCode::invalid_spec, "tree arrays have inconsistent lengths");
    }
    std::vector<Node> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i]};
        if (feature[i] >= 0) {
            const auto in_range = [&](int child) { return child > static_cast<int>(i) && child < static_cast<int>(n); };
            if (!in_range(left[i]) || !in_range(right[i])) throw Error(ErrorCode::invalid_spec, "tree child out of range");
        }
    }
    return RegressionTree(std::move(nodes));
}

SurrogateModel::SurrogateModel(TaxonomyPtr tax, std::string target, GbtParams params, double base_score,
                               std::vector<RegressionTree> trees, std::size_t n_observations)
    : tax_(std::move(tax)),
      target_(std::move(target)),
      params_(params),
      base_score_(base_score),
      trees_(std::move(trees)),
      n_observations_(n_observations) {}

double SurrogateModel::predict(std::span<const double> weights) const {
    double boost = 0.0;
    for (const auto& tree : trees_) boost += tree.predict(weights);
    return base_score_ + params_.learning_rate * boost;
}

json SurrogateModel::to_json() const {
    json trees = json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return {{"format", "corpus-mixer-gbt"},
            {"taxonomy", tax_->spec()},
            {"feature_order", tax_->names()},
            {"target", target_},
            {"n_observations", n_observations_},
            {"hyperparameters", params_.to_json()},
            {"base_score", base_score_},
            {"trees", std::move(trees)}};
}

SurrogateModel SurrogateModel::from_json(const json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "corpus-mixer-gbt") {
            throw Error(ErrorCode::invalid_spec, "not a corpus-mixer-gbt model");
        }
        auto tax = parse_taxonomy_spec(doc.at("taxonomy").get<std::string>());
        if (doc.at("feature_order").get<std::vector<std::string>>() != tax->names()) {
            throw Error(ErrorCode::taxonomy_mismatch, "model feature order differs from the taxonomy");
        }
        std::vector<RegressionTree> trees;
        for (const auto& t : doc.at("trees")) {
            trees.push_back(RegressionTree::from_json(t));
            for (const auto& n : trees.back().nodes()) {
                if (n.feature >= static_cast<int>(tax->arity())) throw Error(ErrorCode::invalid_spec, "feature out of range");
            }
        }
        return SurrogateModel(std::move(tax), doc.at("target").get<std::string>(),
                              GbtParams::from_json(doc.at("hyperparameters")), doc.at("base_score").get<double>(),
                              std::move(trees), doc.at("n_observations").get<std::size_t>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_spec, std::string("malformed model JSON: ") + e.what());
    }
}

namespace {

// Exact greedy tree growth on presorted feature orders.
class TreeGrower {
public:
    TreeGrower(const std::vector<double>& features, std::size_t dims, std::span<const double> residual,
               const GbtParams& params, const std::vector<std::vector<std::uint32_t>>& presorted)
        : x_(features), dims_(dims), residual_(residual), params_(params), presorted_(presorted) {}

    RegressionTree grow() {
        nodes_.clear();
        build(presorted_, 0);
        return RegressionTree(std::move(nodes_));
    }

private:
    double feature(std::uint32_t sample, std::size_t f) const { return x_[sample * dims_ + f]; }

    int build(const std::vector<std::vector<std::uint32_t>>& order, std::size_t depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        const auto& members = order.front();
        const std::size_t n = members.size();
        double sum = 0.0, sumsq = 0.0;
        for (auto s : members) {
            sum += residual_[s];
            sumsq += residual_[s] * residual_[s];
        }
        nodes_[id].value = sum / static_cast<double>(n);
        const std::size_t min_leaf = params_.min_samples_leaf;
        if (depth >= params_.max_depth || n < 2 * min_leaf || !(sumsq > 0.0)) return id;

        const double parent_score = sum * sum / static_cast<double>(n);
        double best_gain = 1e-12 * sumsq;
        int best_feature = -1;
        double best_threshold = 0.0;
        for (std::size_t f = 0; f < dims_; ++f) {
            const auto& sorted = order[f];
            double left_sum = 0.0;
            for (std::size_t k = 1; k < n; ++k) {
                left_sum += residual_[sorted[k - 1]];
                if (k < min_leaf || n - k < min_leaf) continue;
                const double lo = feature(sorted[k - 1], f);
                const double hi = feature(sorted[k], f);
                if (!(lo < hi)) continue;
                const double right_sum = sum - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(k) +
                                    right_sum * right_sum / static_cast<double>(n - k) - parent_score;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = lo + (hi - lo) / 2.0;
                    if (!(best_threshold < hi)) best_threshold = lo;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::vector<std::uint32_t>> left(dims_), right(dims_);
        for (std::size_t f = 0; f < dims_; ++f) {
            left[f].reserve(n);
            right[f].reserve(n);
            for (auto s : order[f]) {
                (feature(s, best_feature) <= best_threshold ? left[f] : right[f]).push_back(s);
            }
        }
        nodes_[id].feature = best_feature;
        nodes_[id].threshold = best_threshold;
        const int l = build(left, depth + 1);
        nodes_[id].left = l;
        const int r = build(right, depth + 1);
        nodes_[id].right = r;
        return id;
    }

    const std::vector<double>& x_;
    std::size_t dims_;
    std::span<const double> residual_;
    const GbtParams& params_;
    const std::vector<std::vector<std::uint32_t>>& presorted_;
    std::vector<RegressionTree::Node> nodes_;
};

bool mixture_bytes_less(std::span<const double> a, std::span<const double> b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](double x, double y) {
        std::uint64_t bx, by;
        std::memcpy(&bx, &x, sizeof bx);
        std::memcpy(&by, &y, sizeof by);
        return bx < by;
    });
}

}  // namespace

SurrogateModel fit(const std::vector<RunObservation>& observations, const std::string& target,
                   const GbtParams& params) {
    params.validate();
    std::vector<const RunObservation*> usable;
    for (const auto& obs : observations) {
        if (obs.losses.contains(target)) usable.push_back(&obs);
    }
    if (usable.empty()) throw Error(ErrorCode::target_missing, "no observation reports target '" + target + "'");
    if (usable.size() < 2) throw Error(ErrorCode::insufficient_data, "need at least 2 observations for '" + target + "'");
    const auto tax = usable.front()->mixture.taxonomy();
    for (const auto* obs : usable) require_same_taxonomy(*tax, *obs->mixture.taxonomy());

    std::stable_sort(usable.begin(), usable.end(), [&](const RunObservation* a, const RunObservation* b) {
        if (mixture_bytes_less(a->mixture.weights(), b->mixture.weights())) return true;
        if (mixture_bytes_less(b->mixture.weights(), a->mixture.weights())) return false;
        return a->losses.at(target) < b->losses.at(target);
    });

    const std::size_t n = usable.size();
    const std::size_t dims = tax->arity();
    std::vector<double> x(n * dims);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(usable[i]->mixture.weights().begin(), usable[i]->mixture.weights().end(), x.begin() + i * dims);
        y[i] = usable[i]->losses.at(target);
    }

    std::vector<std::vector<std::uint32_t>> presorted(dims, std::vector<std::uint32_t>(n));
    for (std::size_t f = 0; f < dims; ++f) {
        std::iota(presorted[f].begin(), presorted[f].end(), 0u);
        std::stable_sort(presorted[f].begin(), presorted[f].end(),
                         [&](std::uint32_t a, std::uint32_t b) { return x[a * dims + f] < x[b * dims + f]; });
    }

    const double base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<double> prediction(n, base);
    std::vector<double> residual(n);
    std::vector<RegressionTree> trees;
    trees.reserve(params.n_trees);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - prediction[i];
        TreeGrower grower(x, dims, residual, params, presorted);
        trees.push_back(grower.grow());
        for (std::size_t i = 0; i < n; ++i) {
            prediction[i] += params.learning_rate *
                             trees.back().predict(std::span<const double>(x.data() + i * dims, dims));
        }
    }
    return SurrogateModel(tax, target, params, base, std::move(trees), n);
}

MultiTargetPredictor::MultiTargetPredictor(std::vector<std::shared_ptr<const LossPredictor>> members)
    : members_(std::move(members)) {
    if (members_.empty()) throw Error(ErrorCode::insufficient_data, "multi-target predictor needs a member");
    for (const auto& m : members_) require_same_taxonomy(*members_.front()->taxonomy(), *m->taxonomy());
}

double MultiTargetPredictor::predict(std::span<const double> weights) const {
    double total = 0.0;
    for (const auto& m : members_) total += m->predict(weights);
    return total / static_cast<double>(members_.size());
}

MultiTargetPredictor fit_multi(const std::vector<RunObservation>& observations, const std::vector<std::string>& targets,
                               const GbtParams& params) {
    if (targets.empty()) throw Error(ErrorCode::target_missing, "no targets given");
    std::vector<std::shared_ptr<const LossPredictor>> members;
    for (const auto& t : targets) members.push_back(std::make_shared<SurrogateModel>(fit(observations, t, params)));
    return MultiTargetPredictor(std::move(members));
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) throw Error(ErrorCode::length_mismatch, "sequences differ in length");
    if (predicted.size() < 2) throw Error(ErrorCode::length_mismatch, "need at least two pairs");
    const auto rp = average_ranks(predicted);
    const auto ra = average_ranks(actual);
    const double n = static_cast<double>(rp.size());
    const double mean = (n + 1.0) / 2.0;
    double cov = 0.0, vp = 0.0, va = 0.0;
    for (std::size_t i = 0; i < rp.size(); ++i) {
        cov += (rp[i] - mean) * (ra[i] - mean);
        vp += (rp[i] - mean) * (rp[i] - mean);
        va += (ra[i] - mean) * (ra[i] - mean);
    }
    if (vp == 0.0 || va == 0.0) return 0.0;
    return std::clamp(cov / std::sqrt(vp * va), -1.0, 1.0);
}

}  // namespace corpus_mixer
