#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "corpus_mixer/json_io.hpp"
#include "corpus_mixer/mixture.hpp"

namespace corpus_mixer {

// One small-model training run: the mixture it was trained on and its
// per-target losses (bits-per-byte).
struct RunObservation {
    Mixture mixture;
    std::map<std::string, double> losses;
};

std::vector<RunObservation> read_observations(const std::filesystem::path& path);
json observation_to_json(const RunObservation& obs);

// Anything that maps mixture weights (taxonomy order) to a loss.
class LossPredictor {
public:
    virtual ~LossPredictor() = default;
    virtual const TaxonomyPtr& taxonomy() const = 0;
    virtual double predict(std::span<const double> weights) const = 0;

    // Checks the taxonomy first (TaxonomyMismatch).
    double predict(const Mixture& mix) const;
};

struct GbtParams {
    std::size_t n_trees = 500;
    std::size_t max_depth = 4;
    double learning_rate = 0.05;
    std::size_t min_samples_leaf = 5;

    void validate() const;
    json to_json() const;
    static GbtParams from_json(const json& doc);
};

class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };

    explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    // x[feature] <= threshold goes left.
    double predict(std::span<const double> x) const {
        int i = 0;
        while (nodes_[i].feature >= 0) {
            const auto& n = nodes_[i];
            i = x[n.feature] <= n.threshold ? n.left : n.right;
        }
        return nodes_[i].value;
    }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    json to_json() const;
    static RegressionTree from_json(const json& doc);

private:
    std::vector<Node> nodes_;
};

// Gradient-boosted regression trees (squared error) over raw mixture weights.
class SurrogateModel final : public LossPredictor {
public:
    SurrogateModel(TaxonomyPtr tax, std::string target, GbtParams params, double base_score,
                   std::vector<RegressionTree> trees, std::size_t n_observations);

    const TaxonomyPtr& taxonomy() const override { return tax_; }
    using LossPredictor::predict;
    double predict(std::span<const double> weights) const override;

    const std::string& target() const noexcept { return target_; }
    const GbtParams& params() const noexcept { return params_; }
    std::size_t n_observations() const noexcept { return n_observations_; }
    const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

    json to_json() const;
    static SurrogateModel from_json(const json& doc);

private:
    TaxonomyPtr tax_;
    std::string target_;
    GbtParams params_;
    double base_score_;
    std::vector<RegressionTree> trees_;
    std::size_t n_observations_;
};

// Fits on the observations carrying `target`, after sorting them by mixture
// bytes so the result does not depend on input order.
// Throws TargetMissing, InsufficientData, TaxonomyMismatch.
SurrogateModel fit(const std::vector<RunObservation>& observations, const std::string& target,
                   const GbtParams& params = {});

// Unweighted mean of per-target predictors.
class MultiTargetPredictor final : public LossPredictor {
public:
    explicit MultiTargetPredictor(std::vector<std::shared_ptr<const LossPredictor>> members);

    const TaxonomyPtr& taxonomy() const override { return members_.front()->taxonomy(); }
    using LossPredictor::predict;
    double predict(std::span<const double> weights) const override;
    const std::vector<std::shared_ptr<const LossPredictor>>& members() const noexcept { return members_; }

private:
    std::vector<std::shared_ptr<const LossPredictor>> members_;
};

MultiTargetPredictor fit_multi(const std::vector<RunObservation>& observations,
                               const std::vector<std::string>& targets, const GbtParams& params = {});

// Average ranks for ties (1-based).
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank correlation with average-rank ties; 0 when either side is
// constant. Throws LengthMismatch.
double spearman(std::span<const double> predicted, std::span<const double> actual);

}  // namespace corpus_mixer
