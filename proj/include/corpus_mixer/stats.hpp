#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "corpus_mixer/corpus.hpp"
#include "corpus_mixer/json_io.hpp"
#include "corpus_mixer/mixture.hpp"

namespace corpus_mixer {

// Empirical joint distribution over two category sets, row-major.
class JointDistribution {
public:
    // Entries must be non-negative and sum to 1 within 1e-12.
    JointDistribution(std::size_t rows, std::size_t cols, std::vector<double> probabilities);

    // Normalizes raw masses. Marginals come from the exact row/column mass
    // totals, so they equal directly computed category proportions.
    static JointDistribution from_masses(std::size_t rows, std::size_t cols, std::span<const double> masses);
    static JointDistribution from_counts(const CountTable& counts, Weighting weighting);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double at(std::size_t r, std::size_t c) const { return probs_[r * cols_ + c]; }
    std::span<const double> probabilities() const noexcept { return probs_; }
    std::span<const double> row_marginal() const noexcept { return row_marginal_; }
    std::span<const double> col_marginal() const noexcept { return col_marginal_; }

private:
    JointDistribution() = default;

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> probs_;
    std::vector<double> row_marginal_;
    std::vector<double> col_marginal_;
};

// Token- (default) or document-weighted category proportions.
// Throws EmptyCorpus.
Mixture domain_proportions(const CorpusIndex& index, TaxonomyPtr tax, Weighting weighting = Weighting::tokens);

// Throws EmptyCorpus / MissingAnnotation.
JointDistribution joint_distribution(const CorpusIndex& index, const Taxonomy& a, const Taxonomy& b,
                                     Weighting weighting = Weighting::tokens);

// Shannon entropy in nats.
double entropy(std::span<const double> p);
double mutual_information(const JointDistribution& joint);

// log(p(a,b) / (p(a) p(b))) / log(1 / p(a,b)), row-major. Cells with
// p(a,b) = 0 are -1; a cell holding all the mass is 1.
std::vector<double> npmi(const JointDistribution& joint);

// 2 I(A;B) / (H(A) + H(B)), in [0, 1]. Throws DegenerateMarginals when both
// entropies vanish.
double nmi(const JointDistribution& joint);

// Treemap-ready composition data: per-taxonomy category counts and
// proportions, the topic x format NPMI matrix and NMI.
json composition_report(const CorpusIndex& index, Weighting weighting = Weighting::tokens);

}  // namespace corpus_mixer
