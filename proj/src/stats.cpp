#include "corpus_mixer/stats.hpp"

#include "corpus_mixer/error.hpp"

#include <algorithm>
#include <cmath>

namespace corpus_mixer {

JointDistribution::JointDistribution(std::size_t rows, std::size_t cols, std::vector<double> probabilities)
    : rows_(rows), cols_(cols), probs_(std::move(probabilities)) {
    if (rows_ == 0 || cols_ == 0 || probs_.size() != rows_ * cols_) {
        throw Error(ErrorCode::invalid_spec, "joint table shape mismatch");
    }
    double total = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0) throw Error(ErrorCode::invalid_spec, "joint entries must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::invalid_spec, "joint entries do not sum to 1");
    row_marginal_.assign(rows_, 0.0);
    col_marginal_.assign(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            row_marginal_[r] += at(r, c);
            col_marginal_[c] += at(r, c);
        }
    }
}

JointDistribution JointDistribution::from_masses(std::size_t rows, std::size_t cols, std::span<const double> masses) {
    if (rows == 0 || cols == 0 || masses.size() != rows * cols) {
        throw Error(ErrorCode::invalid_spec, "joint table shape mismatch");
    }
    JointDistribution out;
    out.rows_ = rows;
    out.cols_ = cols;
    std::vector<double> row_mass(rows, 0.0), col_mass(cols, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double m = masses[r * cols + c];
            if (!std::isfinite(m) || m < 0.0) throw Error(ErrorCode::invalid_spec, "masses must be non-negative");
            row_mass[r] += m;
            col_mass[c] += m;
            total += m;
        }
    }
    if (!(total > 0.0)) throw Error(ErrorCode::empty_corpus, "joint table has no mass");
    out.probs_.resize(masses.size());
    for (std::size_t i = 0; i < masses.size(); ++i) out.probs_[i] = masses[i] / total;
    out.row_marginal_.resize(rows);
    out.col_marginal_.resize(cols);
    for (std::size_t r = 0; r < rows; ++r) out.row_marginal_[r] = row_mass[r] / total;
    for (std::size_t c = 0; c < cols; ++c) out.col_marginal_[c] = col_mass[c] / total;
    return out;
}

JointDistribution JointDistribution::from_counts(const CountTable& counts, Weighting weighting) {
    std::vector<double> masses(counts.cells.size());
    for (std::size_t i = 0; i < masses.size(); ++i) masses[i] = weight_of(counts.cells[i], weighting);
    return from_masses(counts.rows, counts.cols, masses);
}

Mixture domain_proportions(const CorpusIndex& index, TaxonomyPtr tax, Weighting weighting) {
    if (index.empty()) throw Error(ErrorCode::empty_corpus, "no documents ingested");
    const auto counts = index.category_counts(*tax);
    std::vector<double> masses(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) masses[i] = weight_of(counts[i], weighting);
    return Mixture::from_masses(std::move(tax), masses);
}

JointDistribution joint_distribution(const CorpusIndex& index, const Taxonomy& a, const Taxonomy& b,
                                     Weighting weighting) {
    if (index.empty()) throw Error(ErrorCode::empty_corpus, "no documents ingested");
    return JointDistribution::from_counts(index.joint_counts(a, b), weighting);
}

double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

double mutual_information(const JointDistribution& joint) {
    const auto pr = joint.row_marginal();
    const auto pc = joint.col_marginal();
    double info = 0.0;
    for (std::size_t r = 0; r < joint.rows(); ++r) {
        for (std::size_t c = 0; c < joint.cols(); ++c) {
            const double p = joint.at(r, c);
            if (p > 0.0) info += p * std::log(p / (pr[r] * pc[c]));
        }
    }
    return std::max(0.0, info);
}

std::vector<double> npmi(const JointDistribution& joint) {
    const auto pr = joint.row_marginal();
    const auto pc = joint.col_marginal();
    std::vector<double> out(joint.rows() * joint.cols());
    for (std::size_t r = 0; r < joint.rows(); ++r) {
        for (std::size_t c = 0; c < joint.cols(); ++c) {
            const double p = joint.at(r, c);
            double v;
            if (p <= 0.0) {
                v = -1.0;
            } else if (p >= 1.0) {
                v = 1.0;
            } else {
                v = std::log(p / (pr[r] * pc[c])) / -std::log(p);
            }
            out[r * joint.cols() + c] = std::clamp(v, -1.0, 1.0);
        }
    }
    return out;
}

double nmi(const JointDistribution& joint) {
    const double h = entropy(joint.row_marginal()) + entropy(joint.col_marginal());
    if (!(h > 0.0)) throw Error(ErrorCode::degenerate_marginals, "both marginals have zero entropy");
    return std::clamp(2.0 * mutual_information(joint) / h, 0.0, 1.0);
}

namespace {

json taxonomy_section(const CorpusIndex& index, const TaxonomyPtr& tax, Weighting weighting) {
    const auto counts = index.category_counts(*tax);
    const auto mix = domain_proportions(index, tax, weighting);
    json rows = json::array();
    for (std::size_t i = 0; i < counts.size(); ++i) {
        rows.push_back({{"category", tax->name(i)},
                        {"doc_count", counts[i].documents},
                        {"token_count", counts[i].tokens},
                        {"proportion", mix[i]}});
    }
    return {{"taxonomy", tax->spec()}, {"categories", std::move(rows)}};
}

json npmi_section(const JointDistribution& joint, const Taxonomy& rows, const Taxonomy& cols) {
    const auto matrix = npmi(joint);
    json out = json::array();
    for (std::size_t r = 0; r < joint.rows(); ++r) {
        out.push_back(json(std::vector<double>(matrix.begin() + r * joint.cols(),
                                               matrix.begin() + (r + 1) * joint.cols())));
    }
    return {{"rows", rows.spec()}, {"cols", cols.spec()}, {"matrix", std::move(out)}};
}

}  // namespace

json composition_report(const CorpusIndex& index, Weighting weighting) {
    if (index.empty()) throw Error(ErrorCode::empty_corpus, "no documents ingested");
    json report;
    report["weighting"] = std::string(to_string(weighting));
    report["totals"] = {{"documents", index.document_count()}, {"tokens", index.token_count()}};
    json taxonomies = json::array();
    taxonomies.push_back(taxonomy_section(index, index.topics(), weighting));
    taxonomies.push_back(taxonomy_section(index, index.formats(), weighting));
    TaxonomyPtr clusters;
    if (index.fully_clustered()) {
        clusters = cluster_taxonomy(index.cluster_arity());
        taxonomies.push_back(taxonomy_section(index, clusters, weighting));
    }
    report["taxonomies"] = std::move(taxonomies);

    const auto tf = joint_distribution(index, *index.topics(), *index.formats(), weighting);
    report["npmi"] = npmi_section(tf, *index.topics(), *index.formats());
    // A corpus with a single topic and a single format has no defined NMI.
    const auto nmi_or_null = [](const JointDistribution& joint) -> json {
        try {
            return nmi(joint);
        } catch (const Error&) {
            return nullptr;
        }
    };
    json nmi_values = json::object();
    nmi_values["topic;format"] = nmi_or_null(tf);
    if (clusters) {
        for (const auto* other : {index.topics().get(), index.formats().get()}) {
            nmi_values["cluster;" + other->spec()] = nmi_or_null(joint_distribution(index, *clusters, *other, weighting));
        }
    }
    report["nmi"] = std::move(nmi_values);
    return report;
}

}  // namespace corpus_mixer
