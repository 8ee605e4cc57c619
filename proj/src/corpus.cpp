#include "corpus_mixer/corpus.hpp"

#include "corpus_mixer/error.hpp"
#include "corpus_mixer/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace corpus_mixer {

Weighting parse_weighting(std::string_view name) {
    if (name == "tokens") return Weighting::tokens;
    if (name == "documents") return Weighting::documents;
    throw Error(ErrorCode::invalid_config, "weighting must be tokens|documents");
}

std::string_view to_string(Weighting weighting) {
    return weighting == Weighting::tokens ? "tokens" : "documents";
}

CorpusIndex::CorpusIndex(TaxonomyPtr topics, TaxonomyPtr formats, bool stats_only)
    : topics_(std::move(topics)),
      formats_(std::move(formats)),
      stats_only_(stats_only),
      topic_counts_(topics_->arity()),
      format_counts_(formats_->arity()),
      topic_format_{topics_->arity(), formats_->arity(),
                    std::vector<CategoryCount>(topics_->arity() * formats_->arity())} {}

bool CorpusIndex::fully_clustered() const noexcept {
    return total_.documents > 0 && unclustered_documents_ == 0;
}

void CorpusIndex::grow_clusters(std::size_t arity) {
    if (arity <= cluster_counts_.size()) return;
    cluster_counts_.resize(arity);
    cluster_topic_.resize(arity, std::vector<CategoryCount>(topics_->arity()));
    cluster_format_.resize(arity, std::vector<CategoryCount>(formats_->arity()));
}

void CorpusIndex::add_counts(const DocumentRecord& doc) {
    const CategoryCount one{1, doc.tokens};
    total_ += one;
    topic_counts_[doc.topic] += one;
    format_counts_[doc.format] += one;
    topic_format_.at(doc.topic, doc.format) += one;
    if (doc.cluster) {
        grow_clusters(*doc.cluster + 1);
        cluster_counts_[*doc.cluster] += one;
        cluster_topic_[*doc.cluster][doc.topic] += one;
        cluster_format_[*doc.cluster][doc.format] += one;
    } else {
        ++unclustered_documents_;
    }
}

void CorpusIndex::check_taxonomy(const Taxonomy& tax) const {
    switch (tax.kind()) {
        case TaxonomyKind::topic: require_same(tax, *topics_); return;
        case TaxonomyKind::format: require_same(tax, *formats_); return;
        case TaxonomyKind::product:
            require_same(*tax.rows(), *topics_);
            require_same(*tax.cols(), *formats_);
            return;
        case TaxonomyKind::global: return;
        case TaxonomyKind::cluster:
            if (!fully_clustered()) {
                throw Error(ErrorCode::missing_annotation, "cluster ids missing on " +
                                                               std::to_string(unclustered_documents_) +
                                                               " documents");
            }
            if (tax.arity() < cluster_counts_.size()) {
                throw Error(ErrorCode::taxonomy_mismatch,
                            "corpus uses " + std::to_string(cluster_counts_.size()) + " clusters, taxonomy has " +
                                std::to_string(tax.arity()));
            }
            return;
    }
}

void CorpusIndex::require_same(const Taxonomy& a, const Taxonomy& b) {
    if (!(a == b)) throw Error(ErrorCode::taxonomy_mismatch, "taxonomy " + a.spec() + " vs " + b.spec());
}

std::vector<CategoryCount> CorpusIndex::category_counts(const Taxonomy& tax) const {
    check_taxonomy(tax);
    switch (tax.kind()) {
        case TaxonomyKind::topic: return topic_counts_;
        case TaxonomyKind::format: return format_counts_;
        case TaxonomyKind::product: return topic_format_.cells;
        case TaxonomyKind::global: return {total_};
        case TaxonomyKind::cluster: {
            auto out = cluster_counts_;
            out.resize(tax.arity());
            return out;
        }
    }
    return {};
}

namespace {

CountTable transpose(const CountTable& t) {
    CountTable out{t.cols, t.rows, std::vector<CategoryCount>(t.cells.size())};
    for (std::size_t r = 0; r < t.rows; ++r) {
        for (std::size_t c = 0; c < t.cols; ++c) out.at(c, r) = t.at(r, c);
    }
    return out;
}

CountTable from_nested(const std::vector<std::vector<CategoryCount>>& nested, std::size_t rows,
                       std::size_t cols) {
    CountTable out{rows, cols, std::vector<CategoryCount>(rows * cols)};
    for (std::size_t r = 0; r < nested.size(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = nested[r][c];
    }
    return out;
}

}  // namespace

CountTable CorpusIndex::joint_counts(const Taxonomy& a, const Taxonomy& b) const {
    check_taxonomy(a);
    check_taxonomy(b);
    const auto ka = a.kind();
    const auto kb = b.kind();
    using K = TaxonomyKind;
    if (ka == K::topic && kb == K::format) return topic_format_;
    if (ka == K::format && kb == K::topic) return transpose(topic_format_);
    if (ka == K::cluster && kb == K::topic) return from_nested(cluster_topic_, a.arity(), b.arity());
    if (ka == K::cluster && kb == K::format) return from_nested(cluster_format_, a.arity(), b.arity());
    if (ka == K::topic && kb == K::cluster) return transpose(from_nested(cluster_topic_, b.arity(), a.arity()));
    if (ka == K::format && kb == K::cluster) return transpose(from_nested(cluster_format_, b.arity(), a.arity()));
    if (ka != K::product && ka == kb && a == b) {
        const auto counts = category_counts(a);
        CountTable out{a.arity(), a.arity(), std::vector<CategoryCount>(a.arity() * a.arity())};
        for (std::size_t i = 0; i < a.arity(); ++i) out.at(i, i) = counts[i];
        return out;
    }
    require_documents("joint counts over " + a.spec() + " x " + b.spec());
    CountTable out{a.arity(), b.arity(), std::vector<CategoryCount>(a.arity() * b.arity())};
    for (const auto& doc : docs_) out.at(category_of(doc, a), category_of(doc, b)) += CategoryCount{1, doc.tokens};
    return out;
}

std::size_t CorpusIndex::category_of(const DocumentRecord& doc, const Taxonomy& tax) const {
    switch (tax.kind()) {
        case TaxonomyKind::topic: return doc.topic;
        case TaxonomyKind::format: return doc.format;
        case TaxonomyKind::product: return product_cell(doc.topic, doc.format, tax.cols()->arity());
        case TaxonomyKind::global: return 0;
        case TaxonomyKind::cluster:
            if (!doc.cluster) throw Error(ErrorCode::missing_annotation, "document " + doc.id + " has no cluster");
            if (*doc.cluster >= tax.arity()) {
                throw Error(ErrorCode::invalid_category, "cluster id out of range for " + tax.spec());
            }
            return *doc.cluster;
    }
    return 0;
}

void CorpusIndex::require_documents(std::string_view what) const {
    if (stats_only_) {
        throw Error(ErrorCode::missing_annotation, std::string(what) + " needs document lists (not stats-only)");
    }
}

const DocumentRecord* CorpusIndex::find(std::string_view id) const {
    auto it = std::lower_bound(docs_.begin(), docs_.end(), id,
                               [](const DocumentRecord& d, std::string_view key) { return d.id < key; });
    if (it == docs_.end() || it->id != id) return nullptr;
    return &*it;
}

bool CorpusIndex::operator==(const CorpusIndex& o) const {
    return *topics_ == *o.topics_ && *formats_ == *o.formats_ && stats_only_ == o.stats_only_ &&
           total_ == o.total_ && topic_counts_ == o.topic_counts_ && format_counts_ == o.format_counts_ &&
           cluster_counts_ == o.cluster_counts_ && unclustered_documents_ == o.unclustered_documents_ &&
           topic_format_ == o.topic_format_ && cluster_topic_ == o.cluster_topic_ &&
           cluster_format_ == o.cluster_format_ && docs_ == o.docs_ && ids_ == o.ids_;
}

namespace {

void add_nested(std::vector<std::vector<CategoryCount>>& into, const std::vector<std::vector<CategoryCount>>& from) {
    for (std::size_t r = 0; r < from.size(); ++r) {
        for (std::size_t c = 0; c < from[r].size(); ++c) into[r][c] += from[r][c];
    }
}

template <typename T, typename Key>
std::vector<T> merge_sorted_unique(const std::vector<T>& a, const std::vector<T>& b, Key key) {
    std::vector<T> out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && key(a[i]) < key(b[j]))) {
            out.push_back(a[i++]);
        } else if (i == a.size() || key(b[j]) < key(a[i])) {
            out.push_back(b[j++]);
        } else {
            throw Error(ErrorCode::duplicate_doc_id, "document id '" + std::string(key(a[i])) + "' appears twice");
        }
    }
    return out;
}

}  // namespace

CorpusIndex CorpusIndex::merge(const CorpusIndex& a, const CorpusIndex& b) {
    require_same(*a.topics_, *b.topics_);
    require_same(*a.formats_, *b.formats_);
    if (a.stats_only_ != b.stats_only_) {
        throw Error(ErrorCode::invalid_config, "cannot merge stats-only and full indexes");
    }
    CorpusIndex out(a.topics_, a.formats_, a.stats_only_);
    out.total_ = a.total_;
    out.total_ += b.total_;
    for (std::size_t i = 0; i < out.topic_counts_.size(); ++i) {
        out.topic_counts_[i] = a.topic_counts_[i];
        out.topic_counts_[i] += b.topic_counts_[i];
    }
    for (std::size_t i = 0; i < out.format_counts_.size(); ++i) {
        out.format_counts_[i] = a.format_counts_[i];
        out.format_counts_[i] += b.format_counts_[i];
    }
    for (std::size_t i = 0; i < out.topic_format_.cells.size(); ++i) {
        out.topic_format_.cells[i] = a.topic_format_.cells[i];
        out.topic_format_.cells[i] += b.topic_format_.cells[i];
    }
    out.unclustered_documents_ = a.unclustered_documents_ + b.unclustered_documents_;
    out.grow_clusters(std::max(a.cluster_counts_.size(), b.cluster_counts_.size()));
    for (const auto* src : {&a, &b}) {
        for (std::size_t i = 0; i < src->cluster_counts_.size(); ++i) out.cluster_counts_[i] += src->cluster_counts_[i];
        add_nested(out.cluster_topic_, src->cluster_topic_);
        add_nested(out.cluster_format_, src->cluster_format_);
    }
    out.docs_ = merge_sorted_unique(a.docs_, b.docs_, [](const DocumentRecord& d) -> const std::string& { return d.id; });
    out.ids_ = merge_sorted_unique(a.ids_, b.ids_, [](const std::string& s) -> const std::string& { return s; });
    return out;
}

CorpusBuilder::CorpusBuilder(TaxonomyPtr topics, TaxonomyPtr formats, bool stats_only)
    : index_(std::move(topics), std::move(formats), stats_only) {}

void CorpusBuilder::add(DocumentRecord doc) {
    if (doc.tokens == 0) throw Error(ErrorCode::malformed_record, "document " + doc.id + " has zero tokens");
    if (doc.topic >= index_.topics_->arity() || doc.format >= index_.formats_->arity()) {
        throw Error(ErrorCode::invalid_category, "document " + doc.id + " has an out-of-range category");
    }
    for (const auto& [name, value] : doc.scores) {
        if (!std::isfinite(value)) {
            throw Error(ErrorCode::malformed_record, "document " + doc.id + " score '" + name + "' is not finite");
        }
    }
    if (!seen_.insert(doc.id).second) {
        throw Error(ErrorCode::duplicate_doc_id, "document id '" + doc.id + "' appears twice");
    }
    index_.add_counts(doc);
    if (index_.stats_only_) {
        index_.ids_.push_back(std::move(doc.id));
    } else {
        index_.docs_.push_back(std::move(doc));
    }
}

CorpusIndex CorpusBuilder::build() && {
    std::sort(index_.docs_.begin(), index_.docs_.end(),
              [](const DocumentRecord& x, const DocumentRecord& y) { return x.id < y.id; });
    std::sort(index_.ids_.begin(), index_.ids_.end());
    seen_.clear();
    return std::move(index_);
}

CorpusIndex ingest(const std::vector<DocumentRecord>& records, TaxonomyPtr topics, TaxonomyPtr formats,
                   bool stats_only) {
    CorpusBuilder builder(std::move(topics), std::move(formats), stats_only);
    for (const auto& r : records) builder.add(r);
    return std::move(builder).build();
}

namespace {

std::size_t parse_label(const json& value, const Taxonomy& tax, std::string_view field) {
    if (value.is_number_integer()) {
        const auto id = value.get<std::int64_t>();
        if (id < 0 || static_cast<std::size_t>(id) >= tax.arity()) {
            throw Error(ErrorCode::invalid_category, std::string(field) + " id " + std::to_string(id) + " out of range");
        }
        return static_cast<std::size_t>(id);
    }
    if (value.is_string()) {
        const auto id = tax.find(value.get<std::string>());
        if (!id) throw Error(ErrorCode::invalid_category, "unknown " + std::string(field) + " '" + value.get<std::string>() + "'");
        return *id;
    }
    throw Error(ErrorCode::malformed_record, std::string(field) + " must be a string or integer");
}

}  // namespace

DocumentRecord parse_record(std::string_view line, const Taxonomy& topics, const Taxonomy& formats) {
    json doc;
    try {
        doc = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_record, e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::malformed_record, "record is not an object");
    DocumentRecord rec;
    try {
        const auto& id = doc.at("id");
        if (!id.is_string()) throw Error(ErrorCode::malformed_record, "id must be a string");
        rec.id = id.get<std::string>();
        const auto& tokens = doc.at("tokens");
        if (!tokens.is_number_integer() || tokens.get<std::int64_t>() < 1) {
            throw Error(ErrorCode::malformed_record, "tokens must be a positive integer");
        }
        rec.tokens = tokens.get<std::uint64_t>();
        rec.topic = parse_label(doc.at("topic"), topics, "topic");
        rec.format = parse_label(doc.at("format"), formats, "format");
        if (auto it = doc.find("cluster"); it != doc.end() && !it->is_null()) {
            if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
                throw Error(ErrorCode::malformed_record, "cluster must be a non-negative integer");
            }
            rec.cluster = it->get<std::size_t>();
        }
        if (auto it = doc.find("scores"); it != doc.end() && !it->is_null()) {
            if (!it->is_object()) throw Error(ErrorCode::malformed_record, "scores must be an object");
            for (const auto& [name, value] : it->items()) {
                if (!value.is_number()) throw Error(ErrorCode::malformed_record, "score '" + name + "' is not a number");
                const double v = value.get<double>();
                if (!std::isfinite(v)) throw Error(ErrorCode::malformed_record, "score '" + name + "' is not finite");
                rec.scores[name] = v;
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_record, e.what());
    }
    return rec;
}

json record_to_json(const DocumentRecord& doc, const Taxonomy& topics, const Taxonomy& formats) {
    json out{{"id", doc.id}, {"tokens", doc.tokens}, {"topic", topics.name(doc.topic)},
             {"format", formats.name(doc.format)}};
    if (doc.cluster) out["cluster"] = *doc.cluster;
    if (!doc.scores.empty()) {
        json scores = json::object();
        for (const auto& [name, value] : doc.scores) scores[name] = value;
        out["scores"] = std::move(scores);
    }
    return out;
}

IngestResult read_corpus(std::istream& in, std::string_view source, TaxonomyPtr topics, TaxonomyPtr formats,
                         const IngestOptions& options) {
    CorpusBuilder builder(topics, formats, options.stats_only);
    std::size_t malformed = 0;
    std::size_t line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        DocumentRecord rec;
        try {
            rec = parse_record(line, *topics, *formats);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::malformed_record && options.skip_malformed) {
                ++malformed;
                continue;
            }
            throw Error(e.code(), std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
        }
        builder.add(std::move(rec));
    }
    return {std::move(builder).build(), malformed};
}

IngestResult read_corpus_files(const std::vector<std::filesystem::path>& paths, TaxonomyPtr topics,
                               TaxonomyPtr formats, const IngestOptions& options) {
    std::vector<std::optional<IngestResult>> shards(paths.size());
    parallel_for(paths.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::ifstream in(paths[i]);
            if (!in) throw Error(ErrorCode::io_error, "cannot open " + paths[i].string());
            shards[i] = read_corpus(in, paths[i].string(), topics, formats, options);
        }
    });
    IngestResult result{CorpusIndex(topics, formats, options.stats_only), 0};
    for (auto& shard : shards) {
        result.index = CorpusIndex::merge(result.index, shard->index);
        result.malformed_lines += shard->malformed_lines;
    }
    return result;
}

}  // namespace corpus_mixer
