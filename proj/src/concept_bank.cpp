#include "cate/concept_bank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace cate {

using nlohmann::json;

PromptEmbeddingFile parse_prompt_embedding_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid concept JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("dim") || !doc.contains("concepts"))
        throw ValidationError("concept file must be an object with 'dim' and 'concepts'");

    PromptEmbeddingFile file;
    file.dim = doc.at("dim").get<int>();
    if (file.dim <= 0) throw ValidationError("concept file field 'dim' must be positive");

    for (const auto& [name, arr] : doc.at("concepts").items()) {
        if (!arr.is_array() || arr.empty())
            throw ValidationError("concept '" + name + "' needs at least one template embedding");
        std::vector<Eigen::VectorXd> vecs;
        for (const auto& row : arr) {
            if (!row.is_array() || static_cast<int>(row.size()) != file.dim)
                throw ValidationError("concept '" + name + "' has an embedding of length " +
                                      std::to_string(row.size()) + ", expected " +
                                      std::to_string(file.dim));
            Eigen::VectorXd v(file.dim);
            for (int i = 0; i < file.dim; ++i) {
                v[i] = row[i].get<double>();
                if (!std::isfinite(v[i]))
                    throw ValidationError("concept '" + name + "' has a non-finite entry");
            }
            vecs.push_back(std::move(v));
        }
        file.concepts.emplace(name, std::move(vecs));
    }

    if (doc.contains("classes")) {
        for (const auto& [name, label] : doc.at("classes").items()) {
            if (!label.is_number_integer() || label.get<int>() < 0)
                throw ValidationError("class label for '" + name +
                                      "' must be a non-negative integer");
            file.class_map.emplace(name, label.get<int>());
        }
    }
    return file;
}

PromptEmbeddingFile load_prompt_embedding_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("cannot open concept file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_prompt_embedding_json(ss.str());
}

Eigen::VectorXd build_anchor(const std::vector<Eigen::VectorXd>& template_embeddings) {
    if (template_embeddings.empty())
        throw ValidationError("build_anchor requires at least one template embedding");
    const auto dim = template_embeddings.front().size();
    for (const auto& v : template_embeddings) {
        if (v.size() != dim)
            throw ValidationError("template embeddings have mismatched dimensions");
        if (!v.allFinite())
            throw ValidationError("template embedding has a non-finite entry");
    }

    const auto n = template_embeddings.size();
    Eigen::VectorXd mean(dim);
    std::vector<double> column(n);
    for (Eigen::Index d = 0; d < dim; ++d) {
        for (std::size_t t = 0; t < n; ++t) column[t] = template_embeddings[t][d];
        mean[d] = exact_sum(column.data(), n) / double(n);
    }

    std::vector<double> squares(dim);
    for (Eigen::Index d = 0; d < dim; ++d) squares[d] = mean[d] * mean[d];
    double norm = std::sqrt(exact_sum(squares.data(), squares.size()));
    if (norm < 1e-12)
        throw DegenerateInputError("prompt templates cancel out: anchor mean has zero norm");
    return mean / norm;
}

ConceptBank load_concept_bank(const PromptEmbeddingFile& file,
                              const std::map<std::string, int>& class_map) {
    ConceptBank bank;
    bank.dim = file.dim;

    int max_label = -1;
    for (const auto& [name, label] : class_map) {
        if (!file.concepts.count(name))
            throw ValidationError("class map references unknown concept '" + name + "'");
        max_label = std::max(max_label, label);
    }
    if (max_label < 0) throw ValidationError("class map is empty: no class-specific concepts");
    bank.num_classes = max_label + 1;

    std::vector<int> names_per_class(bank.num_classes, 0);
    for (const auto& [name, label] : class_map) names_per_class[label]++;
    for (int cls = 0; cls < bank.num_classes; ++cls)
        if (names_per_class[cls] == 0)
            throw ValidationError("class " + std::to_string(cls) + " has zero concept names");

    // std::map iteration gives names in lexicographic order, which fixes the
    // within-class and agnostic anchor order.
    for (const auto& [name, vecs] : file.concepts) {
        ConceptBank::Anchor a;
        a.name = name;
        auto it = class_map.find(name);
        a.label = it == class_map.end() ? -1 : it->second;
        a.vec = build_anchor(vecs);
        if (a.label >= 0)
            bank.class_specific.push_back(std::move(a));
        else
            bank.class_agnostic.push_back(std::move(a));
    }

    std::stable_sort(bank.class_specific.begin(), bank.class_specific.end(),
                     [](const auto& a, const auto& b) {
                         return a.label != b.label ? a.label < b.label : a.name < b.name;
                     });

    bank.class_ranges.assign(bank.num_classes, {0, 0});
    for (int cls = 0, i = 0; cls < bank.num_classes; ++cls) {
        int begin = i;
        while (i < bank.m() && bank.class_specific[i].label == cls) ++i;
        bank.class_ranges[cls] = {begin, i};
    }
    return bank;
}

ConceptBank load_concept_bank(const PromptEmbeddingFile& file) {
    return load_concept_bank(file, file.class_map);
}

std::string concept_bank_to_json(const ConceptBank& bank) {
    json doc;
    doc["dim"] = bank.dim;
    doc["num_classes"] = bank.num_classes;
    json cs = json::array();
    for (const auto& a : bank.class_specific) {
        json row;
        row["name"] = a.name;
        row["label"] = a.label;
        row["vec"] = std::vector<double>(a.vec.data(), a.vec.data() + a.vec.size());
        cs.push_back(std::move(row));
    }
    doc["class_specific"] = std::move(cs);
    json ca = json::array();
    for (const auto& a : bank.class_agnostic) {
        json row;
        row["name"] = a.name;
        row["vec"] = std::vector<double>(a.vec.data(), a.vec.data() + a.vec.size());
        ca.push_back(std::move(row));
    }
    doc["class_agnostic"] = std::move(ca);
    return doc.dump(2);
}

std::vector<int> select_representative(const Eigen::MatrixXf& bag_features,
                                       const ConceptBank& bank, int label, int k,
                                       SelectScore score) {
    const int n = static_cast<int>(bag_features.rows());
    if (n == 0) throw ValidationError("select_representative: empty bag");
    if (k <= 0) throw ValidationError("select_representative: k must be positive");
    if (label < 0 || label >= bank.num_classes)
        throw LookupError("select_representative: unknown label " + std::to_string(label));
    auto [begin, end] = bank.class_ranges[label];
    if (begin == end)
        throw LookupError("select_representative: label " + std::to_string(label) +
                          " has no anchors");
    if (bag_features.cols() != bank.dim)
        throw ValidationError("select_representative: feature dim " +
                              std::to_string(bag_features.cols()) + " != bank dim " +
                              std::to_string(bank.dim));

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (k >= n) return idx;

    std::vector<double> scores(n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x = bag_features.row(i).cast<double>();
        double xn = x.norm();
        if (xn == 0.0) {
            scores[i] = -2.0;  // below any cosine; zero patches rank last
            continue;
        }
        double best = -2.0, sum = 0.0;
        for (int j = begin; j < end; ++j) {
            double s = x.dot(bank.class_specific[j].vec) /
                       (xn * bank.class_specific[j].vec.norm());
            best = std::max(best, s);
            sum += s;
        }
        scores[i] = score == SelectScore::kMax ? best : sum / double(end - begin);
    }

    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    });
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace cate
