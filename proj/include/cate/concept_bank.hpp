#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cate/errors.hpp"
#include "cate/numeric.hpp"

namespace cate {

// On-disk prompt-embedding document:
//   {"dim": C, "concepts": {name: [[...], ...]}, "classes": {name: label}}
// Each concept name carries one embedding per prompt template; names listed
// under "classes" are class-specific, the rest are class-agnostic.
struct PromptEmbeddingFile {
    int dim = 0;
    std::map<std::string, std::vector<Eigen::VectorXd>> concepts;
    std::map<std::string, int> class_map;
};

PromptEmbeddingFile load_prompt_embedding_file(const std::string& path);
PromptEmbeddingFile parse_prompt_embedding_json(const std::string& text);

// Elementwise mean of the template embeddings, L2-normalized.
// Uses exactly rounded sums, so the anchor is independent of template order.
Eigen::VectorXd build_anchor(const std::vector<Eigen::VectorXd>& template_embeddings);

// Unit-norm anchor vectors, partitioned into class-specific and
// class-agnostic sets. Anchor order is fixed: class-specific anchors sorted
// by (label, name), class-agnostic anchors sorted by name.
struct ConceptBank {
    struct Anchor {
        std::string name;
        int label = -1;  // -1 for class-agnostic
        Eigen::VectorXd vec;
    };

    int dim = 0;
    int num_classes = 0;
    std::vector<Anchor> class_specific;
    std::vector<Anchor> class_agnostic;
    // Half-open [begin, end) index range into class_specific per label.
    std::vector<std::pair<int, int>> class_ranges;

    int m() const { return static_cast<int>(class_specific.size()); }
    int n() const { return static_cast<int>(class_agnostic.size()); }
};

ConceptBank load_concept_bank(const PromptEmbeddingFile& file,
                              const std::map<std::string, int>& class_map);

// Convenience overload using the class map embedded in the file.
ConceptBank load_concept_bank(const PromptEmbeddingFile& file);

// Serialized form of a resolved bank (for `build-concepts` output).
std::string concept_bank_to_json(const ConceptBank& bank);

enum class SelectScore { kMax, kMean };

// Indices (ascending) of the k patches scoring highest against the label's
// class-specific anchors; a patch's score is the max (default) or mean
// cosine similarity over those anchors. Ties prefer the lower patch index.
// k >= N returns all indices.
std::vector<int> select_representative(const Eigen::MatrixXf& bag_features,
                                       const ConceptBank& bank, int label, int k,
                                       SelectScore score = SelectScore::kMax);

// Scalar-typed matrices derived from a bank, in bank anchor order, for the
// numeric paths: cs (m x C), ca (n x C), and per-class positive anchors
// (renormalized means of each class's anchors, K x C).
template <typename Scalar>
struct BankView {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Mat cs;
    Mat ca;
    Mat positives;
    std::vector<std::pair<int, int>> class_ranges;
    int num_classes = 0;

    int m() const { return static_cast<int>(cs.rows()); }
    int n() const { return static_cast<int>(ca.rows()); }
    int dim() const { return static_cast<int>(cs.cols()); }
};

template <typename Scalar>
BankView<Scalar> make_bank_view(const ConceptBank& bank) {
    BankView<Scalar> view;
    view.num_classes = bank.num_classes;
    view.class_ranges = bank.class_ranges;
    const int c = bank.dim;
    view.cs.resize(bank.m(), c);
    for (int i = 0; i < bank.m(); ++i)
        view.cs.row(i) = bank.class_specific[i].vec.cast<Scalar>().transpose();
    view.ca.resize(bank.n(), c);
    for (int i = 0; i < bank.n(); ++i)
        view.ca.row(i) = bank.class_agnostic[i].vec.cast<Scalar>().transpose();
    view.positives.resize(bank.num_classes, c);
    for (int cls = 0; cls < bank.num_classes; ++cls) {
        auto [b, e] = bank.class_ranges[cls];
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(c);
        for (int i = b; i < e; ++i) mean += bank.class_specific[i].vec;
        mean /= double(e - b);
        double norm = mean.norm();
        if (norm < 1e-12)
            throw DegenerateInputError("class " + std::to_string(cls) +
                                       " has a zero-norm mean anchor");
        view.positives.row(cls) = (mean / norm).cast<Scalar>().transpose();
    }
    return view;
}

}  // namespace cate
