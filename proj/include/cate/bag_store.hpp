#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cate/errors.hpp"

namespace cate {

// One slide-level sample: a patch-feature matrix with label and site metadata.
struct Bag {
    std::string id;
    int label = 0;
    std::string site;
    Eigen::MatrixXf features;  // N x C

    int n_patches() const { return static_cast<int>(features.rows()); }
};

// Bag collection backed by a manifest plus one binary payload per bag.
//
// Manifest (JSON): {"dim": C, "classes": [name...], "bags":
//   [{"id", "label", "site", "path", "n_patches"}...]}, paths relative to
// the manifest's directory.
//
// Payload: magic "CATB" | u32 version | u32 N | u32 C | N*C little-endian
// float32, row-major. File length is exactly 16 + 4*N*C bytes.
struct BagStore {
    int dim = 0;
    std::vector<std::string> class_names;  // index == label
    std::vector<Bag> bags;

    int num_classes() const { return static_cast<int>(class_names.size()); }
    const Bag& find(const std::string& id) const;
};

constexpr uint32_t kBagPayloadVersion = 1;

void write_bag_payload(const std::string& path, const Eigen::MatrixXf& features);
Eigen::MatrixXf read_bag_payload(const std::string& path);

// Writes manifest.json plus bags/<id>.catb under dir; returns manifest path.
std::string write_bag_store(const BagStore& store, const std::string& dir);
BagStore read_bag_store(const std::string& manifest_path);

}  // namespace cate
