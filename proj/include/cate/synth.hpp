#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "cate/bag_store.hpp"
#include "cate/concept_bank.hpp"
#include "cate/rng.hpp"

namespace cate {

// Parameters of a synthetic joint-embedding world with known ground truth.
struct WorldSpec {
    int dim = 32;
    int num_classes = 2;
    int anchors_per_class = 2;
    int num_agnostic = 4;
    std::vector<std::string> sites_ind;
    std::vector<std::string> sites_ood;
    double nuisance_strength = 0.0;  // scale of the per-site offset direction
    double tumor_fraction = 0.3;     // in (0,1]
    int patches_per_bag_min = 32;
    int patches_per_bag_max = 64;
    int bags_per_site = 16;
    double noise_sigma = 0.5;
    uint64_t seed = 0;
};

// Throws ValidationError naming the violated field.
void validate(const WorldSpec& spec);

// Per-bag tumor masks and per-site offsets. Emitted for verification only;
// training code paths never receive this.
struct GroundTruth {
    std::vector<std::vector<uint8_t>> tumor_mask;      // parallel to store.bags
    std::map<std::string, Eigen::VectorXd> site_offsets;
};

struct World {
    ConceptBank bank;
    BagStore store;
    GroundTruth truth;
};

// Builds anchors, bags, and ground truth. Pure function of the spec:
// equal (spec, seed) gives bitwise-equal outputs regardless of call order.
//
// Tumor patches are a random class anchor plus isotropic noise plus the
// bag's site offset; the remaining patches use a random class-agnostic
// anchor instead. The site offset is a fixed random unit direction per
// site scaled by nuisance_strength. Bag labels alternate round-robin
// within each site.
World generate_world(const WorldSpec& spec);

std::string ground_truth_to_json(const GroundTruth& truth);

// Bivariate Gaussian pair description for mutual-information oracles.
struct GaussianPair {
    double rho = 0.0;  // |rho| < 1
    int dim = 1;       // independent dimensions
};

// Exact MI of `dim` independent bivariate Gaussian coordinate pairs with
// correlation rho: dim * (-0.5 * ln(1 - rho^2)) nats.
double gaussian_mi_oracle(const GaussianPair& pair);

// Exact I(x; alpha) for alpha = W x + eps, x ~ N(0, I),
// eps ~ N(0, noise_sigma^2 I): 0.5 * ln det(I + W W^T / noise_sigma^2).
double linear_gaussian_channel_mi(const Eigen::MatrixXd& weight_matrix, double noise_sigma);

// Draws `batch` paired rows (a, b) per the GaussianPair law.
void sample_gaussian_pairs(const GaussianPair& pair, int batch, RngStream& rng,
                           Eigen::MatrixXd& a, Eigen::MatrixXd& b);

}  // namespace cate
