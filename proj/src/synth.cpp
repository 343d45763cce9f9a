#include "cate/synth.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <set>

#include <json.hpp>

namespace cate {

void validate(const WorldSpec& spec) {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ValidationError("WorldSpec." + field + ": " + why);
    };
    if (spec.dim <= 0) fail("dim", "must be positive");
    if (spec.num_classes <= 0) fail("num_classes", "must be positive");
    if (spec.anchors_per_class <= 0) fail("anchors_per_class", "must be positive");
    if (spec.num_agnostic <= 0) fail("num_agnostic", "must be positive");
    if (spec.sites_ind.empty()) fail("sites_ind", "must list at least one site");
    std::set<std::string> seen;
    for (const auto& s : spec.sites_ind)
        if (!seen.insert(s).second) fail("sites_ind", "duplicate site '" + s + "'");
    for (const auto& s : spec.sites_ood)
        if (!seen.insert(s).second)
            fail("sites_ood", "site '" + s + "' duplicated or shared with sites_ind");
    if (spec.nuisance_strength < 0) fail("nuisance_strength", "must be non-negative");
    if (!(spec.tumor_fraction > 0.0) || spec.tumor_fraction > 1.0)
        fail("tumor_fraction", "must be in (0, 1]");
    if (spec.patches_per_bag_min <= 0) fail("patches_per_bag_min", "must be positive");
    if (spec.patches_per_bag_max < spec.patches_per_bag_min)
        fail("patches_per_bag_max", "must be >= patches_per_bag_min");
    if (spec.bags_per_site <= 0) fail("bags_per_site", "must be positive");
    if (!(spec.noise_sigma > 0.0)) fail("noise_sigma", "must be positive");
}

namespace {

Eigen::VectorXd unit_direction(RngStream& rng, int dim) {
    Eigen::VectorXd v(dim);
    double norm = 0.0;
    do {
        for (int i = 0; i < dim; ++i) v[i] = rng.normal();
        norm = v.norm();
    } while (norm < 1e-12);
    return v / norm;
}

}  // namespace

World generate_world(const WorldSpec& spec) {
    validate(spec);
    World world;

    // Anchors: one stream per anchor index, so generation order is immaterial.
    PromptEmbeddingFile file;
    file.dim = spec.dim;
    const int total_cs = spec.num_classes * spec.anchors_per_class;
    for (int a = 0; a < total_cs + spec.num_agnostic; ++a) {
        RngStream rng(spec.seed, rng_tag::kWorldAnchor, static_cast<uint32_t>(a));
        Eigen::VectorXd v = unit_direction(rng, spec.dim);
        std::string name;
        if (a < total_cs) {
            int cls = a / spec.anchors_per_class;
            int j = a % spec.anchors_per_class;
            name = "class" + std::to_string(cls) + "_anchor" + std::to_string(j);
            file.class_map[name] = cls;
        } else {
            name = "agnostic" + std::to_string(a - total_cs);
        }
        file.concepts[name] = {v};
    }
    world.bank = load_concept_bank(file);

    std::vector<std::string> sites = spec.sites_ind;
    sites.insert(sites.end(), spec.sites_ood.begin(), spec.sites_ood.end());

    std::vector<Eigen::VectorXd> offsets(sites.size());
    for (std::size_t s = 0; s < sites.size(); ++s) {
        RngStream rng(spec.seed, rng_tag::kWorldSiteOffset, static_cast<uint32_t>(s));
        offsets[s] = unit_direction(rng, spec.dim) * spec.nuisance_strength;
        world.truth.site_offsets[sites[s]] = offsets[s];
    }

    world.store.dim = spec.dim;
    for (int cls = 0; cls < spec.num_classes; ++cls)
        world.store.class_names.push_back("class" + std::to_string(cls));

    const uint32_t range = static_cast<uint32_t>(spec.patches_per_bag_max -
                                                 spec.patches_per_bag_min + 1);
    for (std::size_t s = 0; s < sites.size(); ++s) {
        for (int b = 0; b < spec.bags_per_site; ++b) {
            const uint32_t sub = (static_cast<uint32_t>(s) << 20) | static_cast<uint32_t>(b);
            RngStream meta(spec.seed, rng_tag::kWorldBagMeta, sub);
            const int n = spec.patches_per_bag_min + static_cast<int>(meta.next_below(range));
            int tumor = static_cast<int>(std::llround(spec.tumor_fraction * n));
            tumor = std::max(1, std::min(tumor, n));

            Bag bag;
            bag.site = sites[s];
            bag.label = b % spec.num_classes;
            char idbuf[64];
            std::snprintf(idbuf, sizeof(idbuf), "%s_%04d", sites[s].c_str(), b);
            bag.id = idbuf;
            bag.features.resize(n, spec.dim);

            std::vector<uint8_t> mask(n, 0);
            for (int p = 0; p < n; ++p) {
                RngStream rng(spec.seed, static_cast<uint32_t>(p), sub);
                const bool is_tumor = p < tumor;
                mask[p] = is_tumor ? 1 : 0;
                const Eigen::VectorXd* anchor;
                if (is_tumor) {
                    auto [begin, end] = world.bank.class_ranges[bag.label];
                    int pick = begin + static_cast<int>(rng.next_below(
                                           static_cast<uint32_t>(end - begin)));
                    anchor = &world.bank.class_specific[pick].vec;
                } else {
                    int pick = static_cast<int>(
                        rng.next_below(static_cast<uint32_t>(world.bank.n())));
                    anchor = &world.bank.class_agnostic[pick].vec;
                }
                for (int d = 0; d < spec.dim; ++d) {
                    double x = (*anchor)[d] + spec.noise_sigma * rng.normal() + offsets[s][d];
                    bag.features(p, d) = static_cast<float>(x);
                }
            }
            world.store.bags.push_back(std::move(bag));
            world.truth.tumor_mask.push_back(std::move(mask));
        }
    }
    return world;
}

std::string ground_truth_to_json(const GroundTruth& truth) {
    nlohmann::json doc;
    nlohmann::json masks = nlohmann::json::array();
    for (const auto& mask : truth.tumor_mask) {
        std::vector<int> row(mask.begin(), mask.end());
        masks.push_back(row);
    }
    doc["tumor_mask"] = std::move(masks);
    nlohmann::json offsets;
    for (const auto& [site, v] : truth.site_offsets)
        offsets[site] = std::vector<double>(v.data(), v.data() + v.size());
    doc["site_offsets"] = std::move(offsets);
    return doc.dump(2);
}

double gaussian_mi_oracle(const GaussianPair& pair) {
    if (!(std::abs(pair.rho) < 1.0))
        throw ValidationError("gaussian_mi_oracle: |rho| must be < 1");
    if (pair.dim <= 0) throw ValidationError("gaussian_mi_oracle: dim must be positive");
    return double(pair.dim) * -0.5 * std::log1p(-pair.rho * pair.rho);
}

double linear_gaussian_channel_mi(const Eigen::MatrixXd& weight_matrix, double noise_sigma) {
    if (!weight_matrix.allFinite())
        throw ValidationError("linear_gaussian_channel_mi: non-finite weight entries");
    if (!(noise_sigma > 0.0))
        throw ValidationError("linear_gaussian_channel_mi: noise_sigma must be positive");
    const auto d = weight_matrix.rows();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) +
                        weight_matrix * weight_matrix.transpose() / (noise_sigma * noise_sigma);
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) logdet += std::log(llt.matrixL()(i, i));
    return logdet;  // 0.5 * ln det = sum of ln of Cholesky diagonal
}

void sample_gaussian_pairs(const GaussianPair& pair, int batch, RngStream& rng,
                           Eigen::MatrixXd& a, Eigen::MatrixXd& b) {
    if (!(std::abs(pair.rho) < 1.0))
        throw ValidationError("sample_gaussian_pairs: |rho| must be < 1");
    if (batch <= 0) throw ValidationError("sample_gaussian_pairs: batch must be positive");
    a.resize(batch, pair.dim);
    b.resize(batch, pair.dim);
    const double c = std::sqrt(1.0 - pair.rho * pair.rho);
    for (int i = 0; i < batch; ++i) {
        for (int d = 0; d < pair.dim; ++d) {
            double z1 = rng.normal();
            double z2 = rng.normal();
            a(i, d) = z1;
            b(i, d) = pair.rho * z1 + c * z2;
        }
    }
}

}  // namespace cate
