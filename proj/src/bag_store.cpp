#include "cate/bag_store.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace cate {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

uint32_t get_u32(const unsigned char* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

}  // namespace

const Bag& BagStore::find(const std::string& id) const {
    for (const auto& b : bags)
        if (b.id == id) return b;
    throw MissingArtifactError("unknown bag id: " + id);
}

void write_bag_payload(const std::string& path, const Eigen::MatrixXf& features) {
    const uint32_t n = static_cast<uint32_t>(features.rows());
    const uint32_t c = static_cast<uint32_t>(features.cols());
    std::string buf;
    buf.reserve(16 + 4ull * n * c);
    buf += "CATB";
    put_u32(buf, kBagPayloadVersion);
    put_u32(buf, n);
    put_u32(buf, c);
    for (uint32_t i = 0; i < n; ++i) {
        for (uint32_t j = 0; j < c; ++j) {
            uint32_t bits;
            float f = features(i, j);
            std::memcpy(&bits, &f, 4);
            put_u32(buf, bits);
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write bag payload: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write on bag payload: " + path);
}

Eigen::MatrixXf read_bag_payload(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("cannot open bag payload: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 16 || buf.compare(0, 4, "CATB") != 0)
        throw ValidationError("bad bag payload header: " + path);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    uint32_t version = get_u32(p + 4);
    if (version != kBagPayloadVersion)
        throw ValidationError("unsupported bag payload version " + std::to_string(version));
    uint32_t n = get_u32(p + 8);
    uint32_t c = get_u32(p + 12);
    if (buf.size() != 16 + 4ull * n * c)
        throw ValidationError("bag payload length " + std::to_string(buf.size()) +
                              " != expected " + std::to_string(16 + 4ull * n * c) + ": " + path);
    Eigen::MatrixXf features(n, c);
    std::size_t off = 16;
    for (uint32_t i = 0; i < n; ++i) {
        for (uint32_t j = 0; j < c; ++j) {
            uint32_t bits = get_u32(p + off);
            float f;
            std::memcpy(&f, &bits, 4);
            features(i, j) = f;
            off += 4;
        }
    }
    return features;
}

std::string write_bag_store(const BagStore& store, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "bags");
    json manifest;
    manifest["dim"] = store.dim;
    manifest["classes"] = store.class_names;
    json bags = json::array();
    for (const auto& b : store.bags) {
        std::string rel = "bags/" + b.id + ".catb";
        write_bag_payload((fs::path(dir) / rel).string(), b.features);
        json row;
        row["id"] = b.id;
        row["label"] = b.label;
        row["site"] = b.site;
        row["path"] = rel;
        row["n_patches"] = b.n_patches();
        bags.push_back(std::move(row));
    }
    manifest["bags"] = std::move(bags);
    std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + manifest_path);
    out << manifest.dump(2) << "\n";
    return manifest_path;
}

BagStore read_bag_store(const std::string& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw MissingArtifactError("cannot open manifest: " + manifest_path);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid manifest JSON: ") + e.what());
    }
    BagStore store;
    store.dim = manifest.at("dim").get<int>();
    store.class_names = manifest.at("classes").get<std::vector<std::string>>();
    fs::path base = fs::path(manifest_path).parent_path();
    for (const auto& row : manifest.at("bags")) {
        Bag b;
        b.id = row.at("id").get<std::string>();
        b.label = row.at("label").get<int>();
        b.site = row.at("site").get<std::string>();
        int n_patches = row.at("n_patches").get<int>();
        b.features = read_bag_payload((base / row.at("path").get<std::string>()).string());
        if (b.n_patches() != n_patches)
            throw ValidationError("bag " + b.id + ": manifest n_patches " +
                                  std::to_string(n_patches) + " != payload rows " +
                                  std::to_string(b.n_patches()));
        if (b.features.cols() != store.dim)
            throw ValidationError("bag " + b.id + ": payload dim " +
                                  std::to_string(b.features.cols()) + " != manifest dim " +
                                  std::to_string(store.dim));
        if (b.label < 0 || b.label >= store.num_classes())
            throw ValidationError("bag " + b.id + ": label " + std::to_string(b.label) +
                                  " out of range");
        store.bags.push_back(std::move(b));
    }
    return store;
}

}  // namespace cate
