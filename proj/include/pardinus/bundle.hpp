// ============================================================================
// bundle.hpp - persisted model bundle
//
// A bundle is a single archive holding:
//   meta.json                pipeline config, format version, corpus digests
//   kmeans.json, kmeans.bin  clustering model (centroids as LE f32)
//   rae_<i>.json, rae_<i>.bin  one autoencoder per cluster (LE f32 weights)
//   forest.json              nested tree nodes
//
// Archive layout (all integers little-endian):
//   magic "PDNB" | u32 format version | u32 member count
//   per member: u32 name length | name | u64 payload length | u32 crc32 | payload
//
// Loads verify the magic, the version and every member checksum. A truncated
// file surfaces as ChecksumMismatch, an unknown future version as
// VersionMismatch, structural damage as CorruptBundle.
// ============================================================================

#pragma once

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "pardinus/config.hpp"
#include "pardinus/metrics.hpp"

namespace pardinus {

inline constexpr std::uint32_t kBundleVersion = 1;

struct ModelBundle {
    std::uint32_t version = kBundleVersion;
    PipelineConfig config;
    KMeansModel kmeans;
    std::vector<RaeModel> raes; // one per cluster, ids 0..k-1
    ForestModel forest;
    std::string created_utc;    // training metadata
    std::string corpus_digest;
};

namespace detail {

// CRC-32 (IEEE 802.3), table computed on first use
inline std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

struct ByteReader {
    const std::uint8_t* p;
    std::size_t remaining;

    void need(std::size_t n) const {
        if (remaining < n) throw ChecksumMismatch("bundle: truncated archive");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
        p += 4;
        remaining -= 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
        p += 8;
        remaining -= 8;
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        remaining -= n;
        return s;
    }
};

using MemberMap = std::map<std::string, std::string>;

inline std::string pack_archive(const MemberMap& members, std::uint32_t version) {
    std::string out = "PDNB";
    put_u32(out, version);
    put_u32(out, std::uint32_t(members.size()));
    for (const auto& [name, payload] : members) {
        put_u32(out, std::uint32_t(name.size()));
        out += name;
        put_u64(out, payload.size());
        put_u32(out, crc32(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()));
        out += payload;
    }
    return out;
}

inline MemberMap unpack_archive(const std::string& raw, std::uint32_t max_version) {
    if (raw.size() < 12) throw ChecksumMismatch("bundle: truncated archive");
    if (std::memcmp(raw.data(), "PDNB", 4) != 0)
        throw CorruptBundle("bundle: bad magic");

    ByteReader r{reinterpret_cast<const std::uint8_t*>(raw.data()) + 4, raw.size() - 4};
    const std::uint32_t version = r.u32();
    if (version == 0 || version > max_version)
        throw VersionMismatch("bundle: unsupported format version " + std::to_string(version));

    const std::uint32_t count = r.u32();
    MemberMap members;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32();
        const std::string name = r.bytes(name_len);
        const std::uint64_t payload_len = r.u64();
        const std::uint32_t stored_crc = r.u32();
        const std::string payload = r.bytes(payload_len);
        if (crc32(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()) !=
            stored_crc)
            throw ChecksumMismatch("bundle: member crc mismatch: " + name);
        members.emplace(name, payload);
    }
    if (r.remaining != 0) throw CorruptBundle("bundle: trailing bytes");
    return members;
}

inline std::string floats_to_le_bytes(const std::vector<float>& v) {
    std::string out(v.size() * 4, '\0');
    // static_assert instead of runtime byte swap: the toolchain here is LE
    static_assert(std::endian::native == std::endian::little);
    std::memcpy(out.data(), v.data(), out.size());
    return out;
}

inline std::vector<float> le_bytes_to_floats(const std::string& s) {
    if (s.size() % 4 != 0) throw CorruptBundle("bundle: float blob misaligned");
    std::vector<float> v(s.size() / 4);
    std::memcpy(v.data(), s.data(), s.size());
    return v;
}

// -- JSON conversions ---------------------------------------------------------

inline nlohmann::json config_to_json(const PipelineConfig& c) {
    return {
        {"width", c.width},
        {"height", c.height},
        {"feature_mode", to_string(c.feature_mode)},
        {"k", c.k},
        {"grid", {{"blocks_w", c.grid.blocks_w}, {"blocks_h", c.grid.blocks_h}}},
        {"rae",
         {{"filters", {c.rae.filters[0], c.rae.filters[1], c.rae.filters[2], c.rae.filters[3]}},
          {"df_halved", c.rae.df_halved},
          {"epochs", c.rae.epochs},
          {"batch_size", c.rae.batch_size},
          {"loss", to_string(c.rae.loss)},
          {"sigma", c.rae.sigma},
          {"lr", c.rae.lr}}},
        {"forest",
         {{"n_trees", c.forest.n_trees},
          {"max_depth", c.forest.max_depth},
          {"mtry", c.forest.mtry},
          {"min_samples_leaf", c.forest.min_samples_leaf},
          {"bootstrap", c.forest.bootstrap}}},
        {"balance", to_string(c.balance)},
        {"equalize_inputs", c.equalize_inputs},
        {"threshold", c.threshold},
        {"tune_threshold", c.tune_threshold},
        {"fn_target", c.fn_target},
        {"master_seed", c.master_seed},
    };
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.feature_mode = feature_mode_from_string(j.at("feature_mode").get<std::string>());
    c.k = j.at("k").get<int>();
    c.grid.blocks_w = j.at("grid").at("blocks_w").get<int>();
    c.grid.blocks_h = j.at("grid").at("blocks_h").get<int>();
    const auto& r = j.at("rae");
    for (int i = 0; i < 4; ++i) c.rae.filters[i] = r.at("filters").at(i).get<int>();
    c.rae.df_halved = r.at("df_halved").get<bool>();
    c.rae.epochs = r.at("epochs").get<int>();
    c.rae.batch_size = r.at("batch_size").get<int>();
    c.rae.loss = rae_loss_from_string(r.at("loss").get<std::string>());
    c.rae.sigma = r.at("sigma").get<double>();
    c.rae.lr = r.at("lr").get<double>();
    c.rae.width = c.width;
    c.rae.height = c.height;
    const auto& f = j.at("forest");
    c.forest.n_trees = f.at("n_trees").get<int>();
    c.forest.max_depth = f.at("max_depth").get<int>();
    c.forest.mtry = f.at("mtry").get<int>();
    c.forest.min_samples_leaf = f.at("min_samples_leaf").get<int>();
    c.forest.bootstrap = f.at("bootstrap").get<bool>();
    c.balance = balance_mode_from_string(j.at("balance").get<std::string>());
    c.equalize_inputs = j.at("equalize_inputs").get<bool>();
    c.threshold = j.at("threshold").get<double>();
    c.tune_threshold = j.at("tune_threshold").get<bool>();
    c.fn_target = j.at("fn_target").get<double>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.rae.seed = c.rae_seed();
    return c;
}

inline nlohmann::json forest_node_to_json(const Tree& tree, int node_id) {
    const TreeNode& n = tree.nodes[node_id];
    if (n.is_leaf())
        return {{"class_counts", {n.n_empty, n.n_animal}}};
    return {{"feature_index", n.feature_index},
            {"threshold", n.threshold},
            {"left", forest_node_to_json(tree, n.left)},
            {"right", forest_node_to_json(tree, n.right)}};
}

inline int forest_node_from_json(const nlohmann::json& j, Tree& tree) {
    const int id = int(tree.nodes.size());
    tree.nodes.push_back({});
    if (j.contains("class_counts")) {
        tree.nodes[id].n_empty = j.at("class_counts").at(0).get<std::uint32_t>();
        tree.nodes[id].n_animal = j.at("class_counts").at(1).get<std::uint32_t>();
        if (tree.nodes[id].n_empty == 0 && tree.nodes[id].n_animal == 0)
            throw CorruptBundle("forest: leaf with zero counts");
        return id;
    }
    tree.nodes[id].feature_index = j.at("feature_index").get<int>();
    tree.nodes[id].threshold = j.at("threshold").get<float>();
    const int left = forest_node_from_json(j.at("left"), tree);
    tree.nodes[id].left = left;
    const int right = forest_node_from_json(j.at("right"), tree);
    tree.nodes[id].right = right;
    return id;
}

} // namespace detail

inline void save_bundle(const ModelBundle& bundle, const std::string& path) {
    using nlohmann::json;
    detail::MemberMap members;

    json meta = {
        {"format_version", bundle.version},
        {"config", detail::config_to_json(bundle.config)},
        {"created_utc", bundle.created_utc},
        {"corpus_digest", bundle.corpus_digest},
        {"cluster_count", bundle.raes.size()},
    };
    members["meta.json"] = meta.dump(2);

    json kj = {
        {"k", bundle.kmeans.k},
        {"d", bundle.kmeans.dim},
        {"mode", to_string(bundle.kmeans.mode)},
        {"seed", bundle.kmeans.seed},
        {"inertia", bundle.kmeans.inertia},
    };
    members["kmeans.json"] = kj.dump(2);
    members["kmeans.bin"] = detail::floats_to_le_bytes(bundle.kmeans.centroids);

    for (const RaeModel& rae : bundle.raes) {
        nn::Network<float> net = rae.network();
        std::vector<nn::WeightIndexEntry> index;
        const std::vector<float> blob = nn::serialize_weights(net, index);

        json layers = json::array();
        for (const auto& e : index)
            layers.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", e.offset}});
        json rj = {
            {"cluster_id", rae.cluster_id},
            {"final_loss", rae.final_loss},
            {"seed", rae.config.seed},
            {"layers", layers},
        };
        const std::string tag = "rae_" + std::to_string(rae.cluster_id);
        members[tag + ".json"] = rj.dump(2);
        members[tag + ".bin"] = detail::floats_to_le_bytes(blob);
    }

    json fj = {
        {"n_trees", bundle.forest.params.n_trees},
        {"max_depth", bundle.forest.params.max_depth},
        {"mtry", bundle.forest.params.mtry},
        {"min_samples_leaf", bundle.forest.params.min_samples_leaf},
        {"bootstrap", bundle.forest.params.bootstrap},
        {"feature_dim", bundle.forest.feature_dim},
        {"seed", bundle.forest.seed},
    };
    json trees = json::array();
    for (const Tree& t : bundle.forest.trees) trees.push_back(detail::forest_node_to_json(t, 0));
    fj["trees"] = std::move(trees);
    members["forest.json"] = fj.dump();

    const std::string raw = detail::pack_archive(members, bundle.version);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write bundle: " + path);
    out.write(raw.data(), std::streamsize(raw.size()));
    if (!out) throw IoError("bundle write failed: " + path);
}

inline ModelBundle load_bundle(const std::string& path) {
    using nlohmann::json;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound("no such bundle: " + path);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const detail::MemberMap members = detail::unpack_archive(raw, kBundleVersion);
    auto member = [&](const std::string& name) -> const std::string& {
        auto it = members.find(name);
        if (it == members.end()) throw CorruptBundle("bundle: missing member " + name);
        return it->second;
    };

    ModelBundle bundle;
    try {
        const json meta = json::parse(member("meta.json"));
        bundle.version = meta.at("format_version").get<std::uint32_t>();
        bundle.config = detail::config_from_json(meta.at("config"));
        bundle.created_utc = meta.value("created_utc", "");
        bundle.corpus_digest = meta.value("corpus_digest", "");

        const json kj = json::parse(member("kmeans.json"));
        bundle.kmeans.k = kj.at("k").get<int>();
        bundle.kmeans.dim = kj.at("d").get<int>();
        bundle.kmeans.mode = feature_mode_from_string(kj.at("mode").get<std::string>());
        bundle.kmeans.seed = kj.at("seed").get<std::uint64_t>();
        bundle.kmeans.inertia = kj.at("inertia").get<double>();
        bundle.kmeans.centroids = detail::le_bytes_to_floats(member("kmeans.bin"));
        if (bundle.kmeans.centroids.size() !=
            std::size_t(bundle.kmeans.k) * std::size_t(bundle.kmeans.dim))
            throw CorruptBundle("bundle: centroid matrix size mismatch");

        const std::size_t cluster_count = meta.at("cluster_count").get<std::size_t>();
        if (cluster_count != std::size_t(bundle.config.k))
            throw CorruptBundle("bundle: cluster count != k");
        for (std::size_t i = 0; i < cluster_count; ++i) {
            const std::string tag = "rae_" + std::to_string(i);
            const json rj = json::parse(member(tag + ".json"));
            RaeModel rae;
            rae.cluster_id = rj.at("cluster_id").get<int>();
            if (rae.cluster_id != int(i)) throw CorruptBundle("bundle: cluster id mismatch");
            rae.final_loss = rj.at("final_loss").get<double>();
            rae.config = bundle.config.rae;
            rae.config.seed = rj.at("seed").get<std::uint64_t>();
            nn::Network<float> net = build_rae(rae.config);
            nn::deserialize_weights(net, detail::le_bytes_to_floats(member(tag + ".bin")));
            rae.parameters = net.params();
            bundle.raes.push_back(std::move(rae));
        }

        const json fj = json::parse(member("forest.json"));
        bundle.forest.params.n_trees = fj.at("n_trees").get<int>();
        bundle.forest.params.max_depth = fj.at("max_depth").get<int>();
        bundle.forest.params.mtry = fj.at("mtry").get<int>();
        bundle.forest.params.min_samples_leaf = fj.at("min_samples_leaf").get<int>();
        bundle.forest.params.bootstrap = fj.at("bootstrap").get<bool>();
        bundle.forest.feature_dim = fj.at("feature_dim").get<int>();
        bundle.forest.seed = fj.at("seed").get<std::uint64_t>();
        for (const auto& tj : fj.at("trees")) {
            Tree t;
            detail::forest_node_from_json(tj, t);
            bundle.forest.trees.push_back(std::move(t));
        }
        if (int(bundle.forest.trees.size()) != bundle.forest.params.n_trees)
            throw CorruptBundle("bundle: tree count mismatch");
    } catch (const nlohmann::json::exception& e) {
        throw CorruptBundle(std::string("bundle: bad member json: ") + e.what());
    } catch (const IoError& e) {
        throw CorruptBundle(std::string("bundle: bad member content: ") + e.what());
    }
    return bundle;
}

} // namespace pardinus
