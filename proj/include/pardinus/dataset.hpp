// ============================================================================
// dataset.hpp - manifests, stratified splitting and class balancing
//
// Manifest file format: CSV with header `path,label,split`, labels
// empty|animal, split train|val|test|unassigned.
// ============================================================================

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "pardinus/common.hpp"

namespace pardinus {

enum class Label { empty = 0, animal = 1 };
enum class Split { train, val, test, unassigned };
enum class BalanceMode { none, global, per_cluster };

inline const char* to_string(Label l) { return l == Label::empty ? "empty" : "animal"; }
inline const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        default: return "unassigned";
    }
}
inline const char* to_string(BalanceMode m) {
    switch (m) {
        case BalanceMode::none: return "none";
        case BalanceMode::global: return "global";
        default: return "per_cluster";
    }
}

inline Label label_from_string(const std::string& s) {
    if (s == "empty") return Label::empty;
    if (s == "animal") return Label::animal;
    throw IoError("manifest: unknown label '" + s + "'");
}
inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    if (s == "unassigned") return Split::unassigned;
    throw IoError("manifest: unknown split '" + s + "'");
}
inline BalanceMode balance_mode_from_string(const std::string& s) {
    if (s == "none") return BalanceMode::none;
    if (s == "global") return BalanceMode::global;
    if (s == "per_cluster") return BalanceMode::per_cluster;
    throw IoError("unknown balance mode '" + s + "'");
}

struct ManifestEntry {
    std::string path;
    Label label = Label::empty;
    Split split = Split::unassigned;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::size_t count(Label l) const {
        std::size_t n = 0;
        for (const auto& e : entries) n += (e.label == l);
        return n;
    }
    std::size_t count(Split s) const {
        std::size_t n = 0;
        for (const auto& e : entries) n += (e.split == s);
        return n;
    }
    std::size_t count(Split s, Label l) const {
        std::size_t n = 0;
        for (const auto& e : entries) n += (e.split == s && e.label == l);
        return n;
    }
};

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << "path,label,split\n";
    for (const auto& e : m.entries)
        out << e.path << ',' << to_string(e.label) << ',' << to_string(e.split) << '\n';
    if (!out) throw IoError("manifest write failed: " + path);
}

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound("no such manifest: " + path);

    DatasetManifest m;
    std::string line;
    if (!std::getline(in, line)) throw IoError("manifest is empty: " + path);
    if (line != "path,label,split")
        throw IoError("manifest: bad header '" + line + "'");

    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string p, l, s;
        if (!std::getline(ss, p, ',') || !std::getline(ss, l, ',') || !std::getline(ss, s))
            throw IoError("manifest: malformed row '" + line + "'");
        if (!seen.insert(p).second) throw IoError("manifest: duplicate path '" + p + "'");
        m.entries.push_back({p, label_from_string(l), split_from_string(s)});
    }
    return m;
}

// ----------------------------------------------------------------------------
// split_dataset - 60/20/20 train/val/test, stratified by label.
//
// Per label the counts are round(0.6*n) train and round(0.2*n) val with the
// remainder going to test, which keeps every split within one item of its
// requested fraction.
// ----------------------------------------------------------------------------
inline DatasetManifest split_dataset(const DatasetManifest& manifest, std::uint64_t seed) {
    for (const auto& e : manifest.entries)
        if (e.split != Split::unassigned)
            throw AlreadySplit("split_dataset: entry already assigned: " + e.path);

    DatasetManifest out = manifest;
    Rng rng(derive_seed(seed, "split"));

    for (Label label : {Label::empty, Label::animal}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < out.entries.size(); ++i)
            if (out.entries[i].label == label) idx.push_back(i);
        if (idx.empty()) continue;

        rng.shuffle(idx.begin(), idx.end());
        const std::size_t n = idx.size();
        const std::size_t n_train = std::size_t(0.6 * double(n) + 0.5);
        const std::size_t n_val = std::size_t(0.2 * double(n) + 0.5);

        for (std::size_t i = 0; i < n; ++i) {
            Split s = i < n_train              ? Split::train
                      : i < n_train + n_val    ? Split::val
                                               : Split::test;
            out.entries[idx[i]].split = s;
        }
    }
    return out;
}

// ----------------------------------------------------------------------------
// balance - undersampling only, mirroring how the training corpus is evened
// out before classifier training. Animal items are never touched and nothing
// is ever duplicated; when empties already match or trail the animal count
// the input is returned as-is.
//
// Item access goes through projections so this works on any record type:
//   label_of(item)   -> Label
//   cluster_of(item) -> int (only used by per_cluster)
// ----------------------------------------------------------------------------
template <typename Item, typename LabelOf, typename ClusterOf>
std::vector<Item> balance(const std::vector<Item>& items, BalanceMode mode, std::uint64_t seed,
                          LabelOf label_of, ClusterOf cluster_of) {
    if (mode == BalanceMode::none) return items;

    std::size_t n_empty = 0, n_animal = 0;
    for (const auto& it : items) {
        if (label_of(it) == Label::empty)
            ++n_empty;
        else
            ++n_animal;
    }
    if (n_empty == 0 || n_animal == 0)
        throw EmptyClass("balance: both labels must be present");

    Rng rng(derive_seed(seed, "balance"));

    // group key: single bucket for global, cluster id for per_cluster
    auto key_of = [&](const Item& it) { return mode == BalanceMode::global ? 0 : cluster_of(it); };

    int max_key = 0;
    for (const auto& it : items) max_key = std::max(max_key, key_of(it));

    // per group: keep all animals, undersample empties down to the animal count
    std::vector<std::size_t> animal_count(std::size_t(max_key) + 1, 0);
    for (const auto& it : items)
        if (label_of(it) == Label::animal) ++animal_count[key_of(it)];

    std::vector<std::vector<std::size_t>> empties_by_key(std::size_t(max_key) + 1);
    for (std::size_t i = 0; i < items.size(); ++i)
        if (label_of(items[i]) == Label::empty) empties_by_key[key_of(items[i])].push_back(i);

    std::vector<bool> keep(items.size(), true);
    for (std::size_t k = 0; k < empties_by_key.size(); ++k) {
        auto& empties = empties_by_key[k];
        if (empties.size() <= animal_count[k]) continue; // never oversample
        rng.shuffle(empties.begin(), empties.end());
        for (std::size_t i = animal_count[k]; i < empties.size(); ++i) keep[empties[i]] = false;
    }

    std::vector<Item> out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i)
        if (keep[i]) out.push_back(items[i]);
    return out;
}

} // namespace pardinus
