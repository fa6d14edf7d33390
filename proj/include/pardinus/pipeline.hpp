// ============================================================================
// pipeline.hpp - end-to-end training, prediction and evaluation
//
// Training order: split, K-Means on empty training images, per-cluster
// autoencoder training on equalized empty images, grid feature extraction
// for every training image, balancing, forest training, validation metrics.
// Inference mirrors it per image: resize, cluster assignment, equalize,
// reconstruct with the cluster's model, extract features, forest
// probability, threshold decision.
//
// Only the forest ever sees labels; the audit struct records what reached
// the unsupervised stages and train() enforces that no animal image did.
// ============================================================================

#pragma once

#include <filesystem>

#include "pardinus/bundle.hpp"
#include "pardinus/codec.hpp"
#include "pardinus/synth.hpp"

namespace pardinus {

struct TrainAudit {
    std::size_t kmeans_inputs = 0;        // vectors seen by fit_kmeans
    std::size_t kmeans_animal_inputs = 0; // must stay 0
    std::size_t rae_inputs = 0;           // images seen by autoencoder training
    std::size_t rae_animal_inputs = 0;    // must stay 0
    std::size_t forest_inputs = 0;        // feature vectors after balancing
    std::vector<std::size_t> cluster_sizes; // empty training images per cluster
    std::vector<std::string> stage_log;
};

struct TrainResult {
    ModelBundle bundle;
    MetricsReport val_report;   // validation split at the final threshold
    TrainAudit audit;
};

struct Prediction {
    std::string path;
    int cluster = 0;
    double probability = 0.0;
    Label label = Label::empty;
};

namespace detail {

inline std::string resolve(const std::string& root, const std::string& rel) {
    std::filesystem::path p(rel);
    if (p.is_absolute() || root.empty()) return rel;
    return (std::filesystem::path(root) / p).string();
}

inline ImageTensor load_resized(const std::string& path, const PipelineConfig& cfg) {
    return resize_bilinear(load_image(path), cfg.width, cfg.height);
}

inline std::string digest_manifest(const DatasetManifest& m) {
    std::string flat;
    for (const auto& e : m.entries) {
        flat += e.path;
        flat += '|';
        flat += to_string(e.label);
        flat += '\n';
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x",
                  crc32(reinterpret_cast<const std::uint8_t*>(flat.data()), flat.size()));
    return buf;
}

// Shared inference machinery: networks are built once per cluster and images
// move through them in cluster batches, with results restored to input order.
struct InferenceContext {
    const ModelBundle& bundle;
    std::vector<nn::Network<float>> nets;

    explicit InferenceContext(const ModelBundle& b) : bundle(b) {
        nets.reserve(b.raes.size());
        for (const auto& rae : b.raes) nets.push_back(rae.network());
    }

    int assign_cluster(const ImageTensor& resized) const {
        return assign(bundle.kmeans, featurize(resized, bundle.kmeans.mode));
    }

    // per-image features for a set of resized images with known clusters
    std::vector<FeatureVector> extract(const std::vector<ImageTensor>& preprocessed,
                                       const std::vector<int>& clusters) const {
        std::vector<FeatureVector> features(preprocessed.size());
        for (std::size_t c = 0; c < nets.size(); ++c) {
            std::vector<std::size_t> members;
            std::vector<const ImageTensor*> inputs;
            for (std::size_t i = 0; i < preprocessed.size(); ++i)
                if (clusters[i] == int(c)) {
                    members.push_back(i);
                    inputs.push_back(&preprocessed[i]);
                }
            if (members.empty()) continue;
            const std::vector<ImageTensor> recon =
                reconstruct_batch(nets[c], inputs, bundle.config.rae.batch_size);
            for (std::size_t j = 0; j < members.size(); ++j)
                features[members[j]] = extract_features(preprocessed[members[j]], recon[j],
                                                        int(c), bundle.config.grid);
        }
        return features;
    }
};

// equalization toggle: the production path feeds equalized images to the
// autoencoders, the ablation path feeds raw RGB
inline ImageTensor preprocess_for_rae(const ImageTensor& resized, const PipelineConfig& cfg) {
    return cfg.equalize_inputs ? equalize(resized) : resized;
}

inline double tuned_threshold_for(const std::vector<double>& scores,
                                  const std::vector<Label>& labels, double fn_target) {
    std::vector<double> animal_scores;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (labels[i] == Label::animal) animal_scores.push_back(scores[i]);
    if (animal_scores.empty()) return 0.5;
    std::sort(animal_scores.begin(), animal_scores.end());
    const std::size_t allowed = std::size_t(fn_target * double(animal_scores.size()));
    if (allowed >= animal_scores.size()) return 1.0;
    return std::clamp(animal_scores[allowed], 0.0, 1.0);
}

} // namespace detail

// ----------------------------------------------------------------------------
// cmd_train
// ----------------------------------------------------------------------------
inline TrainResult cmd_train(const DatasetManifest& input_manifest, const std::string& images_root,
                             const PipelineConfig& config, unsigned max_workers = 0) {
    config.validate();
    TrainResult result;
    TrainAudit& audit = result.audit;
    auto log = [&](const std::string& line) { audit.stage_log.push_back(line); };

    // stage 1: split
    DatasetManifest manifest = input_manifest;
    const std::size_t unassigned = manifest.count(Split::unassigned);
    if (unassigned == manifest.entries.size()) {
        manifest = split_dataset(manifest, config.split_seed());
    } else if (unassigned != 0) {
        throw AlreadySplit("train: manifest is partially split");
    }
    if (manifest.count(Label::empty) == 0 || manifest.count(Label::animal) == 0)
        throw SingleClass("train: manifest needs both labels");
    log("[split] train=" + std::to_string(manifest.count(Split::train)) +
        " val=" + std::to_string(manifest.count(Split::val)) +
        " test=" + std::to_string(manifest.count(Split::test)));

    // load + resize the training and validation images
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        if (manifest.entries[i].split == Split::train) train_idx.push_back(i);
        if (manifest.entries[i].split == Split::val) val_idx.push_back(i);
    }
    std::vector<ImageTensor> train_images(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i)
        train_images[i] = detail::load_resized(
            detail::resolve(images_root, manifest.entries[train_idx[i]].path), config);
    log("[load] train images=" + std::to_string(train_images.size()));

    // stage 2: K-Means on empty training images only. The audit recounts the
    // labels of everything collected, so the weak-supervision boundary is
    // asserted on the actual input set rather than assumed.
    std::vector<std::vector<float>> kmeans_vectors;
    std::vector<Label> kmeans_input_labels;
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
        const auto& entry = manifest.entries[train_idx[i]];
        if (entry.label != Label::empty) continue;
        kmeans_vectors.push_back(featurize(train_images[i], config.feature_mode));
        kmeans_input_labels.push_back(entry.label);
    }
    audit.kmeans_inputs = kmeans_vectors.size();
    for (Label l : kmeans_input_labels)
        if (l == Label::animal) ++audit.kmeans_animal_inputs;
    if (audit.kmeans_animal_inputs != 0)
        throw Error("train: audit violation, animal image reached kmeans");
    KMeansModel kmeans =
        fit_kmeans(kmeans_vectors, config.k, config.kmeans_seed());
    kmeans.mode = config.feature_mode;
    log("[kmeans] k=" + std::to_string(config.k) +
        " inertia=" + std::to_string(kmeans.inertia));

    // cluster assignment for every training image
    std::vector<int> train_cluster(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i)
        train_cluster[i] = assign(kmeans, featurize(train_images[i], config.feature_mode));

    // stage 3: preprocess + per-cluster autoencoders on empty images only
    std::vector<ImageTensor> train_pre(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i)
        train_pre[i] = detail::preprocess_for_rae(train_images[i], config);

    std::map<int, std::vector<ImageTensor>> cluster_empties;
    std::vector<Label> rae_input_labels;
    for (int c = 0; c < config.k; ++c) cluster_empties[c] = {};
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
        const Label l = manifest.entries[train_idx[i]].label;
        if (l != Label::empty) continue;
        cluster_empties[train_cluster[i]].push_back(train_pre[i]);
        rae_input_labels.push_back(l);
    }
    audit.rae_inputs = rae_input_labels.size();
    for (Label l : rae_input_labels)
        if (l == Label::animal) ++audit.rae_animal_inputs;
    if (audit.rae_animal_inputs != 0)
        throw Error("train: audit violation, animal image reached rae training");
    audit.cluster_sizes.clear();
    for (const auto& [c, images] : cluster_empties)
        audit.cluster_sizes.push_back(images.size());

    RaeConfig rae_cfg = config.rae;
    rae_cfg.width = config.width;
    rae_cfg.height = config.height;
    rae_cfg.seed = config.rae_seed();
    std::vector<RaeModel> raes = train_all(cluster_empties, rae_cfg, max_workers);
    log("[rae] trained " + std::to_string(raes.size()) + " models");

    // stages 4-5: grid partition + feature extraction for all training images
    ModelBundle bundle;
    bundle.config = config;
    bundle.config.rae = rae_cfg;
    bundle.kmeans = std::move(kmeans);
    bundle.raes = std::move(raes);
    bundle.corpus_digest = detail::digest_manifest(manifest);

    detail::InferenceContext ctx(bundle);
    std::vector<FeatureVector> train_features = ctx.extract(train_pre, train_cluster);
    for (std::size_t i = 0; i < train_idx.size(); ++i)
        train_features[i].label = manifest.entries[train_idx[i]].label;
    log("[features] dim=" + std::to_string(config.feature_dim()));

    // balancing, then stage 6: forest training
    const std::vector<FeatureVector> balanced = balance(
        train_features, config.balance, config.balance_seed(),
        [](const FeatureVector& fv) { return *fv.label; },
        [](const FeatureVector& fv) { return fv.cluster_id(); });
    audit.forest_inputs = balanced.size();
    log("[balance] mode=" + std::string(to_string(config.balance)) + " kept=" +
        std::to_string(balanced.size()) + "/" + std::to_string(train_features.size()));

    bundle.forest = train_forest(balanced, config.forest, config.forest_seed());
    log("[forest] trees=" + std::to_string(config.forest.n_trees));

    // validation metrics + optional threshold tuning
    std::vector<double> val_scores;
    std::vector<Label> val_labels;
    if (!val_idx.empty()) {
        std::vector<ImageTensor> val_pre(val_idx.size());
        std::vector<int> val_cluster(val_idx.size());
        for (std::size_t i = 0; i < val_idx.size(); ++i) {
            const ImageTensor resized = detail::load_resized(
                detail::resolve(images_root, manifest.entries[val_idx[i]].path), config);
            val_cluster[i] = ctx.assign_cluster(resized);
            val_pre[i] = detail::preprocess_for_rae(resized, config);
        }
        const std::vector<FeatureVector> val_features = ctx.extract(val_pre, val_cluster);
        for (std::size_t i = 0; i < val_idx.size(); ++i) {
            val_scores.push_back(predict_proba(bundle.forest, val_features[i]));
            val_labels.push_back(manifest.entries[val_idx[i]].label);
        }
        if (config.tune_threshold) {
            bundle.config.threshold =
                detail::tuned_threshold_for(val_scores, val_labels, config.fn_target);
            log("[threshold] tuned=" + std::to_string(bundle.config.threshold));
        }
        result.val_report = evaluate_scores(val_scores, val_labels, bundle.config.threshold);
        log("[val] auc=" + std::to_string(result.val_report.auc));
    }

    result.bundle = std::move(bundle);
    return result;
}

// ----------------------------------------------------------------------------
// cmd_predict - per-image cluster, probability and thresholded label,
// returned in input order. Batched or one-by-one processing is equivalent.
// ----------------------------------------------------------------------------
inline std::vector<Prediction> cmd_predict(const ModelBundle& bundle,
                                           const std::vector<std::string>& image_paths,
                                           const std::string& images_root = "",
                                           std::vector<FeatureVector>* features_out = nullptr) {
    const PipelineConfig& config = bundle.config;
    detail::InferenceContext ctx(bundle);

    std::vector<ImageTensor> preprocessed(image_paths.size());
    std::vector<int> clusters(image_paths.size());
    for (std::size_t i = 0; i < image_paths.size(); ++i) {
        const ImageTensor resized =
            detail::load_resized(detail::resolve(images_root, image_paths[i]), config);
        clusters[i] = ctx.assign_cluster(resized);
        preprocessed[i] = detail::preprocess_for_rae(resized, config);
    }
    const std::vector<FeatureVector> features = ctx.extract(preprocessed, clusters);

    std::vector<Prediction> out(image_paths.size());
    for (std::size_t i = 0; i < image_paths.size(); ++i) {
        out[i].path = image_paths[i];
        out[i].cluster = clusters[i];
        out[i].probability = predict_proba(bundle.forest, features[i]);
        out[i].label = out[i].probability >= config.threshold ? Label::animal : Label::empty;
    }
    if (features_out) *features_out = features;
    return out;
}

// ----------------------------------------------------------------------------
// cmd_eval - metrics over one manifest split (default test)
// ----------------------------------------------------------------------------
inline MetricsReport cmd_eval(const ModelBundle& bundle, const DatasetManifest& manifest,
                              const std::string& images_root = "", Split split = Split::test) {
    std::vector<std::string> paths;
    std::vector<Label> labels;
    for (const auto& e : manifest.entries)
        if (e.split == split) {
            paths.push_back(e.path);
            labels.push_back(e.label);
        }
    if (paths.empty()) throw EmptyInput("eval: split has no entries");

    bool has_empty = false, has_animal = false;
    for (Label l : labels) (l == Label::animal ? has_animal : has_empty) = true;
    if (!has_empty || !has_animal) throw SingleClass("eval: split needs both labels");

    const std::vector<Prediction> preds = cmd_predict(bundle, paths, images_root);
    std::vector<double> scores(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) scores[i] = preds[i].probability;
    return evaluate_scores(scores, labels, bundle.config.threshold);
}

// ----------------------------------------------------------------------------
// report serialization: undefined rates become explicit JSON nulls
// ----------------------------------------------------------------------------
inline nlohmann::json metrics_to_json(const MetricsReport& report) {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {
        {"auc", report.auc},
        {"acc", opt(report.rates.acc)},
        {"fn_rate", opt(report.rates.fn_rate)},
        {"fp_rate", opt(report.rates.fp_rate)},
        {"precision", opt(report.rates.precision)},
        {"recall", opt(report.rates.recall)},
        {"f1", opt(report.rates.f1)},
        {"confusion",
         {{"tp", report.cm.tp}, {"fp", report.cm.fp}, {"fn", report.cm.fn}, {"tn", report.cm.tn}}},
    };
}

inline void save_predictions_csv(const std::vector<Prediction>& preds, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write predictions: " + path);
    out << "path,cluster,probability,label\n";
    out.precision(9);
    for (const auto& p : preds)
        out << p.path << ',' << p.cluster << ',' << p.probability << ',' << to_string(p.label)
            << '\n';
    if (!out) throw IoError("prediction write failed: " + path);
}

} // namespace pardinus
