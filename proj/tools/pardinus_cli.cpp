// ============================================================================
// pardinus_cli.cpp - command line front end
//
// Subcommands: synth, split, train, predict, eval, inspect. Configuration
// can come from a JSON file (--config) with individual flags overriding it;
// --seed sets the master seed every stage seed derives from.
// ============================================================================

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pardinus/pardinus.hpp"

namespace fs = std::filesystem;
using namespace pardinus;

namespace {

struct ConfigCli {
    std::string config_path;
    PipelineConfig config;

    // override tracking: CLI11 counts how often each flag was given
    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "pipeline config JSON file");
        cmd->add_option("--width", config.width, "image width after resize");
        cmd->add_option("--height", config.height, "image height after resize");
        cmd->add_option("--k", config.k, "number of clusters");
        cmd->add_option("--grid-w", config.grid.blocks_w, "grid blocks in width");
        cmd->add_option("--grid-h", config.grid.blocks_h, "grid blocks in height");
        cmd->add_option("--epochs", config.rae.epochs, "autoencoder epochs");
        cmd->add_option("--batch-size", config.rae.batch_size, "autoencoder batch size");
        cmd->add_option("--lr", config.rae.lr, "autoencoder learning rate");
        cmd->add_option("--sigma", config.rae.sigma, "correntropy kernel width");
        cmd->add_flag("--df-halved", config.rae.df_halved, "halve the filter counts");
        cmd->add_option("--loss", loss_name, "autoencoder loss (correntropy|mse)");
        cmd->add_option("--mode", mode_name,
                        "clustering features (rgb_image|equalized_image|rgb_histogram|"
                        "equalized_histogram|gray_histogram)");
        cmd->add_option("--balance", balance_name, "balancing (none|global|per_cluster)");
        cmd->add_flag("--no-equalize", raw_inputs, "feed raw RGB to the autoencoders");
        cmd->add_option("--n-trees", config.forest.n_trees, "forest size");
        cmd->add_option("--threshold", config.threshold, "decision threshold");
        cmd->add_flag("--tune-threshold", config.tune_threshold,
                      "tune threshold on validation to cap the FN rate");
        cmd->add_option("--fn-target", config.fn_target, "FN rate cap for tuning");
        cmd->add_option("--seed", config.master_seed, "master seed");
        app_cmd = cmd;
    }

    PipelineConfig resolve() {
        PipelineConfig base;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw FileNotFound("no such config: " + config_path);
            base = detail::config_from_json(nlohmann::json::parse(in));
        }
        // apply only the flags that were actually given on top of the file
        auto given = [&](const std::string& name) { return app_cmd->count(name) > 0; };
        if (given("--width")) base.width = config.width;
        if (given("--height")) base.height = config.height;
        if (given("--k")) base.k = config.k;
        if (given("--grid-w")) base.grid.blocks_w = config.grid.blocks_w;
        if (given("--grid-h")) base.grid.blocks_h = config.grid.blocks_h;
        if (given("--epochs")) base.rae.epochs = config.rae.epochs;
        if (given("--batch-size")) base.rae.batch_size = config.rae.batch_size;
        if (given("--lr")) base.rae.lr = config.rae.lr;
        if (given("--sigma")) base.rae.sigma = config.rae.sigma;
        if (given("--df-halved")) base.rae.df_halved = config.rae.df_halved;
        if (given("--loss")) base.rae.loss = rae_loss_from_string(loss_name);
        if (given("--mode")) base.feature_mode = feature_mode_from_string(mode_name);
        if (given("--balance")) base.balance = balance_mode_from_string(balance_name);
        if (given("--no-equalize")) base.equalize_inputs = false;
        if (given("--n-trees")) base.forest.n_trees = config.forest.n_trees;
        if (given("--threshold")) base.threshold = config.threshold;
        if (given("--tune-threshold")) base.tune_threshold = config.tune_threshold;
        if (given("--fn-target")) base.fn_target = config.fn_target;
        if (given("--seed")) base.master_seed = config.master_seed;
        base.rae.width = base.width;
        base.rae.height = base.height;
        base.rae.seed = base.rae_seed();
        return base;
    }

    std::string loss_name, mode_name, balance_name;
    bool raw_inputs = false;
    CLI::App* app_cmd = nullptr;
};

int run(int argc, char** argv) {
    CLI::App app{"PARDINUS - weakly supervised discarding of empty camera-trap images"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    std::string synth_out = "corpus";
    SynthSpec synth_spec;
    std::uint64_t synth_seed = 42;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--n-empty", synth_spec.n_empty, "empty image count");
    synth->add_option("--n-animal", synth_spec.n_animal, "animal image count");
    synth->add_option("--width", synth_spec.width, "image width");
    synth->add_option("--height", synth_spec.height, "image height");
    synth->add_option("--scene-types", synth_spec.n_scene_types, "number of scene types");
    synth->add_option("--seed", synth_seed, "generator seed");

    // split
    auto* split = app.add_subcommand("split", "assign train/val/test splits");
    std::string split_manifest, split_out;
    std::uint64_t split_seed = 42;
    split->add_option("--manifest", split_manifest, "input manifest CSV")->required();
    split->add_option("--out", split_out, "output manifest CSV")->required();
    split->add_option("--seed", split_seed, "split seed");

    // train
    auto* train = app.add_subcommand("train", "train the full pipeline");
    std::string train_manifest, train_root, train_bundle = "model.pdnb";
    std::string train_metrics;
    unsigned train_workers = 0;
    ConfigCli train_cfg;
    train->add_option("--manifest", train_manifest, "manifest CSV")->required();
    train->add_option("--images-root", train_root, "directory manifest paths resolve against");
    train->add_option("--out", train_bundle, "output bundle path");
    train->add_option("--metrics", train_metrics, "validation metrics JSON output");
    train->add_option("--workers", train_workers, "training worker threads (0 = auto)");
    train_cfg.attach(train);

    // predict
    auto* predict = app.add_subcommand("predict", "classify images with a trained bundle");
    std::string pred_bundle, pred_manifest, pred_root, pred_out = "predictions.csv";
    std::string pred_split = "test";
    std::vector<std::string> pred_images;
    predict->add_option("--bundle", pred_bundle, "bundle path")->required();
    predict->add_option("--images", pred_images, "image files to classify");
    predict->add_option("--manifest", pred_manifest, "classify a manifest split instead");
    predict->add_option("--split", pred_split, "manifest split to classify");
    predict->add_option("--images-root", pred_root, "directory image paths resolve against");
    predict->add_option("--out", pred_out, "predictions CSV output");
    std::string pred_features;
    predict->add_option("--features-csv", pred_features, "also dump the feature vectors");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a bundle on the test split");
    std::string eval_bundle, eval_manifest, eval_root, eval_dir = ".";
    std::string eval_split = "test";
    eval->add_option("--bundle", eval_bundle, "bundle path")->required();
    eval->add_option("--manifest", eval_manifest, "manifest CSV")->required();
    eval->add_option("--images-root", eval_root, "directory manifest paths resolve against");
    eval->add_option("--split", eval_split, "split to evaluate");
    eval->add_option("--out-dir", eval_dir, "directory for metrics.json and roc.csv");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "dump bundle metadata");
    std::string inspect_bundle;
    inspect->add_option("--bundle", inspect_bundle, "bundle path")->required();

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        const SynthResult result = synth_generate(synth_spec, synth_seed, synth_out);
        std::cout << "wrote " << result.manifest.entries.size() << " images under " << synth_out
                  << " (manifest: " << (fs::path(synth_out) / "manifest.csv").string() << ")\n";
        return 0;
    }

    if (split->parsed()) {
        const DatasetManifest assigned = split_dataset(load_manifest(split_manifest), split_seed);
        save_manifest(assigned, split_out);
        std::cout << "train=" << assigned.count(Split::train) << " val=" << assigned.count(Split::val)
                  << " test=" << assigned.count(Split::test) << "\n";
        return 0;
    }

    if (train->parsed()) {
        const PipelineConfig config = train_cfg.resolve();
        const DatasetManifest manifest = load_manifest(train_manifest);
        const std::string root =
            train_root.empty() ? fs::path(train_manifest).parent_path().string() : train_root;

        const TrainResult result = cmd_train(manifest, root, config, train_workers);
        for (const auto& line : result.audit.stage_log) std::cout << line << "\n";

        save_bundle(result.bundle, train_bundle);
        std::cout << "bundle written to " << train_bundle << "\n";
        if (!train_metrics.empty()) {
            std::ofstream out(train_metrics, std::ios::trunc);
            out << metrics_to_json(result.val_report).dump(2) << "\n";
            std::cout << "validation metrics written to " << train_metrics << "\n";
        }
        return 0;
    }

    if (predict->parsed()) {
        const ModelBundle bundle = load_bundle(pred_bundle);
        std::vector<std::string> paths = pred_images;
        std::string root = pred_root;
        if (!pred_manifest.empty()) {
            const DatasetManifest manifest = load_manifest(pred_manifest);
            const Split want = split_from_string(pred_split);
            for (const auto& e : manifest.entries)
                if (e.split == want) paths.push_back(e.path);
            if (root.empty()) root = fs::path(pred_manifest).parent_path().string();
        }
        if (paths.empty()) {
            std::cerr << "predict: no images given\n";
            return 1;
        }
        std::vector<FeatureVector> features;
        const std::vector<Prediction> preds =
            cmd_predict(bundle, paths, root, pred_features.empty() ? nullptr : &features);
        save_predictions_csv(preds, pred_out);
        if (!pred_features.empty())
            save_features_csv(features, bundle.config.grid, pred_features);
        std::cout << preds.size() << " predictions written to " << pred_out << "\n";
        return 0;
    }

    if (eval->parsed()) {
        const ModelBundle bundle = load_bundle(eval_bundle);
        const DatasetManifest manifest = load_manifest(eval_manifest);
        const std::string root =
            eval_root.empty() ? fs::path(eval_manifest).parent_path().string() : eval_root;

        const MetricsReport report =
            cmd_eval(bundle, manifest, root, split_from_string(eval_split));
        fs::create_directories(eval_dir);
        {
            std::ofstream out(fs::path(eval_dir) / "metrics.json", std::ios::trunc);
            out << metrics_to_json(report).dump(2) << "\n";
        }
        save_roc_csv(report.roc_points, (fs::path(eval_dir) / "roc.csv").string());
        std::cout << metrics_to_json(report).dump(2) << "\n";
        return 0;
    }

    if (inspect->parsed()) {
        const ModelBundle bundle = load_bundle(inspect_bundle);
        nlohmann::json j = {
            {"format_version", bundle.version},
            {"config", detail::config_to_json(bundle.config)},
            {"clusters", bundle.raes.size()},
            {"kmeans", {{"k", bundle.kmeans.k}, {"dim", bundle.kmeans.dim},
                        {"mode", to_string(bundle.kmeans.mode)}, {"inertia", bundle.kmeans.inertia}}},
            {"forest", {{"n_trees", bundle.forest.params.n_trees},
                        {"feature_dim", bundle.forest.feature_dim}}},
            {"corpus_digest", bundle.corpus_digest},
        };
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
