// ============================================================================
// rae.hpp - per-cluster robust autoencoders
//
// Architecture: four packs of 3x3 convolution + 2x2 max pooling in the
// encoder, a dense bottleneck over the flattened feature map, and four packs
// of 2x nearest upsampling + 3x3 transposed convolution in the decoder, with
// a sigmoid on the output layer. With 256x384 inputs and default filters the
// bottleneck is 16*24*48 = 18432 units; halving the filters (df variant)
// gives 9216.
//
// Each cluster trains its own model on that cluster's empty images only.
// ============================================================================

#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include "pardinus/losses.hpp"
#include "pardinus/network.hpp"

namespace pardinus {

enum class RaeLoss { correntropy, mse };

inline const char* to_string(RaeLoss l) { return l == RaeLoss::correntropy ? "correntropy" : "mse"; }
inline RaeLoss rae_loss_from_string(const std::string& s) {
    if (s == "correntropy") return RaeLoss::correntropy;
    if (s == "mse") return RaeLoss::mse;
    throw IoError("unknown rae loss '" + s + "'");
}

struct RaeConfig {
    int height = 64;  // divisible by 16 (four pooling halvings)
    int width = 96;
    int filters[4] = {32, 48, 64, 48}; // encoder filter counts
    bool df_halved = false;            // halve every filter count
    int epochs = 70;
    int batch_size = 16;
    RaeLoss loss = RaeLoss::correntropy;
    double sigma = 0.2;  // correntropy kernel width for [0,1] images
    double lr = 1e-3;
    std::uint64_t seed = 0;

    int effective_filters(int i) const { return df_halved ? filters[i] / 2 : filters[i]; }
    int bottleneck_units() const {
        return (height / 16) * (width / 16) * effective_filters(3);
    }
};

inline nn::Network<float> build_rae(const RaeConfig& cfg) {
    if (cfg.height < 16 || cfg.width < 16 || cfg.height % 16 != 0 || cfg.width % 16 != 0)
        throw IndivisibleDims("build_rae: dims must be positive multiples of 16");

    using nn::Activation;
    using nn::LayerSpec;
    const int f0 = cfg.effective_filters(0);
    const int f1 = cfg.effective_filters(1);
    const int f2 = cfg.effective_filters(2);
    const int f3 = cfg.effective_filters(3);
    const int bh = cfg.height / 16;
    const int bw = cfg.width / 16;

    std::vector<LayerSpec> specs = {
        LayerSpec::conv2d(f0, Activation::relu), LayerSpec::maxpool2(),
        LayerSpec::conv2d(f1, Activation::relu), LayerSpec::maxpool2(),
        LayerSpec::conv2d(f2, Activation::relu), LayerSpec::maxpool2(),
        LayerSpec::conv2d(f3, Activation::relu), LayerSpec::maxpool2(),
        LayerSpec::flatten(),
        LayerSpec::dense(bh * bw * f3, Activation::relu),
        LayerSpec::reshape(f3, bh, bw),
        LayerSpec::upsample2(), LayerSpec::tconv2d(f2, Activation::relu),
        LayerSpec::upsample2(), LayerSpec::tconv2d(f1, Activation::relu),
        LayerSpec::upsample2(), LayerSpec::tconv2d(f0, Activation::relu),
        LayerSpec::upsample2(), LayerSpec::tconv2d(3, Activation::sigmoid),
    };
    return nn::Network<float>({3, cfg.height, cfg.width}, std::move(specs));
}

struct RaeModel {
    int cluster_id = 0;
    RaeConfig config;
    nn::ParamStore<float> parameters; // immutable snapshot after training
    double first_epoch_loss = 0.0;
    double final_loss = 0.0; // no greater than first_epoch_loss on any sane run

    nn::Network<float> network() const {
        nn::Network<float> net = build_rae(config);
        net.params() = parameters;
        return net;
    }
};

// ----------------------------------------------------------------------------
// train_rae - epochs x shuffled batches of Adam steps on the configured loss.
// Inputs are expected to be equalized images of matching dims; the caller is
// responsible for feeding empty images only.
// ----------------------------------------------------------------------------
inline RaeModel train_rae(const std::vector<ImageTensor>& empty_images, const RaeConfig& cfg,
                          int cluster_id = 0) {
    if (empty_images.empty()) throw EmptyTrainingSet("train_rae: no training images");
    for (const auto& img : empty_images)
        if (img.channels != 3 || img.height != cfg.height || img.width != cfg.width)
            throw ShapeMismatch("train_rae: image dims do not match config");

    // seeding depends only on the config, so two clusters holding identical
    // data train to identical parameters, and parallel order cannot matter
    nn::Network<float> net = build_rae(cfg);
    net.init_params(derive_seed(cfg.seed, "rae-init"));

    Rng shuffle_rng(derive_seed(cfg.seed, "rae-shuffle"));
    std::vector<std::size_t> order(empty_images.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double epoch_loss = 0.0;
    double first_epoch_loss = 0.0;
    nn::ForwardTrace<float> trace;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order.begin(), order.end());
        epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
            std::vector<const ImageTensor*> ptrs;
            ptrs.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) ptrs.push_back(&empty_images[order[i]]);
            const nn::Tensor4<float> batch = nn::to_batch(ptrs);

            net.forward(batch, &trace);
            nn::LossValue<float> loss = cfg.loss == RaeLoss::correntropy
                                            ? nn::correntropy_loss(batch, trace.output, cfg.sigma)
                                            : nn::mse_loss(batch, trace.output);
            nn::Gradients<float> grads = net.backward(trace, loss.grad);
            net.adam_step(grads, float(cfg.lr));

            epoch_loss += loss.value;
            ++batches;
        }
        epoch_loss /= double(batches);
        if (epoch == 0) first_epoch_loss = epoch_loss;
    }

    RaeModel model;
    model.cluster_id = cluster_id;
    model.config = cfg;
    model.parameters = net.params();
    model.first_epoch_loss = first_epoch_loss;
    model.final_loss = epoch_loss;
    return model;
}

// Train one model per cluster. Clusters are independent (separate seeds and
// parameter stores), so they run concurrently; results are ordered by
// cluster id and identical to a sequential run.
inline std::vector<RaeModel> train_all(const std::map<int, std::vector<ImageTensor>>& clusters,
                                       const RaeConfig& cfg, unsigned max_workers = 0) {
    for (const auto& [id, images] : clusters)
        if (images.empty())
            throw EmptyCluster("train_all: cluster " + std::to_string(id) + " has no images");

    std::vector<std::pair<int, const std::vector<ImageTensor>*>> work;
    for (const auto& [id, images] : clusters) work.emplace_back(id, &images);

    std::vector<RaeModel> models(work.size());
    if (max_workers == 0) max_workers = std::max(1u, std::thread::hardware_concurrency());
    max_workers = std::min<unsigned>(max_workers, unsigned(work.size()));

    if (max_workers <= 1) {
        for (std::size_t i = 0; i < work.size(); ++i)
            models[i] = train_rae(*work[i].second, cfg, work[i].first);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> threads;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (unsigned t = 0; t < max_workers; ++t) {
            threads.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= work.size()) return;
                    try {
                        models[i] = train_rae(*work[i].second, cfg, work[i].first);
                    } catch (...) {
                        std::scoped_lock lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : threads) th.join();
        if (failure) std::rethrow_exception(failure);
    }
    return models;
}

inline ImageTensor reconstruct(const RaeModel& model, const ImageTensor& img) {
    if (img.channels != 3 || img.height != model.config.height || img.width != model.config.width)
        throw ShapeMismatch("reconstruct: image dims do not match model");
    nn::Network<float> net = model.network();
    return nn::to_image(net.forward(nn::to_tensor(img)));
}

// batched reconstruction through a prebuilt network (hot path for training
// and evaluation; avoids rebuilding the network per image)
inline std::vector<ImageTensor> reconstruct_batch(const nn::Network<float>& net,
                                                  const std::vector<const ImageTensor*>& images,
                                                  int batch_size = 16) {
    std::vector<ImageTensor> out;
    out.reserve(images.size());
    for (std::size_t start = 0; start < images.size(); start += std::size_t(batch_size)) {
        const std::size_t end = std::min(images.size(), start + std::size_t(batch_size));
        std::vector<const ImageTensor*> chunk(images.begin() + start, images.begin() + end);
        const nn::Tensor4<float> output = net.forward(nn::to_batch(chunk));
        for (int i = 0; i < output.n; ++i) out.push_back(nn::to_image(output, i));
    }
    return out;
}

} // namespace pardinus
