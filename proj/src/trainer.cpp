#include "slr/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "slr/errors.hpp"
#include "slr/parallel.hpp"
#include "slr/pseudo_labels.hpp"
#include "slr/rng.hpp"
#include "slr/slrt.hpp"
#include "slr/version.hpp"

namespace slr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct AugDraw {
    bool flip = false;
    double brightness = 1.0;
    double contrast = 1.0;
};

Field<double> apply_photometric(Field<double> img, double brightness, double contrast) {
    if (brightness == 1.0 && contrast == 1.0) return img;
    double mean = 0.0;
    for (double& v : img.data) {
        v *= brightness;
        mean += v;
    }
    mean /= static_cast<double>(img.data.size());
    for (double& v : img.data) v = std::clamp((v - mean) * contrast + mean, 0.0, 1.0);
    return img;
}

struct StageSpec {
    std::string name;
    int stage_index = 0;  // 0 = warm-up, k = re-training round k
    int epochs = 0;
    bool warmup = true;
};

// One SGD stage. `labels` maps scene index -> training target; scenes
// without labels are excluded from the stage.
ModelParams train_stage(const std::vector<Scene>& scenes,
                        const std::vector<const Field<double>*>& labels, const SLRConfig& cfg,
                        const StageSpec& spec, std::vector<EpochLoss>* loss_log) {
    if (scenes.empty()) throw ConfigError("training dataset is empty");
    if (spec.epochs <= 0) throw ConfigError("epoch count must be > 0");

    std::vector<int> usable;
    for (size_t i = 0; i < scenes.size(); ++i) {
        if (labels[i] != nullptr) usable.push_back(static_cast<int>(i));
    }
    if (usable.empty()) throw ConfigError("no usable training images for stage " + spec.name);

    LossWeights weights = cfg.loss;
    if (cfg.ablation.no_pairwise) weights.lambda1 = 0.0;

    ModelParams params =
        init_params(cfg.net, Rng::stream_seed(cfg.seed, "init", static_cast<uint64_t>(spec.stage_index)));
    OptimizerState opt = OptimizerState::zeros_like(params);

    const int threads = resolve_threads(cfg.threads);

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        const double lr = poly_decay(cfg.lr, epoch, spec.epochs, cfg.poly_power);
        std::vector<int> order = usable;
        Rng order_rng = Rng::stream(cfg.seed, "order", static_cast<uint64_t>(spec.stage_index),
                                    static_cast<uint64_t>(epoch));
        order_rng.shuffle(order);
        Rng aug_rng = Rng::stream(cfg.seed, "aug", static_cast<uint64_t>(spec.stage_index),
                                  static_cast<uint64_t>(epoch));

        LossTerms epoch_terms;
        long samples_seen = 0;

        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            const int n = static_cast<int>(end - start);

            // Augmentation decisions are drawn sequentially so the batch is
            // reproducible regardless of the worker count.
            std::vector<AugDraw> draws(n);
            if (cfg.augmentation) {
                for (int i = 0; i < n; ++i) {
                    draws[i].flip = aug_rng.bernoulli(0.5);
                    draws[i].brightness = aug_rng.uniform(0.9, 1.1);
                    draws[i].contrast = aug_rng.uniform(0.9, 1.1);
                }
            }

            std::vector<ParamGrads> grads(n);
            std::vector<LossTerms> terms(n);
            parallel_for(n, threads, [&](int i) {
                const Scene& scene = scenes[order[start + i]];
                const Field<double>* base_labels = labels[order[start + i]];
                const AugDraw& aug = draws[i];

                Field<double> image = aug.flip ? flip_horizontal(scene.image) : scene.image;
                image = apply_photometric(std::move(image), aug.brightness, aug.contrast);
                Field<double> target = aug.flip ? flip_horizontal(*base_labels) : *base_labels;
                WeakAnnotation ann =
                    aug.flip ? flip_annotation(scene.ann, scene.image.width) : scene.ann;

                ForwardPass fp = forward(params, make_net_input(image, cfg.net, ann.horizon));
                LossValue loss;
                if (spec.warmup) {
                    loss = warmup_loss(fp.probs, image, target, ann.boxes, weights, cfg.pairwise,
                                       &terms[i]);
                    grads[i] = backward(params, fp, loss.grad_logits, nullptr);
                } else {
                    loss = retrain_loss(fp.probs, fp.features(), image, target, weights,
                                        cfg.pairwise, &terms[i]);
                    grads[i] = backward(params, fp, loss.grad_logits, &loss.grad_features);
                }
            });

            // Index-ordered reduction; batch gradient is the sample mean.
            ParamGrads batch = std::move(grads[0]);
            for (int i = 1; i < n; ++i) batch.add(grads[i]);
            batch.scale(1.0 / n);
            rmsprop_step(params, batch, opt, lr, cfg.optim);

            for (int i = 0; i < n; ++i) epoch_terms.add(terms[i]);
            samples_seen += n;
        }

        if (loss_log) {
            EpochLoss el;
            el.stage = spec.name;
            el.epoch = epoch;
            el.lr = lr;
            epoch_terms.scale(1.0 / static_cast<double>(samples_seen));
            el.terms = epoch_terms;
            if (!std::isfinite(el.terms.total)) {
                throw Error("non-finite loss in stage " + spec.name + " epoch " +
                            std::to_string(epoch));
            }
            loss_log->push_back(std::move(el));
        }
    }
    return params;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace

ModelParams train_warmup(const std::vector<Scene>& scenes, const SLRConfig& cfg, int total_epochs,
                         std::vector<EpochLoss>* loss_log) {
    validate_slr_config(cfg);
    std::vector<Field<double>> dense;
    std::vector<const Field<double>*> labels(scenes.size(), nullptr);
    if (cfg.ablation.dense_warmup) {
        dense.reserve(scenes.size());
        for (const auto& s : scenes) dense.push_back(one_hot_labels(s.dense_gt));
        for (size_t i = 0; i < scenes.size(); ++i) labels[i] = &dense[i];
    } else {
        for (size_t i = 0; i < scenes.size(); ++i) labels[i] = &scenes[i].partial;
    }
    StageSpec spec;
    spec.name = "warmup";
    spec.stage_index = 0;
    spec.epochs = total_epochs;
    spec.warmup = true;
    return train_stage(scenes, labels, cfg, spec, loss_log);
}

PseudoGenResult generate_pseudo_dataset(const ModelParams& model, const std::vector<Scene>& scenes,
                                        const SLRConfig& cfg, const std::string& out_dir) {
    validate_slr_config(cfg);
    fs::create_directories(out_dir);
    PseudoAblation ablation;
    ablation.no_consolidation = cfg.ablation.no_consolidation;
    ablation.no_features = cfg.ablation.no_features;

    PseudoGenResult result;
    result.labels.resize(scenes.size());
    std::vector<uint8_t> failed(scenes.size(), 0);
    parallel_for(static_cast<int>(scenes.size()), cfg.threads, [&](int i) {
        try {
            DensePseudoLabelMap map =
                estimate_pseudo_labels(model, scenes[i].image, scenes[i].ann,
                                       scenes[i].restrictions, scenes[i].partial, cfg.pseudo,
                                       ablation);
            result.labels[i] = std::move(map.labels);
            json sidecar;
            sidecar["constrained_fraction"] = map.constrained_fraction();
            sidecar["skipped"] = false;
            write_slrt((fs::path(out_dir) / (scenes[i].id + ".slrt")).string(),
                       to_f32_tensor(*result.labels[i]));
            write_text(fs::path(out_dir) / (scenes[i].id + ".json"), sidecar.dump(2) + "\n");
        } catch (const PrototypeFailure&) {
            failed[i] = 1;
            json sidecar;
            sidecar["constrained_fraction"] = 0.0;
            sidecar["skipped"] = true;
            write_text(fs::path(out_dir) / (scenes[i].id + ".json"), sidecar.dump(2) + "\n");
        }
    });
    for (size_t i = 0; i < scenes.size(); ++i) {
        if (failed[i]) {
            result.labels[i].reset();
            result.skipped.push_back(scenes[i].id);
        }
    }
    if (result.skipped.size() * 2 > scenes.size()) {
        throw Error("pseudo-label estimation skipped " + std::to_string(result.skipped.size()) +
                    " of " + std::to_string(scenes.size()) + " images");
    }
    return result;
}

PseudoGenResult load_pseudo_cache(const std::string& dir, const std::vector<Scene>& scenes) {
    PseudoGenResult result;
    result.labels.resize(scenes.size());
    for (size_t i = 0; i < scenes.size(); ++i) {
        const fs::path tensor_path = fs::path(dir) / (scenes[i].id + ".slrt");
        const fs::path sidecar_path = fs::path(dir) / (scenes[i].id + ".json");
        if (fs::exists(tensor_path)) {
            result.labels[i] = field_from_tensor(read_slrt(tensor_path.string()));
            continue;
        }
        if (!fs::exists(sidecar_path)) {
            throw IoError("pseudo cache is missing an entry for " + scenes[i].id);
        }
        std::ifstream in(sidecar_path);
        json sidecar;
        in >> sidecar;
        if (!sidecar.value("skipped", false)) {
            throw IoError("pseudo cache is missing the tensor for " + scenes[i].id);
        }
        result.skipped.push_back(scenes[i].id);
    }
    return result;
}

ModelParams train_retrain(const std::vector<Scene>& scenes, const PseudoGenResult& cache,
                          const SLRConfig& cfg, int iteration, std::vector<EpochLoss>* loss_log) {
    validate_slr_config(cfg);
    if (cache.labels.size() != scenes.size()) {
        throw ShapeError("pseudo cache does not match the dataset");
    }
    std::vector<const Field<double>*> labels(scenes.size(), nullptr);
    for (size_t i = 0; i < scenes.size(); ++i) {
        if (cache.labels[i].has_value()) labels[i] = &*cache.labels[i];
    }
    StageSpec spec;
    spec.name = "retrain-" + std::to_string(iteration);
    spec.stage_index = iteration;
    spec.epochs = cfg.retrain_epochs;
    spec.warmup = false;
    return train_stage(scenes, labels, cfg, spec, loss_log);
}

std::string train_run_report_json(const SLRConfig& cfg, const TrainRun& run) {
    json j;
    j["config"] = json::parse(slr_config_to_json(cfg));
    j["variant"] = ablation_name(cfg.ablation);
    json stages = json::array();
    for (const auto& st : run.stages) {
        stages.push_back({{"name", st.name},
                          {"epochs", st.epochs},
                          {"init_hash", st.init_hash},
                          {"checkpoint", st.checkpoint},
                          {"metrics", json::parse(metrics_to_json(st.metrics))}});
    }
    j["stages"] = stages;
    if (!run.stages.empty()) {
        j["final_metrics"] = json::parse(metrics_to_json(run.stages.back().metrics));
    }
    j["skipped_images"] = run.skipped;
    return j.dump(2);
}

TrainRun run_slr(const DatasetManifest& manifest, const SLRConfig& cfg,
                 const std::string& run_dir) {
    validate_slr_config(cfg);
    const fs::path base(run_dir);
    fs::create_directories(base / "checkpoints");
    write_text(base / "config.json", slr_config_to_json(cfg) + "\n");

    std::ofstream stage_log(base / "stages.log", std::ios::trunc);
    if (!stage_log) throw IoError("cannot write " + (base / "stages.log").string());

    const auto t_load0 = std::chrono::steady_clock::now();
    std::vector<Scene> train = load_split(manifest, manifest.train, cfg.labels, cfg.threads);
    std::vector<Scene> test = load_split(manifest, manifest.test, cfg.labels, cfg.threads);
    const std::chrono::duration<double> load_dt = std::chrono::steady_clock::now() - t_load0;
    stage_log << "stage=load train=" << train.size() << " test=" << test.size()
              << " wall=" << load_dt.count() << "s\n";

    TrainRun run;
    auto run_stage = [&](const std::string& name, int stage_index, auto&& train_fn) {
        const auto t0 = std::chrono::steady_clock::now();
        ModelParams model = train_fn();
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        StageResult st;
        st.name = name;
        st.epochs = 0;
        for (const auto& el : run.loss_log)
            if (el.stage == name) ++st.epochs;
        st.init_hash = init_params(cfg.net, Rng::stream_seed(cfg.seed, "init",
                                                             static_cast<uint64_t>(stage_index)))
                           .content_hash();
        st.checkpoint = "checkpoints/stage-" + std::to_string(stage_index) + ".slrt";
        save_checkpoint((base / st.checkpoint).string(), model);
        st.metrics = evaluate(model, test, cfg.eval, cfg.threads);
        st.wall_seconds = dt.count();
        stage_log << "stage=" << name << " epochs=" << st.epochs << " init_hash=" << st.init_hash
                  << " final_hash=" << model.content_hash() << " wall=" << dt.count() << "s"
                  << " f1=" << st.metrics.overall_scores.f1 << " fp=" << st.metrics.overall.fp
                  << "\n";
        stage_log.flush();
        run.stages.push_back(std::move(st));
        return model;
    };

    const int warmup_epochs =
        cfg.ablation.no_retrain ? cfg.warmup_epochs + cfg.retrain_epochs : cfg.warmup_epochs;
    ModelParams model = run_stage("warmup", 0, [&] {
        return train_warmup(train, cfg, warmup_epochs, &run.loss_log);
    });

    if (!cfg.ablation.no_retrain) {
        for (int iter = 1; iter <= cfg.iterations; ++iter) {
            const fs::path pseudo_dir =
                iter == 1 ? base / "pseudo" : base / "pseudo" / ("iter-" + std::to_string(iter));
            const auto t0 = std::chrono::steady_clock::now();
            PseudoGenResult cache =
                generate_pseudo_dataset(model, train, cfg, pseudo_dir.string());
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
            stage_log << "stage=pseudo-" << iter << " skipped=" << cache.skipped.size()
                      << " wall=" << dt.count() << "s\n";
            run.skipped = cache.skipped;
            // Re-training always consumes the serialized cache so the
            // standalone stage commands reproduce the pipeline bit-exactly.
            PseudoGenResult from_disk = load_pseudo_cache(pseudo_dir.string(), train);
            model = run_stage("retrain-" + std::to_string(iter), iter, [&] {
                return train_retrain(train, from_disk, cfg, iter, &run.loss_log);
            });
        }
    }
    run.model = std::move(model);

    // losses.csv
    {
        std::ostringstream os;
        os << "stage,epoch,lr,L_foc,L_pair,L_proj,L_ws,total\n";
        os.precision(10);
        for (const auto& el : run.loss_log) {
            os << el.stage << "," << el.epoch << "," << el.lr << "," << el.terms.focal << ","
               << el.terms.pairwise << "," << el.terms.projection << "," << el.terms.separation
               << "," << el.terms.total << "\n";
        }
        write_text(base / "losses.csv", os.str());
    }

    write_text(base / "report.json", train_run_report_json(cfg, run) + "\n");

    {
        std::ostringstream os;
        os << metrics_csv_header() << "\n";
        const std::string variant = ablation_name(cfg.ablation);
        for (const auto& st : run.stages) {
            os << metrics_csv_row(variant + ":s" + std::to_string(cfg.seed) + ":" + st.name,
                                  st.metrics)
               << "\n";
        }
        os << metrics_csv_row(variant + ":s" + std::to_string(cfg.seed) + ":final",
                              run.stages.back().metrics)
           << "\n";
        write_text(base / "report.csv", os.str());
    }

    {
        json rm;
        rm["version"] = kVersionString;
        rm["seed"] = cfg.seed;
        rm["config"] = "config.json";
        json stages = json::array();
        for (const auto& st : run.stages) {
            stages.push_back({{"name", st.name},
                              {"checkpoint", st.checkpoint},
                              {"wall_seconds", st.wall_seconds}});
        }
        rm["stages"] = stages;
        write_text(base / "run_manifest.json", rm.dump(2) + "\n");
    }
    return run;
}

}  // namespace slr
