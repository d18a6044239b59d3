#include "slr/capi.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "slr/config.hpp"
#include "slr/dataset.hpp"
#include "slr/errors.hpp"
#include "slr/eval.hpp"
#include "slr/experiments.hpp"
#include "slr/synthgen.hpp"
#include "slr/trainer.hpp"
#include "slr/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

struct slr_dataset {
    slr::DatasetManifest manifest;
};

struct slr_model {
    slr::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
slr_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return SLR_OK;
    } catch (const slr::ConfigError& e) {
        g_last_error = e.what();
        return SLR_ERR_CONFIG;
    } catch (const slr::AnnotationContradiction& e) {
        g_last_error = e.what();
        return SLR_ERR_CONTRADICTION;
    } catch (const slr::PrototypeFailure& e) {
        g_last_error = e.what();
        return SLR_ERR_PROTOTYPE;
    } catch (const slr::ValidationError& e) {
        g_last_error = e.what();
        return SLR_ERR_VALIDATION;
    } catch (const slr::ShapeError& e) {
        g_last_error = e.what();
        return SLR_ERR_SHAPE;
    } catch (const slr::IoError& e) {
        g_last_error = e.what();
        return SLR_ERR_IO;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SLR_ERR_RUNTIME;
    }
}

slr_status require(bool ok, const char* what) {
    if (ok) return SLR_OK;
    g_last_error = std::string("null argument: ") + what;
    return SLR_ERR_CONFIG;
}

slr::SLRConfig parse_config(const char* config_json) {
    return slr::slr_config_from_json(config_json ? config_json : "");
}

}  // namespace

extern "C" {

const char* slr_version(void) { return slr::kVersionString; }

const char* slr_status_name(int status) {
    switch (status) {
        case SLR_OK: return "ok";
        case SLR_ERR_RUNTIME: return "runtime_error";
        case SLR_ERR_CONFIG: return "config_error";
        case SLR_ERR_VALIDATION: return "validation_error";
        case SLR_ERR_IO: return "io_error";
        case SLR_ERR_CONTRADICTION: return "annotation_contradiction";
        case SLR_ERR_PROTOTYPE: return "prototype_failure";
        case SLR_ERR_SHAPE: return "shape_error";
        default: return "unknown";
    }
}

const char* slr_last_error(void) { return g_last_error.c_str(); }

void slr_string_free(char* s) { std::free(s); }

slr_status slr_default_config(char** json_out) {
    if (slr_status st = require(json_out != nullptr, "json_out")) return st;
    return guarded([&] { *json_out = dup_string(slr::slr_config_to_json(slr::SLRConfig{})); });
}

slr_status slr_default_scene_params(char** json_out) {
    if (slr_status st = require(json_out != nullptr, "json_out")) return st;
    return guarded([&] { *json_out = dup_string(slr::scene_params_to_json(slr::SceneParams{})); });
}

slr_status slr_generate_dataset(const char* params_json, uint64_t root_seed, int n_train,
                                int n_test, const char* out_dir, int force,
                                char** manifest_path_out) {
    if (slr_status st = require(out_dir != nullptr, "out_dir")) return st;
    return guarded([&] {
        slr::SceneParams params = params_json && *params_json
                                      ? slr::scene_params_from_json(params_json)
                                      : slr::SceneParams{};
        std::string path =
            slr::generate_dataset(root_seed, n_train, n_test, params, out_dir, force != 0);
        if (manifest_path_out) *manifest_path_out = dup_string(path);
    });
}

slr_status slr_dataset_open(const char* manifest_path, slr_dataset** out) {
    if (slr_status st = require(manifest_path && out, "manifest_path/out")) return st;
    return guarded([&] {
        auto* ds = new slr_dataset{slr::load_manifest(manifest_path)};
        *out = ds;
    });
}

void slr_dataset_close(slr_dataset* ds) { delete ds; }

slr_status slr_dataset_info(const slr_dataset* ds, char** json_out) {
    if (slr_status st = require(ds && json_out, "ds/json_out")) return st;
    return guarded([&] {
        json j;
        j["dims"] = {ds->manifest.height, ds->manifest.width};
        j["root_seed"] = ds->manifest.root_seed;
        j["n_train"] = ds->manifest.train.size();
        j["n_test"] = ds->manifest.test.size();
        j["base_dir"] = ds->manifest.base_dir;
        j["params"] = json::parse(slr::scene_params_to_json(ds->manifest.params));
        *json_out = dup_string(j.dump(2));
    });
}

slr_status slr_model_load(const char* checkpoint_path, slr_model** out) {
    if (slr_status st = require(checkpoint_path && out, "checkpoint_path/out")) return st;
    return guarded([&] { *out = new slr_model{slr::load_checkpoint(checkpoint_path)}; });
}

slr_status slr_model_save(const slr_model* model, const char* checkpoint_path) {
    if (slr_status st = require(model && checkpoint_path, "model/checkpoint_path")) return st;
    return guarded([&] { slr::save_checkpoint(checkpoint_path, model->params); });
}

void slr_model_free(slr_model* model) { delete model; }

slr_status slr_run(const char* config_json, const slr_dataset* ds, const char* run_dir,
                   char** report_json_out) {
    if (slr_status st = require(ds && run_dir, "ds/run_dir")) return st;
    return guarded([&] {
        slr::SLRConfig cfg = parse_config(config_json);
        slr::TrainRun run = slr::run_slr(ds->manifest, cfg, run_dir);
        if (report_json_out) *report_json_out = dup_string(slr::train_run_report_json(cfg, run));
    });
}

slr_status slr_train_warmup(const char* config_json, const slr_dataset* ds, const char* run_dir,
                            slr_model** model_out) {
    if (slr_status st = require(ds && run_dir, "ds/run_dir")) return st;
    return guarded([&] {
        slr::SLRConfig cfg = parse_config(config_json);
        std::vector<slr::Scene> train =
            slr::load_split(ds->manifest, ds->manifest.train, cfg.labels, cfg.threads);
        std::vector<slr::EpochLoss> log;
        slr::ModelParams params = slr::train_warmup(train, cfg, cfg.warmup_epochs, &log);
        fs::create_directories(fs::path(run_dir) / "checkpoints");
        std::ofstream cfg_out(fs::path(run_dir) / "config.json");
        cfg_out << slr::slr_config_to_json(cfg) << "\n";
        slr::save_checkpoint((fs::path(run_dir) / "checkpoints" / "stage-0.slrt").string(), params);
        if (model_out) *model_out = new slr_model{std::move(params)};
    });
}

slr_status slr_generate_pseudo(const char* config_json, const slr_dataset* ds,
                               const slr_model* model, const char* out_dir,
                               char** summary_json_out) {
    if (slr_status st = require(ds && model && out_dir, "ds/model/out_dir")) return st;
    return guarded([&] {
        slr::SLRConfig cfg = parse_config(config_json);
        std::vector<slr::Scene> train =
            slr::load_split(ds->manifest, ds->manifest.train, cfg.labels, cfg.threads);
        slr::PseudoGenResult result =
            slr::generate_pseudo_dataset(model->params, train, cfg, out_dir);
        if (summary_json_out) {
            json j;
            j["images"] = train.size();
            j["skipped"] = result.skipped;
            *summary_json_out = dup_string(j.dump(2));
        }
    });
}

slr_status slr_train_retrain(const char* config_json, const slr_dataset* ds,
                             const char* pseudo_dir, const char* run_dir, slr_model** model_out) {
    if (slr_status st = require(ds && pseudo_dir && run_dir, "ds/pseudo_dir/run_dir")) return st;
    return guarded([&] {
        slr::SLRConfig cfg = parse_config(config_json);
        std::vector<slr::Scene> train =
            slr::load_split(ds->manifest, ds->manifest.train, cfg.labels, cfg.threads);
        slr::PseudoGenResult cache = slr::load_pseudo_cache(pseudo_dir, train);
        std::vector<slr::EpochLoss> log;
        slr::ModelParams params = slr::train_retrain(train, cache, cfg, 1, &log);
        fs::create_directories(fs::path(run_dir) / "checkpoints");
        slr::save_checkpoint((fs::path(run_dir) / "checkpoints" / "stage-1.slrt").string(), params);
        if (model_out) *model_out = new slr_model{std::move(params)};
    });
}

slr_status slr_evaluate(const char* config_json, const slr_dataset* ds, const slr_model* model,
                        char** metrics_json_out) {
    if (slr_status st = require(ds && model, "ds/model")) return st;
    return guarded([&] {
        slr::SLRConfig cfg = parse_config(config_json);
        std::vector<slr::Scene> test =
            slr::load_split(ds->manifest, ds->manifest.test, cfg.labels, cfg.threads);
        slr::MetricsReport report = slr::evaluate(model->params, test, cfg.eval, cfg.threads);
        if (metrics_json_out) *metrics_json_out = dup_string(slr::metrics_to_json(report));
    });
}

slr_status slr_evaluate_oracle(const char* config_json, const slr_dataset* ds,
                               char** metrics_json_out) {
    if (slr_status st = require(ds != nullptr, "ds")) return st;
    return guarded([&] {
        slr::SLRConfig cfg = parse_config(config_json);
        std::vector<slr::Scene> test =
            slr::load_split(ds->manifest, ds->manifest.test, cfg.labels, cfg.threads);
        std::vector<slr::Grid<uint8_t>> preds;
        preds.reserve(test.size());
        for (const auto& s : test) preds.push_back(s.dense_gt);
        slr::MetricsReport report = slr::evaluate_predictions(test, preds, cfg.eval);
        if (metrics_json_out) *metrics_json_out = dup_string(slr::metrics_to_json(report));
    });
}

slr_status slr_ablate(const char* config_json, const slr_dataset* ds, const char* seeds_csv,
                      const char* variants_csv, const char* out_dir, char** csv_path_out) {
    if (slr_status st = require(ds && out_dir, "ds/out_dir")) return st;
    return guarded([&] {
        slr::SLRConfig cfg = parse_config(config_json);
        slr::AblationOptions options;
        if (seeds_csv && *seeds_csv) {
            options.seeds.clear();
            std::stringstream ss(seeds_csv);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                if (!tok.empty()) options.seeds.push_back(std::stoull(tok));
            }
        }
        if (variants_csv && *variants_csv) {
            options.variants.clear();
            std::stringstream ss(variants_csv);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                if (!tok.empty()) {
                    slr::ablation_by_name(tok);  // validates the name
                    options.variants.push_back(tok);
                }
            }
        }
        std::string path = slr::run_ablation_table(ds->manifest, cfg, options, out_dir);
        if (csv_path_out) *csv_path_out = dup_string(path);
    });
}

}  // extern "C"
