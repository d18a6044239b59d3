// slr: command line front end for the scaffolding training pipeline.
// Talks to the core exclusively through the C API in slr/capi.h.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "slr/capi.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int fail(slr_status st, const std::string& what) {
    std::cerr << "error (" << slr_status_name(st) << ") in " << what << ": " << slr_last_error()
              << "\n";
    return static_cast<int>(st);
}

std::string take_string(char* s) {
    std::string out = s ? s : "";
    slr_string_free(s);
    return out;
}

// --threads, falling back to the SLR_THREADS environment variable.
int resolve_threads_flag(int threads, bool flag_given) {
    if (flag_given) return threads;
    if (const char* env = std::getenv("SLR_THREADS")) {
        try {
            return std::stoi(env);
        } catch (...) {
            return threads;
        }
    }
    return threads;
}

std::string manifest_path_of(const std::string& dataset) {
    if (fs::is_directory(dataset)) return (fs::path(dataset) / "manifest.json").string();
    return dataset;
}

struct DatasetGuard {
    slr_dataset* ds = nullptr;
    ~DatasetGuard() { slr_dataset_close(ds); }
};

struct ModelGuard {
    slr_model* model = nullptr;
    ~ModelGuard() { slr_model_free(model); }
};

bool parse_dims(const std::string& text, int& h, int& w) {
    const size_t sep = text.find('x');
    if (sep == std::string::npos) return false;
    try {
        h = std::stoi(text.substr(0, sep));
        w = std::stoi(text.substr(sep + 1));
    } catch (...) {
        return false;
    }
    return h > 0 && w > 0;
}

json base_config(const std::string& config_file) {
    if (config_file.empty()) return json::object();
    std::ifstream in(config_file);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + config_file);
    json j;
    in >> j;
    return j;
}

void write_file(const std::string& path, const std::string& text) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::trunc);
    out << text << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scaffolded weak-supervision training for marine obstacle segmentation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(slr_version()));

    // ---- gen-data ------------------------------------------------------
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    uint64_t gd_seed = 7;
    int gd_train = 8, gd_test = 4;
    std::string gd_out, gd_dims = "96x128";
    double gd_reflections = 0.8;
    bool gd_force = false;
    gen->add_option("--seed", gd_seed, "Root seed");
    gen->add_option("--n-train", gd_train, "Training scenes")->check(CLI::PositiveNumber);
    gen->add_option("--n-test", gd_test, "Test scenes")->check(CLI::PositiveNumber);
    gen->add_option("--out", gd_out, "Output directory")->required();
    gen->add_option("--dims", gd_dims, "Scene dims as HxW (default 96x128)");
    gen->add_option("--reflections", gd_reflections, "Obstacle reflection probability");
    gen->add_flag("--force", gd_force, "Overwrite an existing dataset");

    // ---- shared run flags ----------------------------------------------
    std::string rs_dataset, rs_out, rs_ablation = "none", rs_config_file;
    uint64_t rs_seed = 1;
    int rs_iterations = 1, rs_threads = 1;
    int rs_warmup_epochs = -1, rs_retrain_epochs = -1;
    bool rs_no_augmentation = false;

    auto add_run_flags = [&](CLI::App* cmd, bool with_pipeline_flags) {
        cmd->add_option("--dataset", rs_dataset, "Dataset directory or manifest path")->required();
        cmd->add_option("--out", rs_out, "Run directory")->required();
        cmd->add_option("--seed", rs_seed, "Run seed");
        cmd->add_option("--threads", rs_threads, "Worker threads (0 = hardware)");
        cmd->add_option("--config", rs_config_file, "JSON config file with overrides");
        if (with_pipeline_flags) {
            cmd->add_option("--ablation", rs_ablation, "Variant: none, C, F, RT, PL, DW");
            cmd->add_option("--iterations", rs_iterations, "Re-training iterations");
            cmd->add_option("--epochs-warmup", rs_warmup_epochs, "Warm-up epochs override");
            cmd->add_option("--epochs-retrain", rs_retrain_epochs, "Re-training epochs override");
            cmd->add_flag("--no-augmentation", rs_no_augmentation, "Disable image augmentation");
        }
    };

    auto* runslr = app.add_subcommand("run-slr", "Run the full three-step pipeline");
    add_run_flags(runslr, true);

    auto* warmup = app.add_subcommand("warmup", "Train the warm-up stage only");
    add_run_flags(warmup, true);

    // ---- pseudo ----------------------------------------------------------
    auto* pseudo = app.add_subcommand("pseudo", "Estimate dense pseudo labels from a checkpoint");
    std::string ps_dataset, ps_checkpoint, ps_out, ps_ablation = "none", ps_config_file;
    int ps_threads = 1;
    pseudo->add_option("--dataset", ps_dataset)->required();
    pseudo->add_option("--checkpoint", ps_checkpoint)->required();
    pseudo->add_option("--out", ps_out, "Pseudo-label cache directory")->required();
    pseudo->add_option("--ablation", ps_ablation, "Variant: none, C, F");
    pseudo->add_option("--threads", ps_threads);
    pseudo->add_option("--config", ps_config_file);

    // ---- retrain ---------------------------------------------------------
    auto* retrain = app.add_subcommand("retrain", "Re-train from a pseudo-label cache");
    std::string rt_dataset, rt_pseudo, rt_out, rt_config_file;
    uint64_t rt_seed = 1;
    int rt_threads = 1, rt_epochs = -1;
    retrain->add_option("--dataset", rt_dataset)->required();
    retrain->add_option("--pseudo", rt_pseudo, "Pseudo-label cache directory")->required();
    retrain->add_option("--out", rt_out, "Run directory")->required();
    retrain->add_option("--seed", rt_seed);
    retrain->add_option("--threads", rt_threads);
    retrain->add_option("--epochs-retrain", rt_epochs);
    retrain->add_option("--config", rt_config_file);

    // ---- eval ------------------------------------------------------------
    auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    std::string ev_dataset, ev_checkpoint, ev_out, ev_config_file;
    double ev_tau = -1.0, ev_radius = -1.0;
    int ev_threads = 1;
    bool ev_oracle = false;
    evalc->add_option("--dataset", ev_dataset)->required();
    evalc->add_option("--checkpoint", ev_checkpoint, "Checkpoint (omit with --oracle-pred)");
    evalc->add_option("--out", ev_out, "Report directory (optional)");
    evalc->add_option("--tau-cov", ev_tau, "Coverage threshold override");
    evalc->add_option("--danger-radius", ev_radius, "Danger zone radius override, meters");
    evalc->add_flag("--oracle-pred", ev_oracle, "Score ground truth against itself");
    evalc->add_option("--threads", ev_threads);
    evalc->add_option("--config", ev_config_file);

    // ---- ablate ------------------------------------------------------------
    auto* ablate = app.add_subcommand("ablate", "Run the ablation table");
    std::string ab_dataset, ab_out, ab_seeds = "1,2,3", ab_variants = "none,C,F,RT,PL,DW",
                ab_config_file;
    int ab_threads = 1;
    ablate->add_option("--dataset", ab_dataset)->required();
    ablate->add_option("--out", ab_out)->required();
    ablate->add_option("--seeds", ab_seeds, "Comma-separated seed list");
    ablate->add_option("--variants", ab_variants, "Comma-separated variant list");
    ablate->add_option("--threads", ab_threads);
    ablate->add_option("--config", ab_config_file);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            int h = 0, w = 0;
            if (!parse_dims(gd_dims, h, w)) {
                std::cerr << "error: --dims must look like 96x128\n";
                return SLR_ERR_CONFIG;
            }
            json params;
            params["dims"] = {h, w};
            params["reflection_prob"] = gd_reflections;
            char* manifest = nullptr;
            slr_status st = slr_generate_dataset(params.dump().c_str(), gd_seed, gd_train, gd_test,
                                                 gd_out.c_str(), gd_force ? 1 : 0, &manifest);
            if (st != SLR_OK) return fail(st, "gen-data");
            std::cout << take_string(manifest) << "\n";
            return 0;
        }

        if (runslr->parsed() || warmup->parsed()) {
            json cfg = base_config(rs_config_file);
            cfg["seed"] = rs_seed;
            const bool threads_given =
                runslr->count("--threads") > 0 || warmup->count("--threads") > 0;
            cfg["threads"] = resolve_threads_flag(rs_threads, threads_given);
            cfg["ablation"] = rs_ablation;
            cfg["iterations"] = rs_iterations;
            if (rs_warmup_epochs > 0) cfg["warmup_epochs"] = rs_warmup_epochs;
            if (rs_retrain_epochs > 0) cfg["retrain_epochs"] = rs_retrain_epochs;
            if (rs_no_augmentation) cfg["augmentation"] = false;

            DatasetGuard ds;
            slr_status st = slr_dataset_open(manifest_path_of(rs_dataset).c_str(), &ds.ds);
            if (st != SLR_OK) return fail(st, "dataset");

            if (runslr->parsed()) {
                char* report = nullptr;
                st = slr_run(cfg.dump().c_str(), ds.ds, rs_out.c_str(), &report);
                if (st != SLR_OK) return fail(st, "run-slr");
                const std::string text = take_string(report);
                json j = json::parse(text);
                std::cout << j["final_metrics"].dump(2) << "\n";
            } else {
                ModelGuard model;
                st = slr_train_warmup(cfg.dump().c_str(), ds.ds, rs_out.c_str(), &model.model);
                if (st != SLR_OK) return fail(st, "warmup");
                char* metrics = nullptr;
                st = slr_evaluate(cfg.dump().c_str(), ds.ds, model.model, &metrics);
                if (st != SLR_OK) return fail(st, "eval");
                const std::string text = take_string(metrics);
                write_file((fs::path(rs_out) / "report.json").string(), text);
                std::cout << text << "\n";
            }
            return 0;
        }

        if (pseudo->parsed()) {
            json cfg = base_config(ps_config_file);
            cfg["ablation"] = ps_ablation;
            cfg["threads"] = ps_threads;
            DatasetGuard ds;
            slr_status st = slr_dataset_open(manifest_path_of(ps_dataset).c_str(), &ds.ds);
            if (st != SLR_OK) return fail(st, "dataset");
            ModelGuard model;
            st = slr_model_load(ps_checkpoint.c_str(), &model.model);
            if (st != SLR_OK) return fail(st, "checkpoint");
            char* summary = nullptr;
            st = slr_generate_pseudo(cfg.dump().c_str(), ds.ds, model.model, ps_out.c_str(),
                                     &summary);
            if (st != SLR_OK) return fail(st, "pseudo");
            std::cout << take_string(summary) << "\n";
            return 0;
        }

        if (retrain->parsed()) {
            json cfg = base_config(rt_config_file);
            cfg["seed"] = rt_seed;
            cfg["threads"] = rt_threads;
            if (rt_epochs > 0) cfg["retrain_epochs"] = rt_epochs;
            DatasetGuard ds;
            slr_status st = slr_dataset_open(manifest_path_of(rt_dataset).c_str(), &ds.ds);
            if (st != SLR_OK) return fail(st, "dataset");
            ModelGuard model;
            st = slr_train_retrain(cfg.dump().c_str(), ds.ds, rt_pseudo.c_str(), rt_out.c_str(),
                                   &model.model);
            if (st != SLR_OK) return fail(st, "retrain");
            char* metrics = nullptr;
            st = slr_evaluate(cfg.dump().c_str(), ds.ds, model.model, &metrics);
            if (st != SLR_OK) return fail(st, "eval");
            const std::string text = take_string(metrics);
            write_file((fs::path(rt_out) / "report.json").string(), text);
            std::cout << text << "\n";
            return 0;
        }

        if (evalc->parsed()) {
            json cfg = base_config(ev_config_file);
            cfg["threads"] = ev_threads;
            if (ev_tau > 0.0) cfg["eval"]["tau_cov"] = ev_tau;
            if (ev_radius > 0.0) cfg["eval"]["danger_radius"] = ev_radius;
            DatasetGuard ds;
            slr_status st = slr_dataset_open(manifest_path_of(ev_dataset).c_str(), &ds.ds);
            if (st != SLR_OK) return fail(st, "dataset");
            char* metrics = nullptr;
            if (ev_oracle) {
                st = slr_evaluate_oracle(cfg.dump().c_str(), ds.ds, &metrics);
            } else {
                if (ev_checkpoint.empty()) {
                    std::cerr << "error: --checkpoint is required without --oracle-pred\n";
                    return SLR_ERR_CONFIG;
                }
                ModelGuard model;
                st = slr_model_load(ev_checkpoint.c_str(), &model.model);
                if (st != SLR_OK) return fail(st, "checkpoint");
                st = slr_evaluate(cfg.dump().c_str(), ds.ds, model.model, &metrics);
            }
            if (st != SLR_OK) return fail(st, "eval");
            const std::string text = take_string(metrics);
            if (!ev_out.empty()) write_file((fs::path(ev_out) / "report.json").string(), text);
            std::cout << text << "\n";
            return 0;
        }

        if (ablate->parsed()) {
            json cfg = base_config(ab_config_file);
            cfg["threads"] = ab_threads;
            DatasetGuard ds;
            slr_status st = slr_dataset_open(manifest_path_of(ab_dataset).c_str(), &ds.ds);
            if (st != SLR_OK) return fail(st, "dataset");
            char* csv = nullptr;
            st = slr_ablate(cfg.dump().c_str(), ds.ds, ab_seeds.c_str(), ab_variants.c_str(),
                            ab_out.c_str(), &csv);
            if (st != SLR_OK) return fail(st, "ablate");
            std::cout << take_string(csv) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return SLR_ERR_RUNTIME;
    }
    return 0;
}
