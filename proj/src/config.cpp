#include "slr/config.hpp"

#include <json.hpp>

#include "slr/errors.hpp"

namespace slr {

using nlohmann::json;

AblationFlags ablation_by_name(const std::string& name) {
    AblationFlags f;
    if (name == "none" || name.empty()) return f;
    if (name == "C") {
        f.no_consolidation = true;
    } else if (name == "F") {
        f.no_features = true;
    } else if (name == "RT") {
        f.no_retrain = true;
    } else if (name == "PL") {
        f.no_pairwise = true;
    } else if (name == "DW") {
        f.dense_warmup = true;
    } else {
        throw ConfigError("unknown ablation '" + name + "' (valid: none, C, F, RT, PL, DW)");
    }
    return f;
}

std::string ablation_name(const AblationFlags& f) {
    if (f.no_consolidation) return "C";
    if (f.no_features) return "F";
    if (f.no_retrain) return "RT";
    if (f.no_pairwise) return "PL";
    if (f.dense_warmup) return "DW";
    return "none";
}

void validate_slr_config(const SLRConfig& cfg) {
    if (cfg.warmup_epochs <= 0) throw ConfigError("warmup_epochs must be > 0");
    if (cfg.retrain_epochs <= 0) throw ConfigError("retrain_epochs must be > 0");
    if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.threads < 0) throw ConfigError("threads must be >= 0");
    if (!(cfg.lr > 0.0)) throw ConfigError("lr must be > 0");
    validate_label_config(cfg.labels);
    validate_pseudo_config(cfg.pseudo);
    validate_pairwise_config(cfg.pairwise);
    validate_net_config(cfg.net);
    validate_eval_config(cfg.eval);
}

std::string slr_config_to_json(const SLRConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["warmup_epochs"] = cfg.warmup_epochs;
    j["retrain_epochs"] = cfg.retrain_epochs;
    j["iterations"] = cfg.iterations;
    j["batch_size"] = cfg.batch_size;
    j["augmentation"] = cfg.augmentation;
    j["threads"] = cfg.threads;
    j["lr"] = cfg.lr;
    j["poly_power"] = cfg.poly_power;
    j["ablation"] = {{"no_consolidation", cfg.ablation.no_consolidation},
                     {"no_features", cfg.ablation.no_features},
                     {"no_retrain", cfg.ablation.no_retrain},
                     {"no_pairwise", cfg.ablation.no_pairwise},
                     {"dense_warmup", cfg.ablation.dense_warmup}};
    j["labels"] = {{"beta_w", cfg.labels.beta_w}, {"theta_w", cfg.labels.theta_w}};
    j["pseudo"] = {{"beta_s", cfg.pseudo.beta_s}, {"w", cfg.pseudo.w}};
    json neigh = json::array();
    for (const auto& [dy, dx] : cfg.pairwise.neighborhood) neigh.push_back({dy, dx});
    j["loss"] = {{"gamma", cfg.loss.gamma},
                 {"lambda1", cfg.loss.lambda1},
                 {"lambda2", cfg.loss.lambda2},
                 {"lambda3", cfg.loss.lambda3},
                 {"pairwise", {{"tau_sim", cfg.pairwise.tau_sim},
                               {"theta_col", cfg.pairwise.theta_col},
                               {"neighborhood", neigh}}}};
    j["net"] = {{"input_channels", cfg.net.input_channels},
                {"widths", cfg.net.widths},
                {"feature_stride", cfg.net.feature_stride},
                {"classes", cfg.net.classes}};
    j["optim"] = {{"rho", cfg.optim.rho}, {"momentum", cfg.optim.momentum}, {"eps", cfg.optim.eps}};
    j["eval"] = {{"tau_cov", cfg.eval.tau_cov},
                 {"min_component_area", cfg.eval.min_component_area},
                 {"danger_radius", cfg.eval.danger_radius}};
    return j.dump(2);
}

SLRConfig slr_config_from_json(const std::string& text) {
    json j;
    try {
        j = text.empty() ? json::object() : json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    SLRConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.warmup_epochs = j.value("warmup_epochs", cfg.warmup_epochs);
        cfg.retrain_epochs = j.value("retrain_epochs", cfg.retrain_epochs);
        cfg.iterations = j.value("iterations", cfg.iterations);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.augmentation = j.value("augmentation", cfg.augmentation);
        cfg.threads = j.value("threads", cfg.threads);
        cfg.lr = j.value("lr", cfg.lr);
        cfg.poly_power = j.value("poly_power", cfg.poly_power);
        if (j.contains("ablation")) {
            const json& a = j["ablation"];
            if (a.is_string()) {
                cfg.ablation = ablation_by_name(a.get<std::string>());
            } else {
                cfg.ablation.no_consolidation = a.value("no_consolidation", false);
                cfg.ablation.no_features = a.value("no_features", false);
                cfg.ablation.no_retrain = a.value("no_retrain", false);
                cfg.ablation.no_pairwise = a.value("no_pairwise", false);
                cfg.ablation.dense_warmup = a.value("dense_warmup", false);
            }
        }
        if (j.contains("labels")) {
            cfg.labels.beta_w = j["labels"].value("beta_w", cfg.labels.beta_w);
            cfg.labels.theta_w = j["labels"].value("theta_w", cfg.labels.theta_w);
        }
        if (j.contains("pseudo")) {
            cfg.pseudo.beta_s = j["pseudo"].value("beta_s", cfg.pseudo.beta_s);
            cfg.pseudo.w = j["pseudo"].value("w", cfg.pseudo.w);
        }
        if (j.contains("loss")) {
            const json& l = j["loss"];
            cfg.loss.gamma = l.value("gamma", cfg.loss.gamma);
            cfg.loss.lambda1 = l.value("lambda1", cfg.loss.lambda1);
            cfg.loss.lambda2 = l.value("lambda2", cfg.loss.lambda2);
            cfg.loss.lambda3 = l.value("lambda3", cfg.loss.lambda3);
            if (l.contains("pairwise")) {
                const json& p = l["pairwise"];
                cfg.pairwise.tau_sim = p.value("tau_sim", cfg.pairwise.tau_sim);
                cfg.pairwise.theta_col = p.value("theta_col", cfg.pairwise.theta_col);
                if (p.contains("neighborhood")) {
                    cfg.pairwise.neighborhood.clear();
                    for (const auto& o : p["neighborhood"]) {
                        cfg.pairwise.neighborhood.emplace_back(o.at(0).get<int>(),
                                                               o.at(1).get<int>());
                    }
                }
            }
        }
        if (j.contains("net")) {
            const json& n = j["net"];
            cfg.net.input_channels = n.value("input_channels", cfg.net.input_channels);
            if (n.contains("widths")) {
                auto w = n["widths"].get<std::vector<int>>();
                if (w.size() != 3) throw ConfigError("net.widths must have 3 entries");
                std::copy(w.begin(), w.end(), cfg.net.widths.begin());
            }
            cfg.net.feature_stride = n.value("feature_stride", cfg.net.feature_stride);
            cfg.net.classes = n.value("classes", cfg.net.classes);
        }
        if (j.contains("optim")) {
            cfg.optim.rho = j["optim"].value("rho", cfg.optim.rho);
            cfg.optim.momentum = j["optim"].value("momentum", cfg.optim.momentum);
            cfg.optim.eps = j["optim"].value("eps", cfg.optim.eps);
        }
        if (j.contains("eval")) {
            cfg.eval.tau_cov = j["eval"].value("tau_cov", cfg.eval.tau_cov);
            cfg.eval.min_component_area =
                j["eval"].value("min_component_area", cfg.eval.min_component_area);
            cfg.eval.danger_radius = j["eval"].value("danger_radius", cfg.eval.danger_radius);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    validate_slr_config(cfg);
    return cfg;
}

}  // namespace slr
