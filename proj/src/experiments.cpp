#include "slr/experiments.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "slr/errors.hpp"
#include "slr/trainer.hpp"

namespace slr {

namespace fs = std::filesystem;

double median(std::vector<double> values) {
    if (values.empty()) throw ConfigError("median of an empty list");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string run_ablation_table(const DatasetManifest& manifest, const SLRConfig& base,
                               const AblationOptions& options, const std::string& out_dir) {
    if (options.seeds.empty()) throw ConfigError("ablation needs at least one seed");
    fs::create_directories(fs::path(out_dir) / "runs");

    struct Row {
        std::string variant;
        uint64_t seed;
        MetricsReport metrics;
    };
    std::vector<Row> rows;
    for (const auto& variant : options.variants) {
        for (uint64_t seed : options.seeds) {
            SLRConfig cfg = base;
            cfg.ablation = ablation_by_name(variant);
            cfg.seed = seed;
            const std::string run_dir =
                (fs::path(out_dir) / "runs" / (variant + "-s" + std::to_string(seed))).string();
            TrainRun run = run_slr(manifest, cfg, run_dir);
            rows.push_back({variant, seed, run.stages.back().metrics});
        }
    }

    auto collect = [&](const std::string& variant, auto&& get) {
        std::vector<double> v;
        for (const auto& r : rows)
            if (r.variant == variant) v.push_back(get(r.metrics));
        return v;
    };

    std::ostringstream os;
    os.precision(6);
    os << "variant,seed,a_w,pr,re,f1,danger_pr,danger_re,danger_f1,fp,danger_fp\n";
    for (const auto& r : rows) {
        os << r.variant << "," << r.seed << "," << r.metrics.a_w << "," << r.metrics.overall_scores.pr
           << "," << r.metrics.overall_scores.re << "," << r.metrics.overall_scores.f1 << ","
           << r.metrics.danger_scores.pr << "," << r.metrics.danger_scores.re << ","
           << r.metrics.danger_scores.f1 << "," << r.metrics.overall.fp << ","
           << r.metrics.danger.fp << "\n";
    }
    std::map<std::string, std::map<std::string, double>> med;
    for (const auto& variant : options.variants) {
        auto a_w = collect(variant, [](const MetricsReport& m) { return m.a_w; });
        if (a_w.empty()) continue;
        med[variant]["a_w"] = median(a_w);
        med[variant]["pr"] = median(collect(variant, [](const MetricsReport& m) { return m.overall_scores.pr; }));
        med[variant]["re"] = median(collect(variant, [](const MetricsReport& m) { return m.overall_scores.re; }));
        med[variant]["f1"] = median(collect(variant, [](const MetricsReport& m) { return m.overall_scores.f1; }));
        med[variant]["danger_pr"] = median(collect(variant, [](const MetricsReport& m) { return m.danger_scores.pr; }));
        med[variant]["danger_re"] = median(collect(variant, [](const MetricsReport& m) { return m.danger_scores.re; }));
        med[variant]["danger_f1"] = median(collect(variant, [](const MetricsReport& m) { return m.danger_scores.f1; }));
        med[variant]["fp"] = median(collect(variant, [](const MetricsReport& m) { return static_cast<double>(m.overall.fp); }));
        med[variant]["danger_fp"] = median(collect(variant, [](const MetricsReport& m) { return static_cast<double>(m.danger.fp); }));
        os << variant << ",median," << med[variant]["a_w"] << "," << med[variant]["pr"] << ","
           << med[variant]["re"] << "," << med[variant]["f1"] << "," << med[variant]["danger_pr"]
           << "," << med[variant]["danger_re"] << "," << med[variant]["danger_f1"] << ","
           << med[variant]["fp"] << "," << med[variant]["danger_fp"] << "\n";
    }

    // Directional summary rows (pass/fail in the seed column).
    auto have = [&](const std::string& v) { return med.count(v) > 0; };
    if (have("none") && have("RT")) {
        const bool fp_ok = med["none"]["fp"] <= 0.7 * med["RT"]["fp"];
        const bool pr_ok = med["none"]["danger_pr"] > med["RT"]["danger_pr"];
        os << "check:retrain_reduces_fp," << (fp_ok ? "pass" : "fail") << "," << med["none"]["fp"]
           << "," << med["RT"]["fp"] << ",,,,,,,\n";
        os << "check:retrain_improves_danger_pr," << (pr_ok ? "pass" : "fail") << ","
           << med["none"]["danger_pr"] << "," << med["RT"]["danger_pr"] << ",,,,,,,\n";
    }
    if (have("none") && have("F")) {
        const bool f1_ok = med["none"]["f1"] >= med["F"]["f1"];
        os << "check:features_beat_predictions," << (f1_ok ? "pass" : "fail") << ","
           << med["none"]["f1"] << "," << med["F"]["f1"] << ",,,,,,,\n";
    }

    const std::string csv_path = (fs::path(out_dir) / "ablation.csv").string();
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + csv_path);
    out << os.str();
    if (!out) throw IoError("write failed on " + csv_path);
    return csv_path;
}

}  // namespace slr
