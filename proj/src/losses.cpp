#include "slr/losses.hpp"

#include <cmath>

#include "slr/errors.hpp"
#include "slr/pseudo_labels.hpp"

namespace slr {

namespace {

constexpr double kLogEps = 1e-8;
constexpr double kMassEps = 1e-6;

// dL/dlogit_k = p_k * (dL/dp_k - sum_c dL/dp_c * p_c)
Field<double> chain_softmax(const Field<double>& probs, const Field<double>& dprobs) {
    Field<double> dlogits(probs.height, probs.width, probs.channels, 0.0);
    for (int y = 0; y < probs.height; ++y) {
        for (int x = 0; x < probs.width; ++x) {
            const double* p = probs.px(y, x);
            const double* gp = dprobs.px(y, x);
            double* gz = dlogits.px(y, x);
            double dot = 0.0;
            for (int c = 0; c < probs.channels; ++c) dot += gp[c] * p[c];
            for (int c = 0; c < probs.channels; ++c) gz[c] = p[c] * (gp[c] - dot);
        }
    }
    return dlogits;
}

void add_scaled(Field<double>& dst, const Field<double>& src, double s) {
    if (src.data.empty()) return;
    if (dst.data.empty()) {
        dst = src;
        for (double& v : dst.data) v *= s;
        return;
    }
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += s * src.data[i];
}

}  // namespace

void validate_pairwise_config(const PairwiseConfig& cfg) {
    if (cfg.neighborhood.empty()) throw ConfigError("pairwise neighborhood must not be empty");
    for (const auto& [dy, dx] : cfg.neighborhood) {
        if (dy == 0 && dx == 0) throw ConfigError("pairwise neighborhood must exclude (0,0)");
    }
    if (!(cfg.tau_sim > 0.0 && cfg.tau_sim < 1.0)) throw ConfigError("tau_sim must be in (0,1)");
    if (!(cfg.theta_col > 0.0)) throw ConfigError("theta_col must be > 0");
}

LossValue focal_loss(const Field<double>& probs, const Field<double>& labels, double gamma) {
    if (!probs.same_shape(labels)) throw ShapeError("focal_loss: probs/labels shape mismatch");
    double mass = 0.0;
    for (double v : labels.data) mass += v;
    const double norm = std::max(mass, 1.0);

    Field<double> dprobs(probs.height, probs.width, probs.channels, 0.0);
    double value = 0.0;
    for (size_t i = 0; i < probs.data.size(); ++i) {
        const double y = labels.data[i];
        if (y == 0.0) continue;
        const double p = probs.data[i];
        const double q = 1.0 - p;
        const double lg = std::log(p + kLogEps);
        const double qg = std::pow(q, gamma);
        value -= y * qg * lg;
        double d = qg / (p + kLogEps);
        if (gamma != 0.0) d -= gamma * (q <= 0.0 ? 0.0 : std::pow(q, gamma - 1.0)) * lg;
        dprobs.data[i] = -y * d / norm;
    }
    LossValue out;
    out.value = value / norm;
    out.grad_logits = chain_softmax(probs, dprobs);
    return out;
}

LossValue pairwise_loss(const Field<double>& probs, const Field<double>& image,
                        const PairwiseConfig& cfg) {
    validate_pairwise_config(cfg);
    if (image.height != probs.height || image.width != probs.width) {
        throw ShapeError("pairwise_loss: image/probs shape mismatch");
    }
    const int H = probs.height, W = probs.width, C = probs.channels;
    Field<double> dprobs(H, W, C, 0.0);
    double value = 0.0;
    size_t edges = 0;

    for (const auto& [dy, dx] : cfg.neighborhood) {
        for (int y = 0; y < H; ++y) {
            const int yj = y + dy;
            if (yj < 0 || yj >= H) continue;
            for (int x = 0; x < W; ++x) {
                const int xj = x + dx;
                if (xj < 0 || xj >= W) continue;
                const double* ci = image.px(y, x);
                const double* cj = image.px(yj, xj);
                double dist2 = 0.0;
                for (int c = 0; c < image.channels; ++c) {
                    const double d = ci[c] - cj[c];
                    dist2 += d * d;
                }
                const double affinity = std::exp(-std::sqrt(dist2) / cfg.theta_col);
                if (affinity < cfg.tau_sim) continue;

                const double* pi = probs.px(y, x);
                const double* pj = probs.px(yj, xj);
                double agree = 0.0;
                for (int c = 0; c < C; ++c) agree += pi[c] * pj[c];
                value -= std::log(agree + kLogEps);
                ++edges;
                const double inv = -1.0 / (agree + kLogEps);
                double* gi = dprobs.px(y, x);
                double* gj = dprobs.px(yj, xj);
                for (int c = 0; c < C; ++c) {
                    gi[c] += inv * pj[c];
                    gj[c] += inv * pi[c];
                }
            }
        }
    }

    LossValue out;
    if (edges == 0) {
        out.grad_logits = Field<double>(H, W, C, 0.0);
        return out;
    }
    out.value = value / static_cast<double>(edges);
    for (double& v : dprobs.data) v /= static_cast<double>(edges);
    out.grad_logits = chain_softmax(probs, dprobs);
    return out;
}

LossValue projection_loss(const Field<double>& probs, const std::vector<ObstacleBox>& boxes) {
    const int H = probs.height, W = probs.width;
    LossValue out;
    out.grad_logits = Field<double>(H, W, probs.channels, 0.0);
    if (boxes.empty()) return out;

    Field<double> dprobs(H, W, probs.channels, 0.0);
    double value = 0.0;

    // Dice loss of a projection vector against all-ones, plus its gradient.
    auto dice_vs_ones = [](const std::vector<double>& a, std::vector<double>& da) {
        double s1 = 0.0, s2 = 0.0;
        for (double v : a) {
            s1 += v;
            s2 += v * v;
        }
        const double n = static_cast<double>(a.size());
        const double den = s2 + n + kLogEps;
        const double num = 2.0 * s1 + kLogEps;
        da.resize(a.size());
        for (size_t k = 0; k < a.size(); ++k) {
            da[k] = -(2.0 * den - num * 2.0 * a[k]) / (den * den);
        }
        return 1.0 - num / den;
    };

    for (const auto& b : boxes) {
        if (b.x0 < 0 || b.y0 < 0 || b.x1 > W || b.y1 > H || b.x0 >= b.x1 || b.y0 >= b.y1) {
            throw ValidationError("projection_loss: box " + std::to_string(b.id) + " out of range");
        }
        const int bh = b.y1 - b.y0, bw = b.x1 - b.x0;
        std::vector<double> row_proj(bh, -1.0), col_proj(bw, -1.0);
        std::vector<int> row_arg(bh, 0), col_arg(bw, 0);
        for (int y = 0; y < bh; ++y) {
            for (int x = 0; x < bw; ++x) {
                const double p = probs.at(b.y0 + y, b.x0 + x, kObstacle);
                if (p > row_proj[y]) {
                    row_proj[y] = p;
                    row_arg[y] = x;
                }
                if (p > col_proj[x]) {
                    col_proj[x] = p;
                    col_arg[x] = y;
                }
            }
        }
        std::vector<double> drow, dcol;
        const double l_row = dice_vs_ones(row_proj, drow);
        const double l_col = dice_vs_ones(col_proj, dcol);
        value += 0.5 * (l_row + l_col);
        for (int y = 0; y < bh; ++y) dprobs.at(b.y0 + y, b.x0 + row_arg[y], kObstacle) += 0.5 * drow[y];
        for (int x = 0; x < bw; ++x) dprobs.at(b.y0 + col_arg[x], b.x0 + x, kObstacle) += 0.5 * dcol[x];
    }

    const double inv_n = 1.0 / static_cast<double>(boxes.size());
    out.value = value * inv_n;
    for (double& v : dprobs.data) v *= inv_n;
    out.grad_logits = chain_softmax(probs, dprobs);
    return out;
}

LossValue water_separation_loss(const Field<double>& features, const Field<double>& labels_ds) {
    if (labels_ds.height != features.height || labels_ds.width != features.width ||
        labels_ds.channels != kNumClasses) {
        throw ShapeError("water_separation_loss: labels must be [h,w,3] on the feature grid");
    }
    const int n = features.height * features.width;
    const int C = features.channels;

    LossValue out;
    out.grad_features = Field<double>(features.height, features.width, C, 0.0);

    double wmass = 0.0, omass = 0.0;
    for (int i = 0; i < n; ++i) {
        wmass += labels_ds.data[static_cast<size_t>(i) * kNumClasses + kWater];
        omass += labels_ds.data[static_cast<size_t>(i) * kNumClasses + kObstacle];
    }
    if (wmass <= kMassEps || omass <= kMassEps) return out;

    double total = 0.0;
    for (int ch = 0; ch < C; ++ch) {
        double mu_w = 0.0, mu_o = 0.0;
        for (int i = 0; i < n; ++i) {
            const double f = features.data[static_cast<size_t>(i) * C + ch];
            mu_w += labels_ds.data[static_cast<size_t>(i) * kNumClasses + kWater] * f;
            mu_o += labels_ds.data[static_cast<size_t>(i) * kNumClasses + kObstacle] * f;
        }
        mu_w /= wmass;
        mu_o /= omass;
        double var_w = 0.0, var_o = 0.0;
        for (int i = 0; i < n; ++i) {
            const double f = features.data[static_cast<size_t>(i) * C + ch];
            const double dw = f - mu_w, dob = f - mu_o;
            var_w += labels_ds.data[static_cast<size_t>(i) * kNumClasses + kWater] * dw * dw;
            var_o += labels_ds.data[static_cast<size_t>(i) * kNumClasses + kObstacle] * dob * dob;
        }
        var_w /= wmass;
        var_o /= omass;

        const double a = var_w + var_o + kLogEps;
        const double sep = (mu_w - mu_o) * (mu_w - mu_o);
        const double b = sep + var_w + var_o + kLogEps;
        total += a / b;

        const double inv_b2 = 1.0 / (b * b);
        for (int i = 0; i < n; ++i) {
            const double wi = labels_ds.data[static_cast<size_t>(i) * kNumClasses + kWater];
            const double oi = labels_ds.data[static_cast<size_t>(i) * kNumClasses + kObstacle];
            if (wi == 0.0 && oi == 0.0) continue;
            const double f = features.data[static_cast<size_t>(i) * C + ch];
            const double da = 2.0 * (wi * (f - mu_w) / wmass + oi * (f - mu_o) / omass);
            const double dsep = 2.0 * (mu_w - mu_o) * (wi / wmass - oi / omass);
            out.grad_features.data[static_cast<size_t>(i) * C + ch] +=
                (da * sep - a * dsep) * inv_b2 / C;
        }
    }
    out.value = total / C;
    return out;
}

LossValue warmup_loss(const Field<double>& probs, const Field<double>& image,
                      const Field<double>& partial_labels, const std::vector<ObstacleBox>& boxes,
                      const LossWeights& weights, const PairwiseConfig& pcfg, LossTerms* terms) {
    LossValue foc = focal_loss(probs, partial_labels, weights.gamma);
    LossValue pair = pairwise_loss(probs, image, pcfg);
    LossValue proj = projection_loss(probs, boxes);

    LossValue out;
    out.value = foc.value + weights.lambda1 * pair.value + weights.lambda2 * proj.value;
    out.grad_logits = std::move(foc.grad_logits);
    add_scaled(out.grad_logits, pair.grad_logits, weights.lambda1);
    add_scaled(out.grad_logits, proj.grad_logits, weights.lambda2);
    if (terms) {
        terms->focal = foc.value;
        terms->pairwise = pair.value;
        terms->projection = proj.value;
        terms->separation = 0.0;
        terms->total = out.value;
    }
    return out;
}

LossValue retrain_loss(const Field<double>& probs, const Field<double>& features,
                       const Field<double>& image, const Field<double>& pseudo_labels,
                       const LossWeights& weights, const PairwiseConfig& pcfg, LossTerms* terms) {
    LossValue foc = focal_loss(probs, pseudo_labels, weights.gamma);
    LossValue pair = pairwise_loss(probs, image, pcfg);
    const int stride = probs.height / features.height;
    LossValue ws = water_separation_loss(features, downsample_probs(pseudo_labels, stride));

    LossValue out;
    out.value = foc.value + weights.lambda1 * pair.value + weights.lambda3 * ws.value;
    out.grad_logits = std::move(foc.grad_logits);
    add_scaled(out.grad_logits, pair.grad_logits, weights.lambda1);
    out.grad_features = std::move(ws.grad_features);
    for (double& v : out.grad_features.data) v *= weights.lambda3;
    if (terms) {
        terms->focal = foc.value;
        terms->pairwise = pair.value;
        terms->projection = 0.0;
        terms->separation = ws.value;
        terms->total = out.value;
    }
    return out;
}

}  // namespace slr
