#include "mmccd/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace mmccd::eval {

namespace {

void require_same_shape(const BoolImage& a, const BoolImage& b) {
    if (a.h != b.h || a.w != b.w) throw std::invalid_argument("metrics: image shape mismatch");
}

// Parabola lower envelope over f(q) = min_v (q-v)^2 + src[v] (Felzenszwalb-
// Huttenlocher). Exact for 0/far inputs: the winning value is an integer
// evaluated directly, never through the envelope crossings.
constexpr double kFar = 1e20;

void dt1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
          std::vector<double>& z, int n) {
    int k = 0;
    v[0] = 0;
    z[0] = -kFar;
    z[1] = kFar;
    auto cross = [&](int q, int p) {
        return ((f[static_cast<size_t>(q)] + static_cast<double>(q) * q) -
                (f[static_cast<size_t>(p)] + static_cast<double>(p) * p)) /
               (2.0 * q - 2.0 * p);
    };
    for (int q = 1; q < n; ++q) {
        double s = cross(q, v[k]);
        while (s <= z[k]) {
            --k;
            s = cross(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kFar;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double dq = static_cast<double>(q) - v[k];
        d[static_cast<size_t>(q)] = dq * dq + f[static_cast<size_t>(v[k])];
    }
}

}  // namespace

OverlapCounts overlap(const BoolImage& pred, const BoolImage& gt) {
    require_same_shape(pred, gt);
    OverlapCounts c;
    for (size_t i = 0; i < pred.v.size(); ++i) {
        bool p = pred.v[i] != 0, g = gt.v[i] != 0;
        if (p && g)
            ++c.tp;
        else if (p)
            ++c.fp;
        else if (g)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

double dice(const BoolImage& pred, const BoolImage& gt) {
    auto c = overlap(pred, gt);
    size_t den = c.pred() + c.gt();
    if (den == 0) return 1.0;
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(den);
}

std::optional<double> jaccard(const BoolImage& pred, const BoolImage& gt) {
    auto c = overlap(pred, gt);
    size_t uni = c.tp + c.fp + c.fn;
    if (uni == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(uni);
}

std::optional<double> precision(const BoolImage& pred, const BoolImage& gt) {
    auto c = overlap(pred, gt);
    if (c.pred() == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(c.pred());
}

std::optional<double> recall(const BoolImage& pred, const BoolImage& gt) {
    auto c = overlap(pred, gt);
    if (c.gt() == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(c.gt());
}

std::optional<double> auc_pooled(std::vector<std::pair<double, uint8_t>> pool) {
    size_t np = 0, nn = 0;
    for (const auto& [s, lab] : pool) {
        if (!std::isfinite(s)) throw std::invalid_argument("auc: non-finite score");
        (lab != 0 ? np : nn)++;
    }
    if (np == 0 || nn == 0) return std::nullopt;
    std::sort(pool.begin(), pool.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    // acc = 2*wins + ties, all integers, so the division result is bit-identical
    // to the O(n^2) pair-count form.
    unsigned long long acc = 0;
    size_t neg_below = 0, i = 0;
    while (i < pool.size()) {
        size_t j = i, pg = 0, ng = 0;
        while (j < pool.size() && pool[j].first == pool[i].first) {
            (pool[j].second != 0 ? pg : ng)++;
            ++j;
        }
        acc += 2ull * pg * neg_below + 1ull * pg * ng;
        neg_below += ng;
        i = j;
    }
    return static_cast<double>(acc) /
           (2.0 * static_cast<double>(np) * static_cast<double>(nn));
}

std::vector<double> squared_edt(const BoolImage& features) {
    int h = features.h, w = features.w;
    if (h <= 0 || w <= 0) throw std::invalid_argument("squared_edt: empty image");
    std::vector<double> g(static_cast<size_t>(h) * w);
    int n = std::max(h, w);
    std::vector<double> f(static_cast<size_t>(n)), d(static_cast<size_t>(n));
    std::vector<double> z(static_cast<size_t>(n) + 1);
    std::vector<int> v(static_cast<size_t>(n));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y)
            f[static_cast<size_t>(y)] = features.at(y, x) != 0 ? 0.0 : kFar;
        dt1d(f, d, v, z, h);
        for (int y = 0; y < h; ++y) g[static_cast<size_t>(y) * w + x] = d[static_cast<size_t>(y)];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[static_cast<size_t>(x)] = g[static_cast<size_t>(y) * w + x];
        dt1d(f, d, v, z, w);
        for (int x = 0; x < w; ++x) g[static_cast<size_t>(y) * w + x] = d[static_cast<size_t>(x)];
    }
    return g;
}

BoolImage boundary_image(const BoolImage& a) {
    BoolImage b(a.h, a.w);
    auto unset = [&](int y, int x) {
        return y < 0 || y >= a.h || x < 0 || x >= a.w || a.at(y, x) == 0;
    };
    for (int y = 0; y < a.h; ++y)
        for (int x = 0; x < a.w; ++x)
            if (a.at(y, x) != 0 &&
                (unset(y - 1, x) || unset(y + 1, x) || unset(y, x - 1) || unset(y, x + 1)))
                b.at(y, x) = 1;
    return b;
}

std::optional<double> assd(const BoolImage& pred, const BoolImage& gt) {
    require_same_shape(pred, gt);
    if (pred.count() == 0 || gt.count() == 0) return std::nullopt;
    BoolImage bp = boundary_image(pred), bg = boundary_image(gt);
    std::vector<double> to_gt = squared_edt(bg), to_pred = squared_edt(bp);
    double sum_pg = 0.0, sum_gp = 0.0;
    size_t n_p = 0, n_g = 0;
    for (size_t i = 0; i < bp.v.size(); ++i) {
        if (bp.v[i]) {
            sum_pg += std::sqrt(to_gt[i]);
            ++n_p;
        }
        if (bg.v[i]) {
            sum_gp += std::sqrt(to_pred[i]);
            ++n_g;
        }
    }
    return 0.5 * (sum_pg / static_cast<double>(n_p) + sum_gp / static_cast<double>(n_g));
}

BoolImage apply_threshold(const Tensor& score, double threshold) {
    if (score.n != 1 || score.c != 1)
        throw std::invalid_argument("apply_threshold: expected single-channel image, got " +
                                    score.shape_str());
    BoolImage out(score.h, score.w);
    for (size_t i = 0; i < score.v.size(); ++i)
        out.v[i] = static_cast<double>(score.v[i]) > threshold ? 1 : 0;
    return out;
}

MetricsReport evaluate_slices(const std::vector<Tensor>& scores,
                              const std::vector<BoolImage>& gts, double threshold,
                              std::string config_echo) {
    if (scores.size() != gts.size())
        throw std::invalid_argument("evaluate_slices: score/gt count mismatch");
    if (scores.empty()) throw std::invalid_argument("evaluate_slices: no slices");
    MetricsReport r;
    r.n_slices = static_cast<int>(scores.size());
    r.threshold = threshold;
    r.config_echo = std::move(config_echo);
    std::vector<std::pair<double, uint8_t>> pool;
    double dsum = 0.0, jsum = 0.0, psum = 0.0, rsum = 0.0, asum = 0.0;
    int jn = 0, pn = 0, rn = 0, an = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        const Tensor& s = scores[i];
        const BoolImage& g = gts[i];
        if (s.h != g.h || s.w != g.w)
            throw std::invalid_argument("evaluate_slices: score/gt shape mismatch");
        BoolImage pred = apply_threshold(s, threshold);
        dsum += dice(pred, g);
        if (auto v = jaccard(pred, g)) {
            jsum += *v;
            ++jn;
        } else
            ++r.jaccard_excluded;
        if (auto v = precision(pred, g)) {
            psum += *v;
            ++pn;
        } else
            ++r.precision_excluded;
        if (auto v = recall(pred, g)) {
            rsum += *v;
            ++rn;
        } else
            ++r.recall_excluded;
        if (auto v = assd(pred, g)) {
            asum += *v;
            ++an;
        } else
            ++r.assd_excluded;
        pool.reserve(pool.size() + s.v.size());
        for (size_t k = 0; k < s.v.size(); ++k)
            pool.emplace_back(static_cast<double>(s.v[k]), g.v[k]);
    }
    r.dice = dsum / static_cast<double>(scores.size());
    r.auc = auc_pooled(std::move(pool));
    if (jn) r.jaccard = jsum / jn;
    if (pn) r.precision = psum / pn;
    if (rn) r.recall = rsum / rn;
    if (an) r.assd = asum / an;
    return r;
}

namespace {

std::string cell(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

}  // namespace

std::string format_report_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    const char* cols[] = {"DICE", "AUC", "Jac", "Prec", "Rec", "ASSD"};
    size_t name_w = 6;
    for (const auto& [name, rep] : rows) name_w = std::max(name_w, name.size());
    std::string out = "method";
    out.append(name_w - 6 + 2, ' ');
    for (const char* c : cols) {
        out += c;
        out.append(8 - std::string(c).size(), ' ');
    }
    out += "\n";
    for (const auto& [name, rep] : rows) {
        out += name;
        out.append(name_w - name.size() + 2, ' ');
        std::string cells[] = {cell(rep.dice),      cell(rep.auc),    cell(rep.jaccard),
                               cell(rep.precision), cell(rep.recall), cell(rep.assd)};
        for (const auto& c : cells) {
            out += c;
            out.append(c.size() < 8 ? 8 - c.size() : 1, ' ');
        }
        out += "\n";
    }
    return out;
}

std::string report_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["n_slices"] = r.n_slices;
    j["threshold"] = r.threshold;
    j["dice"] = r.dice;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v)
            j[key] = *v;
        else
            j[key] = nullptr;
    };
    put("auc", r.auc);
    put("jaccard", r.jaccard);
    put("precision", r.precision);
    put("recall", r.recall);
    put("assd", r.assd);
    j["excluded"] = {{"jaccard", r.jaccard_excluded},
                     {"precision", r.precision_excluded},
                     {"recall", r.recall_excluded},
                     {"assd", r.assd_excluded}};
    j["config"] = r.config_echo;
    return j.dump(2);
}

MetricsReport report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    MetricsReport r;
    r.n_slices = j.at("n_slices").get<int>();
    r.threshold = j.at("threshold").get<double>();
    r.dice = j.at("dice").get<double>();
    auto get = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return j.at(key).get<double>();
    };
    r.auc = get("auc");
    r.jaccard = get("jaccard");
    r.precision = get("precision");
    r.recall = get("recall");
    r.assd = get("assd");
    if (j.contains("excluded")) {
        const auto& e = j.at("excluded");
        r.jaccard_excluded = e.value("jaccard", 0);
        r.precision_excluded = e.value("precision", 0);
        r.recall_excluded = e.value("recall", 0);
        r.assd_excluded = e.value("assd", 0);
    }
    r.config_echo = j.value("config", std::string());
    return r;
}

}  // namespace mmccd::eval
