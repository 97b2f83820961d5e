#include "facetrait/kernel_svm.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <memory>
#include <numeric>
#include <unordered_map>

#include "facetrait/rng.hpp"
#include "facetrait/simd/ops.hpp"

namespace facetrait {

double KernelSpec::resolved_scale(std::size_t dimension) const {
    if (scale > 0.0) return scale;
    return std::sqrt(static_cast<double>(dimension));
}

namespace {

double kernel_eval_scaled(const KernelSpec& spec, double sigma, std::span<const float> x,
                          std::span<const float> y) {
    double s2 = sigma * sigma;
    switch (spec.kind) {
        case KernelKind::Linear:
            return simd::dot_f32(x.data(), y.data(), x.size()) / s2;
        case KernelKind::Polynomial: {
            double base = 1.0 + simd::dot_f32(x.data(), y.data(), x.size()) / s2;
            double v = base;
            for (int i = 1; i < spec.degree; ++i) v *= base;
            return v;
        }
        case KernelKind::Gaussian:
            return std::exp(-simd::sqdist_f32(x.data(), y.data(), x.size()) / s2);
    }
    throw ContractError("unknown kernel kind");
}

// LRU cache of full kernel rows; always admits at least two rows so a pair
// update can hold both of its rows alive.
class KernelRowCache {
  public:
    using Row = std::shared_ptr<const std::vector<double>>;

    KernelRowCache(const std::vector<std::span<const float>>& points, const KernelSpec& spec,
                   double sigma, std::size_t cache_bytes)
        : points_(points), spec_(spec), sigma_(sigma) {
        std::size_t row_bytes = points.size() * sizeof(double);
        capacity_ = std::max<std::size_t>(2, row_bytes ? cache_bytes / row_bytes : 2);
    }

    Row get(std::size_t i) {
        if (auto it = map_.find(i); it != map_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second.second);
            return it->second.first;
        }
        auto row = std::make_shared<std::vector<double>>(points_.size());
        for (std::size_t j = 0; j < points_.size(); ++j) {
            double v = kernel_eval_scaled(spec_, sigma_, points_[i], points_[j]);
            if (!std::isfinite(v))
                throw NumericError("non-finite kernel value for pair (" + std::to_string(i) +
                                   "," + std::to_string(j) + ")");
            (*row)[j] = v;
        }
        if (map_.size() >= capacity_) {
            map_.erase(lru_.back());
            lru_.pop_back();
        }
        lru_.push_front(i);
        map_.emplace(i, std::make_pair(Row(row), lru_.begin()));
        return row;
    }

  private:
    const std::vector<std::span<const float>>& points_;
    KernelSpec spec_;
    double sigma_;
    std::size_t capacity_;
    std::list<std::size_t> lru_;
    std::unordered_map<std::size_t, std::pair<Row, std::list<std::size_t>::iterator>> map_;
};

struct SmoState {
    std::vector<std::span<const float>> x;
    std::vector<double> y;      // +-1
    std::vector<double> alpha;
    std::vector<double> error;  // E_i = f(x_i) - y_i
    double b = 0.0;
    double C = 1.0;
    double tol = 1e-3;
    KernelRowCache* cache = nullptr;

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        double a1 = alpha[i1], a2 = alpha[i2];
        double y1 = y[i1], y2 = y[i2];
        double e1 = error[i1], e2 = error[i2];
        double s = y1 * y2;

        double lo, hi;
        if (s < 0) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(C, C + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - C);
            hi = std::min(C, a1 + a2);
        }
        if (lo >= hi) return false;

        auto row1 = cache->get(i1);
        auto row2 = cache->get(i2);
        double k11 = (*row1)[i1], k12 = (*row1)[i2], k22 = (*row2)[i2];
        double eta = k11 + k22 - 2.0 * k12;

        double a2_new;
        if (eta > 0.0) {
            a2_new = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
        } else {
            // degenerate curvature (eta == 0 up to rounding): the dual change
            // along the pair direction is
            //   dW(t) = y2*(E1-E2)*(t - a2) - eta/2*(t - a2)^2,
            // maximal at an interval endpoint.
            auto delta_w = [&](double t) {
                double d = t - a2;
                return y2 * (e1 - e2) * d - 0.5 * eta * d * d;
            };
            double lo_gain = delta_w(lo), hi_gain = delta_w(hi);
            if (lo_gain > hi_gain + 1e-12)
                a2_new = lo;
            else if (hi_gain > lo_gain + 1e-12)
                a2_new = hi;
            else
                a2_new = a2;
        }
        if (std::abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12)) return false;

        double a1_new = a1 + s * (a2 - a2_new);
        // snap near-bound values so support pruning is clean
        auto snap = [this](double a) {
            if (a < 1e-12) return 0.0;
            if (a > C - 1e-12) return C;
            return a;
        };
        a1_new = snap(a1_new);
        a2_new = snap(a2_new);

        double d1 = y1 * (a1_new - a1);
        double d2 = y2 * (a2_new - a2);
        double b1 = b - e1 - d1 * k11 - d2 * k12;
        double b2 = b - e2 - d1 * k12 - d2 * k22;
        double b_new;
        if (a1_new > 0.0 && a1_new < C)
            b_new = b1;
        else if (a2_new > 0.0 && a2_new < C)
            b_new = b2;
        else
            b_new = 0.5 * (b1 + b2);

        double db = b_new - b;
        for (std::size_t k = 0; k < error.size(); ++k)
            error[k] += d1 * (*row1)[k] + d2 * (*row2)[k] + db;

        alpha[i1] = a1_new;
        alpha[i2] = a2_new;
        b = b_new;
        return true;
    }

    bool examine(std::size_t i2, Rng& rng) {
        double y2 = y[i2], a2 = alpha[i2], e2 = error[i2];
        double r2 = e2 * y2;
        if (!((r2 < -tol && a2 < C) || (r2 > tol && a2 > 0.0))) return false;

        std::size_t n = alpha.size();
        // second choice: maximize |E1 - E2| over non-bound multipliers
        std::size_t best = n;
        double best_gap = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (alpha[i] > 0.0 && alpha[i] < C) {
                double gap = std::abs(error[i] - e2);
                if (gap > best_gap) {
                    best_gap = gap;
                    best = i;
                }
            }
        }
        if (best < n && take_step(best, i2)) return true;

        std::size_t start = static_cast<std::size_t>(rng.uniform_index(n));
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t i = (start + k) % n;
            if (alpha[i] > 0.0 && alpha[i] < C && take_step(i, i2)) return true;
        }
        start = static_cast<std::size_t>(rng.uniform_index(n));
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t i = (start + k) % n;
            if (take_step(i, i2)) return true;
        }
        return false;
    }

    double dual_objective(KernelRowCache& cache_ref) {
        double lin = std::accumulate(alpha.begin(), alpha.end(), 0.0);
        double quad = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (alpha[i] == 0.0) continue;
            auto row = cache_ref.get(i);
            for (std::size_t j = 0; j < alpha.size(); ++j)
                if (alpha[j] != 0.0) quad += alpha[i] * alpha[j] * y[i] * y[j] * (*row)[j];
        }
        return lin - 0.5 * quad;
    }
};

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const float> x, std::span<const float> y) {
    if (x.size() != y.size()) throw ContractError("kernel_eval dimension mismatch");
    return kernel_eval_scaled(spec, spec.resolved_scale(x.size()), x, y);
}

SvmModel smo_train(const EmbeddingDataset& data, KernelSpec spec, const SmoParams& params) {
    if (data.size() < 2) throw TrainingError("SVM training needs at least 2 records");
    if (data.count(GenderLabel::Female) == 0 || data.count(GenderLabel::Male) == 0)
        throw TrainingError("SVM training needs both classes present");

    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(params.seed);
    if (params.subsample > 0 && data.size() > params.subsample) {
        rng.shuffle(idx);
        idx.resize(params.subsample);
        std::sort(idx.begin(), idx.end());
        bool has[2] = {false, false};
        for (auto i : idx) has[static_cast<int>(data.label(i))] = true;
        if (!has[0] || !has[1]) throw TrainingError("subsample lost one class entirely");
    }

    SmoState st;
    st.C = params.C;
    st.tol = params.tol;
    st.x.reserve(idx.size());
    st.y.reserve(idx.size());
    for (auto i : idx) {
        st.x.push_back(data.features(i));
        st.y.push_back(data.label(i) == GenderLabel::Male ? 1.0 : -1.0);
    }
    std::size_t n = st.x.size();
    st.alpha.assign(n, 0.0);
    st.error = st.y;
    for (auto& e : st.error) e = -e;  // f = 0 initially

    double sigma = spec.resolved_scale(data.dimension());
    KernelSpec resolved = spec;
    resolved.scale = sigma;
    KernelRowCache cache(st.x, resolved, sigma, params.cache_bytes);
    st.cache = &cache;

    bool examine_all = true;
    int idle_sweeps = 0;
    while (idle_sweeps < params.max_passes) {
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (examine_all || (st.alpha[i] > 0.0 && st.alpha[i] < st.C))
                changed += st.examine(i, rng) ? 1 : 0;
        }
        if (params.objective_trace) params.objective_trace->push_back(st.dual_objective(cache));
        if (examine_all) {
            idle_sweeps = changed == 0 ? idle_sweeps + 1 : 0;
            if (changed > 0) examine_all = false;
        } else if (changed == 0) {
            examine_all = true;
        }
    }

    SvmModel model;
    model.kernel = resolved;
    model.C = params.C;
    model.bias = st.b;
    model.dimension = data.dimension();
    for (std::size_t i = 0; i < n; ++i) {
        if (st.alpha[i] > 0.0) {
            model.support_vectors.emplace_back(st.x[i].begin(), st.x[i].end());
            model.support_labels.push_back(st.y[i]);
            model.alphas.push_back(st.alpha[i]);
        }
    }
    return model;
}

double svm_decision(const SvmModel& model, std::span<const float> x) {
    if (x.size() != model.dimension) throw ContractError("svm_decision dimension mismatch");
    double sigma = model.kernel.resolved_scale(model.dimension);
    double f = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
        f += model.alphas[i] * model.support_labels[i] *
             kernel_eval_scaled(model.kernel, sigma, model.support_vectors[i], x);
    return f;
}

GenderLabel svm_predict(const SvmModel& model, std::span<const float> x) {
    return svm_decision(model, x) > 0.0 ? GenderLabel::Male : GenderLabel::Female;
}

}  // namespace facetrait
