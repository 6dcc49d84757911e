#include "agesched/ar_model.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <thread>

#include "agesched/common.hpp"
#include "agesched/stats.hpp"

namespace agesched {

namespace {

/// Largest modulus among the companion-matrix eigenvalues; < 1 iff all roots
/// of 1 - a_1 z - ... - a_p z^p lie strictly outside the unit circle.
double max_root_modulus(const std::vector<double>& a) {
    const int p = static_cast<int>(a.size());
    if (p == 0) return 0.0;
    if (p == 1) return std::abs(a[0]);
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j) companion(0, j) = a[static_cast<std::size_t>(j)];
    for (int i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
    double mmax = 0.0;
    for (int i = 0; i < p; ++i) mmax = std::max(mmax, std::abs(solver.eigenvalues()[i]));
    return mmax;
}

}  // namespace

void ARModel::validate() const {
    for (double a : coefficients) {
        if (!std::isfinite(a)) throw ValidationError("ar model: non-finite coefficient");
    }
    if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
        throw ValidationError("ar model: noise_variance must be > 0");
    }
    if (!(observation_noise_variance >= 0.0) || !std::isfinite(observation_noise_variance)) {
        throw ValidationError("ar model: observation_noise_variance must be >= 0");
    }
    const double m = max_root_modulus(coefficients);
    if (m >= 1.0) {
        throw ValidationError("ar model: non-stationary (max characteristic-root modulus " +
                              std::to_string(m) + " not strictly inside the unit circle)");
    }
}

std::vector<double> ar_autocovariance(const ARModel& model, int max_lag) {
    model.validate();
    if (max_lag < 0) throw ValidationError("ar_autocovariance: max_lag must be >= 0");

    const int p = model.order();
    const auto& a = model.coefficients;

    // Yule-Walker as a dense (p+1)x(p+1) system in r(0..p):
    //   r(0) - sum_j a_j r(j)      = sigma_W^2
    //   r(k) - sum_j a_j r(|k-j|)  = 0          for k = 1..p
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p + 1, p + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 1);
    m(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) m(0, j) -= a[static_cast<std::size_t>(j - 1)];
    rhs(0) = model.noise_variance;
    for (int k = 1; k <= p; ++k) {
        m(k, k) += 1.0;
        for (int j = 1; j <= p; ++j) m(k, std::abs(k - j)) -= a[static_cast<std::size_t>(j - 1)];
    }

    if (p > 0) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        const double smax = svd.singularValues()(0);
        const double smin = svd.singularValues()(svd.singularValues().size() - 1);
        if (!(smin > smax * 1e-12)) {
            throw SolverError("ar_autocovariance: singular Yule-Walker system (condition ~" +
                              std::to_string(smax / std::max(smin, 1e-300)) + ")");
        }
    }
    Eigen::VectorXd r0p = m.partialPivLu().solve(rhs);

    std::vector<double> r(static_cast<std::size_t>(std::max(max_lag, p)) + 1);
    for (int k = 0; k <= p; ++k) r[static_cast<std::size_t>(k)] = r0p(k);
    for (int k = p + 1; k <= std::max(max_lag, p); ++k) {
        double s = 0.0;
        for (int j = 1; j <= p; ++j) s += a[static_cast<std::size_t>(j - 1)] * r[static_cast<std::size_t>(k - j)];
        r[static_cast<std::size_t>(k)] = s;
    }
    r.resize(static_cast<std::size_t>(max_lag) + 1);

    if (!(r[0] > 0.0) || !std::isfinite(r[0])) {
        throw SolverError("ar_autocovariance: Yule-Walker produced non-positive variance");
    }
    for (std::size_t k = 1; k < r.size(); ++k) {
        if (!std::isfinite(r[k]) || std::abs(r[k]) > r[0] * (1.0 + 1e-6)) {
            throw SolverError("ar_autocovariance: inconsistent autocovariance at lag " +
                              std::to_string(k) + " (ill-conditioned model)");
        }
    }
    return r;
}

ErrorCurve inference_error_curve(const ARModel& model, int delta_max) {
    if (delta_max < 1) throw ValidationError("inference_error_curve: delta_max must be >= 1");
    const std::vector<double> r = ar_autocovariance(model, delta_max);
    if (!(r[0] > 0.0)) throw ValidationError("inference_error_curve: degenerate source, Var(X) = 0");
    std::vector<double> h(static_cast<std::size_t>(delta_max));
    for (int d = 1; d <= delta_max; ++d) {
        const double rd = r[static_cast<std::size_t>(d)];
        h[static_cast<std::size_t>(d - 1)] =
            r[0] + model.observation_noise_variance - rd * rd / r[0];
    }
    return ErrorCurve(std::move(h));
}

EmpiricalCurve empirical_error_curve(const ARModel& model, int delta_max,
                                     std::int64_t n_samples, std::uint64_t seed, int jobs) {
    model.validate();
    if (delta_max < 1) throw ValidationError("empirical_error_curve: delta_max must be >= 1");
    if (n_samples < 1000) throw ValidationError("empirical_error_curve: n_samples too small");
    jobs = std::max(1, jobs);

    const int p = model.order();
    std::vector<std::pair<int, double>> taps;  // nonzero (lag, coefficient)
    for (int j = 1; j <= p; ++j) {
        const double aj = model.coefficients[static_cast<std::size_t>(j - 1)];
        if (aj != 0.0) taps.emplace_back(j, aj);
    }
    const double sigma_w = std::sqrt(model.noise_variance);
    const double sigma_n = std::sqrt(model.observation_noise_variance);

    // Burn-in long enough for near-unit-root models to forget the zero start.
    const double root = max_root_modulus(model.coefficients);
    std::int64_t burn = 10'000;
    if (root > 0.0 && root < 1.0) {
        const double mix = 9.0 / -std::log(root);
        burn = std::clamp<std::int64_t>(static_cast<std::int64_t>(mix), 10'000, 5'000'000);
    }
    burn = std::max<std::int64_t>(burn, 4LL * p);

    constexpr int kBatches = 50;
    const std::int64_t batch_len = n_samples / kBatches;
    const std::int64_t n_used = batch_len * kBatches;
    const int lags = delta_max;

    // Per-batch, per-lag raw moments of (x, y) = (X_{t-d}, Y_t).
    struct Moments {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    };
    std::vector<Moments> mom(static_cast<std::size_t>(kBatches) * static_cast<std::size_t>(lags));

    Rng rng(seed);
    std::vector<double> hist(static_cast<std::size_t>(std::max(delta_max, p)), 0.0);

    auto step = [&](std::vector<double>& h) {
        // h holds the most recent values, h[h.size()-1] newest
        double x = sigma_w * rng.normal();
        for (auto [j, aj] : taps) x += aj * h[h.size() - static_cast<std::size_t>(j)];
        h.erase(h.begin());
        h.push_back(x);
        return x;
    };

    // Burn-in with a cheap ring approach: reuse hist as sliding window.
    for (std::int64_t t = 0; t < burn; ++t) step(hist);

    const std::size_t hlen = hist.size();
    std::vector<double> xbuf(hlen + static_cast<std::size_t>(batch_len));
    std::vector<double> ybuf(static_cast<std::size_t>(batch_len));
    std::copy(hist.begin(), hist.end(), xbuf.begin());

    for (int b = 0; b < kBatches; ++b) {
        // generate one batch of X and Y
        for (std::int64_t i = 0; i < batch_len; ++i) {
            double x = sigma_w * rng.normal();
            const std::size_t pos = hlen + static_cast<std::size_t>(i);
            for (auto [j, aj] : taps) x += aj * xbuf[pos - static_cast<std::size_t>(j)];
            xbuf[pos] = x;
        }
        for (std::int64_t i = 0; i < batch_len; ++i) {
            ybuf[static_cast<std::size_t>(i)] =
                xbuf[hlen + static_cast<std::size_t>(i)] + sigma_n * rng.normal();
        }

        auto accumulate_lags = [&](int d_first, int d_last) {
            for (int d = d_first; d <= d_last; ++d) {
                Moments acc;
                const double* xs = xbuf.data() + hlen - static_cast<std::size_t>(d);
                for (std::int64_t i = 0; i < batch_len; ++i) {
                    const double x = xs[i];
                    const double y = ybuf[static_cast<std::size_t>(i)];
                    acc.sx += x;
                    acc.sy += y;
                    acc.sxx += x * x;
                    acc.sxy += x * y;
                    acc.syy += y * y;
                }
                mom[static_cast<std::size_t>(b) * static_cast<std::size_t>(lags) +
                    static_cast<std::size_t>(d - 1)] = acc;
            }
        };
        if (jobs == 1 || lags == 1) {
            accumulate_lags(1, lags);
        } else {
            std::vector<std::thread> workers;
            const int per = (lags + jobs - 1) / jobs;
            for (int w = 0; w < jobs; ++w) {
                const int lo = 1 + w * per;
                const int hi = std::min(lags, lo + per - 1);
                if (lo > hi) break;
                workers.emplace_back(accumulate_lags, lo, hi);
            }
            for (auto& w : workers) w.join();
        }

        // carry the trailing window into the next batch
        std::copy(xbuf.end() - static_cast<std::ptrdiff_t>(hlen), xbuf.end(), xbuf.begin());
    }

    EmpiricalCurve out;
    out.samples = n_used;
    out.mse.resize(static_cast<std::size_t>(lags));
    out.std_error.resize(static_cast<std::size_t>(lags));
    const double n = static_cast<double>(n_used);
    const double nb = static_cast<double>(batch_len);
    for (int d = 1; d <= lags; ++d) {
        Moments g;
        for (int b = 0; b < kBatches; ++b) {
            const Moments& mb = mom[static_cast<std::size_t>(b) * static_cast<std::size_t>(lags) +
                                    static_cast<std::size_t>(d - 1)];
            g.sx += mb.sx;
            g.sy += mb.sy;
            g.sxx += mb.sxx;
            g.sxy += mb.sxy;
            g.syy += mb.syy;
        }
        const double mx = g.sx / n, my = g.sy / n;
        const double vx = g.sxx / n - mx * mx;
        const double cxy = g.sxy / n - mx * my;
        const double slope = cxy / vx;
        const double icept = my - slope * mx;

        // per-batch mean squared residual of the globally fitted predictor
        std::vector<double> batch_mse(kBatches);
        for (int b = 0; b < kBatches; ++b) {
            const Moments& mb = mom[static_cast<std::size_t>(b) * static_cast<std::size_t>(lags) +
                                    static_cast<std::size_t>(d - 1)];
            const double ss = mb.syy - 2.0 * slope * mb.sxy - 2.0 * icept * mb.sy +
                              slope * slope * mb.sxx + 2.0 * slope * icept * mb.sx +
                              nb * icept * icept;
            batch_mse[static_cast<std::size_t>(b)] = ss / nb;
        }
        RunningStat s;
        for (double v : batch_mse) s.push(v);
        out.mse[static_cast<std::size_t>(d - 1)] = s.mean();
        out.std_error[static_cast<std::size_t>(d - 1)] = s.std_error();
    }
    return out;
}

}  // namespace agesched
