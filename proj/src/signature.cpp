#include "bondtca/error.hpp"
#include "bondtca/impact.hpp"

#include <cmath>

namespace bondtca {

void empirical_signature(const std::vector<double>& x, std::size_t l_max, std::vector<double>& d,
                         std::vector<double>& se) {
    if (x.size() <= l_max + 1) throw DataError("signature plot needs more than " + std::to_string(l_max + 1) + " mids");
    d.assign(l_max, 0.0);
    se.assign(l_max, 0.0);
    for (std::size_t l = 1; l <= l_max; ++l) {
        const std::size_t m = x.size() - l;
        double sum = 0.0;
        for (std::size_t t = 0; t < m; ++t) {
            const double dx = x[t + l] - x[t];
            sum += dx * dx;
        }
        const double dl = static_cast<double>(l);
        d[l - 1] = sum / static_cast<double>(m) / dl;

        // non-overlapping windows
        std::size_t blocks = 0;
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t t = 0; t + l < x.size(); t += l) {
            const double dx = x[t + l] - x[t];
            const double q = dx * dx;
            s1 += q;
            s2 += q * q;
            ++blocks;
        }
        if (blocks > 1) {
            const double mean = s1 / static_cast<double>(blocks);
            const double var = std::max(0.0, (s2 - static_cast<double>(blocks) * mean * mean) / static_cast<double>(blocks - 1));
            se[l - 1] = std::sqrt(var / static_cast<double>(blocks)) / dl;
        }
    }
}

namespace {

// w(m) = G(m) - G(m - l), zero once both sides sit on the plateau.
std::vector<double> window_weights(const ImpactKernel& k, std::size_t t, std::size_t l) {
    std::vector<double> w(k.n + l);
    for (std::size_t m = 0; m < w.size(); ++m) w[m] = k.at(t, m) - (m >= l ? k.at(t, m - l) : 0.0);
    return w;
}

}  // namespace

std::vector<double> model_signature_tim1(const ImpactKernel& kernel, const std::vector<double>& c, std::size_t l_max) {
    if (c.size() < kernel.n + l_max) throw DataError("signature: correlations must cover lag N + l_max - 1");
    std::vector<double> out(l_max);
    for (std::size_t l = 1; l <= l_max; ++l) {
        const auto w = window_weights(kernel, 0, l);
        double q = 0.0;
        for (std::size_t m = 0; m < w.size(); ++m) {
            if (w[m] == 0.0) continue;
            for (std::size_t m2 = 0; m2 < w.size(); ++m2) {
                const std::size_t lag = m > m2 ? m - m2 : m2 - m;
                q += w[m] * w[m2] * c[lag];
            }
        }
        out[l - 1] = q / static_cast<double>(l);
    }
    return out;
}

std::vector<double> model_signature_tim2(const ImpactKernel& kernel, const TypedMoments& m, std::size_t l_max) {
    if (kernel.types.size() != 2) throw DataError("TIM2 signature needs a two-type kernel");
    const long need = static_cast<long>(kernel.n + l_max) - 1;
    if (static_cast<long>(m.offset) < need || static_cast<long>(m.max_lag) < need) {
        throw DataError("signature: typed moments must cover lags +-(N + l_max - 1)");
    }
    std::vector<double> out(l_max);
    for (std::size_t l = 1; l <= l_max; ++l) {
        const std::vector<double> w[2] = {window_weights(kernel, 0, l), window_weights(kernel, 1, l)};
        double q = 0.0;
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                for (std::size_t i = 0; i < w[a].size(); ++i) {
                    if (w[a][i] == 0.0) continue;
                    for (std::size_t j = 0; j < w[b].size(); ++j) {
                        q += w[a][i] * w[b][j] * m.gamma(a, b, static_cast<long>(i) - static_cast<long>(j));
                    }
                }
            }
        }
        out[l - 1] = q / static_cast<double>(l);
    }
    return out;
}

double fit_d_const(const std::vector<double>& d_emp, const std::vector<double>& raw) {
    if (d_emp.size() != raw.size() || d_emp.empty()) throw DataError("signature: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) s += d_emp[i] - raw[i];
    return s / static_cast<double>(raw.size());
}

SignaturePlot make_signature(const std::vector<double>& d_emp, const std::vector<double>& se,
                             const std::vector<double>& raw) {
    SignaturePlot p;
    p.d_emp = d_emp;
    p.se = se;
    p.d_const = fit_d_const(d_emp, raw);
    p.d_model.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) p.d_model[i] = raw[i] + p.d_const;
    return p;
}

std::size_t band_violations(const SignaturePlot& plot, double z) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < plot.d_emp.size(); ++i) {
        if (std::abs(plot.d_model[i] - plot.d_emp[i]) > z * plot.se[i]) ++n;
    }
    return n;
}

double squared_deviation(const SignaturePlot& plot) {
    double s = 0.0;
    for (std::size_t i = 0; i < plot.d_emp.size(); ++i) s += (plot.d_model[i] - plot.d_emp[i]) * (plot.d_model[i] - plot.d_emp[i]);
    return s;
}

}  // namespace bondtca
