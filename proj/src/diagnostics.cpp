#include "spacefusion/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "spacefusion/errors.hpp"
#include "spacefusion/io.hpp"
#include "spacefusion/inference.hpp"

namespace spacefusion {

namespace {

double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.vec()[i] * b.vec()[i];
    return s;
}

double norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

double euclidean(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.vec()[i] - b.vec()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

Histogram direction_cosines(const SpaceFusionModel& model,
                            const std::vector<MultiRefSample>& samples,
                            std::size_t max_contexts) {
    Histogram h;
    h.bin_width = 0.02;
    h.counts.assign(static_cast<std::size_t>(std::lround(2.0 / h.bin_width)), 0);
    Rng unused(0);

    double sum = 0.0;
    std::size_t used = 0;
    for (const MultiRefSample& s : samples) {
        if (s.responses.size() < 2) continue;
        if (used == max_contexts) break;
        ++used;
        const Tensor zs = model.encode_context(s.context, false, unused);
        std::vector<Tensor> diffs;
        diffs.reserve(s.responses.size());
        for (const std::vector<int>& y : s.responses)
            diffs.push_back(sub(model.encode_response(y, false, unused), zs));
        for (std::size_t i = 0; i < diffs.size(); ++i)
            for (std::size_t j = i + 1; j < diffs.size(); ++j) {
                const double ni = norm(diffs[i]);
                const double nj = norm(diffs[j]);
                if (ni == 0.0 || nj == 0.0) {
                    ++h.n_skipped;
                    continue;
                }
                double c = dot(diffs[i], diffs[j]) / (ni * nj);
                c = std::clamp(c, -1.0, 1.0);
                sum += c;
                std::size_t bin = static_cast<std::size_t>(
                    std::floor((c + 1.0) / h.bin_width));
                if (bin >= h.counts.size()) bin = h.counts.size() - 1;
                ++h.counts[bin];
                ++h.n_values;
            }
    }
    h.mean = h.n_values ? sum / static_cast<double>(h.n_values) : 0.0;
    return h;
}

std::vector<double> default_u_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back(static_cast<double>(i) / 10.0);
    return g;
}

SweepCurve interpolation_perplexity(const SpaceFusionModel& model,
                                    const std::vector<MultiRefSample>& samples,
                                    const std::vector<double>& u_grid,
                                    std::size_t max_pairs) {
    if (u_grid.empty()) throw ConfigError("interpolation_perplexity: empty grid");
    SweepCurve c;
    c.u_grid = u_grid;
    c.mean_perplexity.assign(u_grid.size(), 0.0);
    Rng unused(0);

    for (const MultiRefSample& s : samples) {
        if (c.per_pair.size() == max_pairs) break;
        const Tensor zs = model.encode_context(s.context, false, unused);
        for (const std::vector<int>& y : s.responses) {
            if (c.per_pair.size() == max_pairs) break;
            const Tensor za = model.encode_response(y, false, unused);
            std::vector<double> row;
            row.reserve(u_grid.size());
            for (double u : u_grid) {
                const Tensor z = interpolate(zs, za, u);
                row.push_back(std::exp(-model.decode_mean_log_prob(z, y)));
            }
            c.per_pair.push_back(std::move(row));
        }
    }
    if (c.per_pair.empty())
        throw ConfigError("interpolation_perplexity: no (context, response) pairs");
    for (const std::vector<double>& row : c.per_pair)
        for (std::size_t g = 0; g < u_grid.size(); ++g)
            c.mean_perplexity[g] += row[g];
    for (double& v : c.mean_perplexity)
        v /= static_cast<double>(c.per_pair.size());
    return c;
}

std::vector<InterpRow> interpolation_table(const SpaceFusionModel& model,
                                           const Vocabulary& vocab,
                                           const std::vector<int>& context,
                                           const std::vector<int>& target,
                                           const std::vector<double>& u_grid) {
    if (u_grid.empty()) throw ConfigError("interpolation_table: empty grid");
    Rng unused(0);
    const Tensor zs = model.encode_context(context, false, unused);
    const Tensor za = model.encode_response(target, false, unused);
    std::vector<InterpRow> rows;
    for (double u : u_grid) {
        const Tensor z = interpolate(zs, za, u);
        std::string text = detokenize(greedy_decode(model, z), vocab);
        if (rows.empty() || rows.back().text != text)
            rows.push_back({u, std::move(text)});
    }
    return rows;
}

namespace {

// Symmetric 2x2 eigendecomposition, eigenvalues descending; v2 = rot90(v1).
void eig2(double a, double b, double c, double& l1, double& l2, double v1[2]) {
    const double half_tr = 0.5 * (a + c);
    const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    l1 = half_tr + disc;
    l2 = half_tr - disc;
    // (T - l1 I) v = 0: rows are (a-l1, b) and (b, c-l1); take the larger.
    double x1 = b, y1 = l1 - a;
    const double x2 = l1 - c, y2 = b;
    if (x2 * x2 + y2 * y2 > x1 * x1 + y1 * y1) {
        x1 = x2;
        y1 = y2;
    }
    double n = std::sqrt(x1 * x1 + y1 * y1);
    if (n == 0.0) {  // T already diagonal and degenerate
        x1 = 1.0;
        y1 = 0.0;
        n = 1.0;
    }
    v1[0] = x1 / n;
    v1[1] = y1 / n;
}

}  // namespace

std::vector<std::array<double, 2>> mds_2d(const std::vector<Tensor>& points) {
    const std::size_t m = points.size();
    if (m < 3) throw ConfigError("mds_2d: need at least 3 points");
    for (const Tensor& p : points)
        if (!p.same_shape(points.front()))
            throw ConfigError("mds_2d: mixed point dimensions");

    // Double-centered squared-distance matrix: B_ij equals the centered Gram
    // matrix -0.5 (D2_ij - rowmean_i - rowmean_j + grandmean).
    std::vector<double> d2(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const double e = euclidean(points[i], points[j]);
            d2[i * m + j] = d2[j * m + i] = e * e;
        }
    std::vector<double> rowmean(m, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) rowmean[i] += d2[i * m + j];
        rowmean[i] /= static_cast<double>(m);
        grand += rowmean[i];
    }
    grand /= static_cast<double>(m);
    std::vector<double> b(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            b[i * m + j] = -0.5 * (d2[i * m + j] - rowmean[i] - rowmean[j] + grand);

    // Two-column subspace iteration with a Rayleigh-Ritz rotation. B is PSD
    // up to roundoff, so the top-2 eigenpairs carry the whole embedding.
    std::vector<double> q(m * 2);
    Rng init(0x6d647332u);
    for (double& v : q) v = init.normal();

    auto multiply = [&](const std::vector<double>& in, std::vector<double>& out) {
        out.assign(m * 2, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double s0 = 0.0, s1 = 0.0;
            const double* brow = &b[i * m];
            for (std::size_t j = 0; j < m; ++j) {
                s0 += brow[j] * in[j * 2];
                s1 += brow[j] * in[j * 2 + 1];
            }
            out[i * 2] = s0;
            out[i * 2 + 1] = s1;
        }
    };
    auto orthonormalize = [&](std::vector<double>& v) {
        double n0 = 0.0;
        for (std::size_t i = 0; i < m; ++i) n0 += v[i * 2] * v[i * 2];
        n0 = std::sqrt(n0);
        if (n0 > 0.0)
            for (std::size_t i = 0; i < m; ++i) v[i * 2] /= n0;
        double proj = 0.0;
        for (std::size_t i = 0; i < m; ++i) proj += v[i * 2] * v[i * 2 + 1];
        for (std::size_t i = 0; i < m; ++i) v[i * 2 + 1] -= proj * v[i * 2];
        double n1 = 0.0;
        for (std::size_t i = 0; i < m; ++i) n1 += v[i * 2 + 1] * v[i * 2 + 1];
        n1 = std::sqrt(n1);
        if (n1 > 0.0)
            for (std::size_t i = 0; i < m; ++i) v[i * 2 + 1] /= n1;
    };

    orthonormalize(q);
    std::vector<double> z;
    double prev_l1 = 0.0, prev_l2 = 0.0;
    double l1 = 0.0, l2 = 0.0;
    double v1[2] = {1.0, 0.0};
    for (int iter = 0; iter < 20000; ++iter) {
        multiply(q, z);
        // Rayleigh-Ritz on the current subspace: T = Q^T B Q.
        double ta = 0.0, tb = 0.0, tc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            ta += q[i * 2] * z[i * 2];
            tb += q[i * 2] * z[i * 2 + 1];
            tc += q[i * 2 + 1] * z[i * 2 + 1];
        }
        eig2(ta, tb, tc, l1, l2, v1);
        q.swap(z);
        orthonormalize(q);
        const double scale = std::max({std::abs(l1), std::abs(l2), 1e-30});
        if (iter > 0 && std::abs(l1 - prev_l1) + std::abs(l2 - prev_l2) <
                            1e-14 * scale)
            break;
        prev_l1 = l1;
        prev_l2 = l2;
    }

    // Rotate the converged basis onto the Ritz vectors.
    multiply(q, z);
    double ta = 0.0, tb = 0.0, tc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        ta += q[i * 2] * z[i * 2];
        tb += q[i * 2] * z[i * 2 + 1];
        tc += q[i * 2 + 1] * z[i * 2 + 1];
    }
    eig2(ta, tb, tc, l1, l2, v1);
    const double v2[2] = {-v1[1], v1[0]};
    std::vector<double> e1(m), e2(m);
    for (std::size_t i = 0; i < m; ++i) {
        e1[i] = q[i * 2] * v1[0] + q[i * 2 + 1] * v1[1];
        e2[i] = q[i * 2] * v2[0] + q[i * 2 + 1] * v2[1];
    }

    const double tol = 1e-12 * std::max(std::abs(l1), 1.0);
    auto fix_sign = [&](std::vector<double>& e) {
        for (double x : e) {
            if (std::abs(x) > 1e-9) {
                if (x < 0.0)
                    for (double& y : e) y = -y;
                return;
            }
        }
    };
    fix_sign(e1);
    fix_sign(e2);

    std::vector<std::array<double, 2>> coords(m, {0.0, 0.0});
    if (l1 > tol) {
        const double s = std::sqrt(l1);
        for (std::size_t i = 0; i < m; ++i) coords[i][0] = s * e1[i];
    }
    if (l2 > tol) {
        const double s = std::sqrt(l2);
        for (std::size_t i = 0; i < m; ++i) coords[i][1] = s * e2[i];
    }
    return coords;
}

double silhouette_score(const std::vector<Tensor>& points,
                        const std::vector<int>& labels) {
    if (points.size() != labels.size() || points.size() < 2)
        throw ConfigError("silhouette_score: bad inputs");
    std::vector<int> distinct = labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());
    if (distinct.size() < 2)
        throw ConfigError("silhouette_score: need at least 2 clusters");

    const std::size_t n = points.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double a = 0.0;
        std::size_t a_count = 0;
        std::vector<double> b_sum(distinct.size(), 0.0);
        std::vector<std::size_t> b_count(distinct.size(), 0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = euclidean(points[i], points[j]);
            if (labels[j] == labels[i]) {
                a += d;
                ++a_count;
            } else {
                const std::size_t c = static_cast<std::size_t>(
                    std::lower_bound(distinct.begin(), distinct.end(),
                                     labels[j]) -
                    distinct.begin());
                b_sum[c] += d;
                ++b_count[c];
            }
        }
        if (a_count == 0) continue;  // singleton cluster contributes 0
        a /= static_cast<double>(a_count);
        double b = 0.0;
        bool have_b = false;
        for (std::size_t c = 0; c < distinct.size(); ++c) {
            if (b_count[c] == 0) continue;
            const double mean = b_sum[c] / static_cast<double>(b_count[c]);
            if (!have_b || mean < b) {
                b = mean;
                have_b = true;
            }
        }
        const double mx = std::max(a, b);
        if (mx > 0.0) total += (b - a) / mx;
    }
    return total / static_cast<double>(n);
}

FusionScatter fusion_scatter(const SpaceFusionModel& model,
                             const std::vector<MultiRefSample>& samples,
                             std::size_t max_pairs, std::uint64_t seed) {
    if (max_pairs < 2) throw ConfigError("fusion_scatter: max_pairs must be >= 2");
    std::vector<std::pair<const std::vector<int>*, const std::vector<int>*>>
        pairs;
    for (const MultiRefSample& s : samples)
        for (const std::vector<int>& y : s.responses)
            pairs.emplace_back(&s.context, &y);
    if (pairs.size() < 2)
        throw ConfigError("fusion_scatter: need at least 2 (context, response) pairs");

    if (pairs.size() > max_pairs) {
        Rng rng(seed);
        std::vector<std::size_t> perm = rng.permutation(pairs.size());
        perm.resize(max_pairs);
        std::sort(perm.begin(), perm.end());
        decltype(pairs) subset;
        subset.reserve(max_pairs);
        for (std::size_t idx : perm) subset.push_back(pairs[idx]);
        pairs.swap(subset);
    }

    Rng unused(0);
    const std::size_t p = pairs.size();
    std::vector<Tensor> points;
    points.reserve(2 * p);
    for (const auto& [ctx, resp] : pairs)
        points.push_back(model.encode_context(*ctx, false, unused));
    for (const auto& [ctx, resp] : pairs)
        points.push_back(model.encode_response(*resp, false, unused));

    FusionScatter f;
    f.labels.assign(p, 0);
    f.labels.insert(f.labels.end(), p, 1);
    f.coords = mds_2d(points);
    f.silhouette = silhouette_score(points, f.labels);
    double dist = 0.0;
    for (std::size_t i = 0; i < p; ++i)
        dist += rms_distance(points[i], points[p + i]);
    f.mean_pair_distance = dist / static_cast<double>(p);
    return f;
}

std::string format_cosine_hist_csv(const Histogram& h) {
    std::string out;
    out += "bin_width=" + format_double(h.bin_width) + '\n';
    out += "mean=" + format_double(h.mean) + '\n';
    out += "n_pairs=" + std::to_string(h.n_values) + '\n';
    out += "n_skipped=" + std::to_string(h.n_skipped) + '\n';
    out += "bin_left,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        out += format_double(h.bin_left(i));
        out += ',' + std::to_string(h.counts[i]);
        out += '\n';
    }
    return out;
}

std::string format_perp_curve_csv(const SweepCurve& c) {
    std::string out;
    out += "n_pairs=" + std::to_string(c.per_pair.size()) + '\n';
    out += "u,mean_perplexity\n";
    for (std::size_t i = 0; i < c.u_grid.size(); ++i) {
        out += format_double(c.u_grid[i]);
        out += ',' + format_double(c.mean_perplexity[i]);
        out += '\n';
    }
    return out;
}

std::string format_fusion_scatter_csv(const FusionScatter& f) {
    std::string out;
    out += "silhouette=" + format_double(f.silhouette) + '\n';
    out += "mean_pair_distance=" + format_double(f.mean_pair_distance) + '\n';
    out += "n_points=" + std::to_string(f.coords.size()) + '\n';
    out += "x,y,source_label\n";
    for (std::size_t i = 0; i < f.coords.size(); ++i) {
        out += format_double(f.coords[i][0]);
        out += ',' + format_double(f.coords[i][1]);
        out += ',';
        out += f.labels[i] == 0 ? "s2s" : "ae";
        out += '\n';
    }
    return out;
}

std::string format_interp_table_csv(const std::vector<InterpRow>& rows) {
    std::string out = "u,text\n";
    for (const InterpRow& r : rows) {
        out += format_double(r.u);
        out += ',' + r.text;
        out += '\n';
    }
    return out;
}

}  // namespace spacefusion
