#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spacefusion/corpus.hpp"
#include "spacefusion/model.hpp"

namespace spacefusion {

// Fixed-width histogram over [-1, 1]. Out-of-range values (floating-point
// spill only; cosines are clamped) land in the edge bins.
struct Histogram {
    double bin_width = 0.02;
    std::vector<std::size_t> counts;  // 100 bins for the default width
    double mean = 0.0;
    std::size_t n_values = 0;
    std::size_t n_skipped = 0;  // zero-norm difference pairs

    double bin_left(std::size_t i) const {
        return -1.0 + bin_width * static_cast<double>(i);
    }
};

// Cosines between z_AE(y_i) - z_S2S(x) and z_AE(y_j) - z_S2S(x) over all
// unordered response pairs of each context, noise-free encodings. Samples
// with fewer than 2 responses are ignored; at most max_contexts of the
// remaining samples (in corpus order) contribute.
Histogram direction_cosines(const SpaceFusionModel& model,
                            const std::vector<MultiRefSample>& samples,
                            std::size_t max_contexts = 1000);

struct SweepCurve {
    std::vector<double> u_grid;
    std::vector<double> mean_perplexity;          // per grid point
    std::vector<std::vector<double>> per_pair;    // [pair][grid point]
};

std::vector<double> default_u_grid();  // 0.0, 0.1, ..., 1.0

// Perplexity exp(-mean log prob) of each reference decoded from
// interpolate(z_S2S(x), z_AE(y), u), averaged over all (x, y) pairs.
SweepCurve interpolation_perplexity(const SpaceFusionModel& model,
                                    const std::vector<MultiRefSample>& samples,
                                    const std::vector<double>& u_grid,
                                    std::size_t max_pairs = 1000);

struct InterpRow {
    double u = 0.0;  // first u at which this output appeared
    std::string text;
};

// Greedy decode along the interpolation path; consecutive duplicates collapse
// into the row recording their first u.
std::vector<InterpRow> interpolation_table(const SpaceFusionModel& model,
                                           const Vocabulary& vocab,
                                           const std::vector<int>& context,
                                           const std::vector<int>& target,
                                           const std::vector<double>& u_grid);

// Classical (Torgerson) MDS to 2 dimensions: squared Euclidean distances,
// double centering, top-2 eigenpairs. Sign fixed so each coordinate axis has
// its first nonzero entry positive. A rank-1 configuration gets a zero
// second coordinate.
std::vector<std::array<double, 2>> mds_2d(const std::vector<Tensor>& points);

// Mean silhouette width of a labeled point set under Euclidean distance.
// Singleton clusters contribute 0.
double silhouette_score(const std::vector<Tensor>& points,
                        const std::vector<int>& labels);

struct FusionScatter {
    std::vector<std::array<double, 2>> coords;
    std::vector<int> labels;  // 0 = z_S2S, 1 = z_AE, matched pairs aligned
    double silhouette = 0.0;  // in the original latent space
    double mean_pair_distance = 0.0;  // mean RMS d(z_S2S(x_i), z_AE(y_i))
};

// Encodes up to max_pairs flattened (x, y) pairs noise-free (a seeded random
// subset when the corpus is larger), embeds the union with mds_2d, and
// reports the homogeneity statistics.
FusionScatter fusion_scatter(const SpaceFusionModel& model,
                             const std::vector<MultiRefSample>& samples,
                             std::size_t max_pairs, std::uint64_t seed);

// CSV renderers, one diagnostic each; headers fixed.
std::string format_cosine_hist_csv(const Histogram& h);
std::string format_perp_curve_csv(const SweepCurve& c);
std::string format_fusion_scatter_csv(const FusionScatter& f);
std::string format_interp_table_csv(const std::vector<InterpRow>& rows);

}  // namespace spacefusion
