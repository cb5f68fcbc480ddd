#include "lifeseq/space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lifeseq/common.hpp"
#include "lifeseq/rng.hpp"

namespace lifeseq {

Mat cosine_distance_matrix(const Mat& embeddings) {
    const int n = embeddings.rows(), d = embeddings.cols();
    Vec norms(n);
    for (int i = 0; i < n; ++i) norms[i] = std::max(l2_norm(embeddings.row(i), d), 1e-12);
    Mat dist(n, n);
    for (int i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            const real cs = dot(embeddings.row(i), embeddings.row(j), d) / (norms[i] * norms[j]);
            const real v = 1.0 - cs;
            dist(i, j) = v;
            dist(j, i) = v;
        }
    }
    return dist;
}

namespace {

Vec upper_triangle(const Mat& a) {
    const int n = a.rows();
    Vec out;
    out.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) out.push_back(a(i, j));
    }
    return out;
}

Vec ranks_of(const Vec& v) {
    std::vector<int> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) { return v[x] < v[y]; });
    Vec ranks(v.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
        const real mid = 0.5 * static_cast<real>(i + j - 1);  // average rank for ties
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mid;
        i = j;
    }
    return ranks;
}

real pearson(const Vec& x, const Vec& y) {
    const real n = static_cast<real>(x.size());
    if (x.empty()) return 0.0;
    real sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    const real cov = sxy - sx * sy / n;
    const real vx = sxx - sx * sx / n;
    const real vy = syy - sy * sy / n;
    if (vx <= 0.0 || vy <= 0.0) return 0.0;
    return cov / std::sqrt(vx * vy);
}

}  // namespace

real upper_triangle_correlation(const Mat& a, const Mat& b, MatrixCorrelation kind) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
        throw ValidationError("matrix correlation requires equal square matrices");
    }
    Vec x = upper_triangle(a);
    Vec y = upper_triangle(b);
    if (kind == MatrixCorrelation::spearman) {
        x = ranks_of(x);
        y = ranks_of(y);
    }
    return pearson(x, y);
}

real randomization_test(const Mat& a, const Mat& b, int n_permutations, std::uint64_t seed,
                        MatrixCorrelation kind) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ValidationError("randomization_test: matrices must share dimensions and ordering");
    }
    const int n = a.rows();
    const real observed = upper_triangle_correlation(a, b, kind);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Mat permuted(n, n);
    long at_least = 0;
    for (int p = 0; p < n_permutations; ++p) {
        Rng rng(derive_seed(seed, "mantel", static_cast<std::uint64_t>(p)));
        rng.shuffle(perm);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) permuted(i, j) = a(perm[i], perm[j]);
        }
        if (upper_triangle_correlation(permuted, b, kind) >= observed) ++at_least;
    }
    return static_cast<real>(1 + at_least) / static_cast<real>(n_permutations + 1);
}

std::vector<std::uint8_t> benjamini_hochberg(const Vec& p_values, real q) {
    const int m = static_cast<int>(p_values.size());
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return p_values[x] < p_values[y]; });
    int cutoff = -1;  // largest k (1-based) with p_(k) <= k q / m
    for (int k = 1; k <= m; ++k) {
        if (p_values[order[k - 1]] <= static_cast<real>(k) * q / static_cast<real>(m)) cutoff = k;
    }
    std::vector<std::uint8_t> reject(m, 0);
    for (int k = 0; k < cutoff; ++k) reject[order[k]] = 1;
    return reject;
}

HubnessResult hubness(const Mat& embeddings, int k) {
    const int n = embeddings.rows();
    const Mat dist = cosine_distance_matrix(embeddings);
    HubnessResult res;
    res.in_degree.assign(n, 0);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int x, int y) {
            if (dist(i, x) != dist(i, y)) return dist(i, x) < dist(i, y);
            return x < y;
        });
        int taken = 0;
        for (int j : order) {
            if (j == i) continue;
            ++res.in_degree[j];
            if (++taken == k) break;
        }
    }
    for (int j = 0; j < n; ++j) res.max_in_degree = std::max(res.max_in_degree, res.in_degree[j]);
    res.max_fraction = static_cast<real>(res.max_in_degree) / static_cast<real>(n);
    return res;
}

std::vector<std::pair<int, real>> neighbor_query(const Mat& embeddings, int token, int k) {
    const int n = embeddings.rows();
    if (token < 0 || token >= n) throw ValidationError("neighbor_query: token id out of range");
    const Mat dist = cosine_distance_matrix(embeddings);
    std::vector<int> order;
    order.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
        if (j != token) order.push_back(j);
    }
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        if (dist(token, x) != dist(token, y)) return dist(token, x) < dist(token, y);
        return x < y;
    });
    std::vector<std::pair<int, real>> out;
    for (int j = 0; j < std::min<int>(k, static_cast<int>(order.size())); ++j) {
        out.emplace_back(order[j], dist(token, order[j]));
    }
    return out;
}

real ordinal_structure_score(const Mat& embeddings, const std::vector<int>& ordered_family) {
    const int n = static_cast<int>(ordered_family.size());
    if (n < 3) throw ValidationError("ordinal_structure_score: family needs >= 3 members");
    const int d = embeddings.cols();
    Vec norms(n);
    for (int i = 0; i < n; ++i) {
        norms[i] = std::max(l2_norm(embeddings.row(ordered_family[i]), d), 1e-12);
    }
    long hits = 0;
    for (int i = 1; i + 1 < n; ++i) {
        int best = -1;
        real best_dist = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const real cs = dot(embeddings.row(ordered_family[i]), embeddings.row(ordered_family[j]),
                                d) /
                            (norms[i] * norms[j]);
            const real dist = 1.0 - cs;
            if (best < 0 || dist < best_dist) {
                best = j;
                best_dist = dist;
            }
        }
        hits += (best == i - 1 || best == i + 1) ? 1 : 0;
    }
    return static_cast<real>(hits) / static_cast<real>(n - 2);
}

}  // namespace lifeseq
