#pragma once

#include <vector>

#include "lifeseq/matrix.hpp"

namespace lifeseq {

// Pairwise cosine distances (1 - cosine similarity); zero diagonal.
Mat cosine_distance_matrix(const Mat& embeddings);

enum class MatrixCorrelation { pearson, spearman };

// Correlation of the strictly-upper-triangle entries; spearman rank-transforms
// both triangles first.
real upper_triangle_correlation(const Mat& a, const Mat& b,
                                MatrixCorrelation kind = MatrixCorrelation::pearson);

// Mantel-style permutation test: the same permutation is applied to rows and
// columns of `a` (preserving symmetry); p = (1 + #{null >= observed}) /
// (n_permutations + 1).
real randomization_test(const Mat& a, const Mat& b, int n_permutations, std::uint64_t seed,
                        MatrixCorrelation kind = MatrixCorrelation::pearson);

// Step-up FDR control; returns a rejection flag per p-value (original order).
std::vector<std::uint8_t> benjamini_hochberg(const Vec& p_values, real q);

struct HubnessResult {
    std::vector<int> in_degree;
    int max_in_degree = 0;
    real max_fraction = 0.0;  // max in-degree / |V|
};

// Directed k-nearest-neighbor graph by cosine similarity; in-degree counts.
HubnessResult hubness(const Mat& embeddings, int k = 5);

// k closest tokens to `token` by cosine distance, ascending.
std::vector<std::pair<int, real>> neighbor_query(const Mat& embeddings, int token, int k);

// For each interior member of the ordered family, is its nearest
// within-family neighbor an adjacent level? Returns the fraction.
real ordinal_structure_score(const Mat& embeddings, const std::vector<int>& ordered_family);

}  // namespace lifeseq
