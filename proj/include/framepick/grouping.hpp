// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "framepick/core.hpp"

namespace framepick::grouping {

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

// Principal axes of a row matrix. `basis` holds every usable axis
// (min(d, n-1) rows, orthonormal, sorted by decreasing variance); the first
// `k` of them are the retained components.
struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd basis;           // rows are unit axes
    std::vector<double> ratios;      // explained-variance ratio per basis row
    int k = 0;
    bool degenerate = false;         // zero total variance

    [[nodiscard]] Eigen::MatrixXd components() const { return basis.topRows(k); }
    [[nodiscard]] double retained_ratio() const;
    // Projects rows onto the first `count` axes (default: k).
    [[nodiscard]] Eigen::MatrixXd project(const Eigen::MatrixXd& rows, int count = -1) const;
    [[nodiscard]] Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& projected) const;
};

// k is the smallest count whose cumulative ratio reaches `variance_target`.
// Each axis is signed so that its largest-magnitude entry is positive.
[[nodiscard]] PcaModel fit_pca(const Eigen::MatrixXd& rows, double variance_target);

// ---------------------------------------------------------------------------
// DBSCAN
// ---------------------------------------------------------------------------

// Euclidean DBSCAN with inclusive radius. Points are visited in ascending
// index order, so cluster ids follow the lowest core point of each cluster and
// a border point joins the first cluster that reaches it. Noise is -1.
[[nodiscard]] std::vector<int> dbscan(const Eigen::MatrixXd& points, double eps, int min_pts);

// ---------------------------------------------------------------------------
// Redundancy groups
// ---------------------------------------------------------------------------

struct Group {
    int group_id = 0;
    std::vector<int> members;  // frame ids, ascending
    int representative = -1;   // filled by selection
};

struct GroupingConfig {
    double variance_target = 0.43;
    double eps = 0.5;
    int min_pts = 1;
};

struct GroupingResult {
    std::vector<Group> groups;
    std::vector<int> cluster_labels;  // per input keyframe
    int components = 0;
};

// Keyframes i and j share a group iff DBSCAN puts them in the same cluster
// and their shots are at most one apart; groups are the connected components.
// Group ids are ordered by each group's earliest frame id.
[[nodiscard]] GroupingResult group_keyframes(std::span<const int> frame_ids, std::span<const int> shot_ids,
                                             const Eigen::MatrixXd& embeddings, const GroupingConfig& cfg = {});

// ---------------------------------------------------------------------------
// Face identity clustering
// ---------------------------------------------------------------------------

// S = Σ_i |C_i| * min_{j,k in C_i} cos(v_j, v_k) - N_noise. A singleton
// cluster's minimum is taken as 1.
[[nodiscard]] double clustering_score(std::span<const int> labels, const Eigen::MatrixXd& embeddings);

struct FaceCluster {
    int cluster_id = 0;
    std::vector<int> members;  // row indices
    int size = 0;
    int rank = 0;              // 0 = largest
};

struct FaceClusterConfig {
    double variance_target = 0.74;
    double eps = 0.5;
    int min_pts = 50;
    double min_area = 0.05;
    int grid_halfwidth = 10;
    std::optional<int> base_k_override;
    bool score_in_projected_space = false;
    int workers = 1;
};

struct ScorePoint {
    int k = 0;
    double score = 0.0;
    int clusters = 0;
    int noise = 0;
};

struct FaceClusterResult {
    std::vector<int> labels;  // per row; cluster ids are size ranks, -1 noise
    std::vector<FaceCluster> clusters;
    int base_k = 0;
    int chosen_k = 0;
    std::vector<ScorePoint> score_curve;
    bool manual_parameters_needed = false;
};

// Grid search over PCA component counts base-h .. base+h (clipped to the
// usable range); keeps the labelling with the best clustering_score, ties to
// the smaller count.
[[nodiscard]] FaceClusterResult cluster_faces(const Eigen::MatrixXd& embeddings, const FaceClusterConfig& cfg = {});

// Relabels clusters by decreasing size (ties: earliest first member).
[[nodiscard]] std::vector<FaceCluster> rank_clusters(std::vector<int>& labels);

}  // namespace framepick::grouping
