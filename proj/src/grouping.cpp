// SPDX-License-Identifier: Apache-2.0
#include "framepick/grouping.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <thread>

namespace framepick::grouping {

double PcaModel::retained_ratio() const {
    return std::accumulate(ratios.begin(), ratios.begin() + std::min<std::ptrdiff_t>(k, std::ptrdiff_t(ratios.size())), 0.0);
}

Eigen::MatrixXd PcaModel::project(const Eigen::MatrixXd& rows, int count) const {
    if (count < 0) count = k;
    count = std::min<int>(count, int(basis.rows()));
    return (rows.rowwise() - mean.transpose()) * basis.topRows(count).transpose();
}

Eigen::MatrixXd PcaModel::reconstruct(const Eigen::MatrixXd& projected) const {
    const auto count = projected.cols();
    Eigen::MatrixXd out = projected * basis.topRows(count);
    out.rowwise() += mean.transpose();
    return out;
}

PcaModel fit_pca(const Eigen::MatrixXd& rows, double variance_target) {
    if (rows.rows() < 2) throw DomainError("fit_pca: need at least 2 rows");
    if (!(variance_target > 0.0 && variance_target <= 1.0))
        throw ConfigError("fit_pca: variance_target must lie in (0, 1]");
    if (!rows.allFinite()) throw DomainError("fit_pca: non-finite input");

    const auto n = rows.rows();
    const auto d = rows.cols();
    PcaModel model;
    model.mean = rows.colwise().mean().transpose();
    const Eigen::MatrixXd centered = rows.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / double(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DomainError("fit_pca: eigensolver failed");
    // Eigen returns ascending eigenvalues.
    const Eigen::VectorXd values = solver.eigenvalues().reverse();
    const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();

    const double total = std::max(0.0, values.sum());
    const int usable = int(std::min<Eigen::Index>(d, n - 1));
    if (!(total > 0.0) || values(0) <= 0.0) {
        model.degenerate = true;
        model.k = 1;
        model.basis = Eigen::MatrixXd::Zero(1, d);
        model.ratios = {0.0};
        return model;
    }

    model.basis.resize(usable, d);
    model.ratios.resize(std::size_t(usable));
    for (int i = 0; i < usable; ++i) {
        Eigen::VectorXd axis = vectors.col(i);
        Eigen::Index arg = 0;
        axis.cwiseAbs().maxCoeff(&arg);
        if (axis(arg) < 0) axis = -axis;
        model.basis.row(i) = axis.transpose();
        model.ratios[std::size_t(i)] = std::max(0.0, values(i)) / total;
    }

    double cumulative = 0.0;
    model.k = usable;
    for (int i = 0; i < usable; ++i) {
        cumulative += model.ratios[std::size_t(i)];
        if (cumulative >= variance_target - 1e-12) {
            model.k = i + 1;
            break;
        }
    }
    return model;
}

std::vector<int> dbscan(const Eigen::MatrixXd& points, double eps, int min_pts) {
    if (!(eps > 0.0)) throw ConfigError("dbscan: eps must be > 0");
    if (min_pts < 1) throw ConfigError("dbscan: min_pts must be >= 1");
    if (!points.allFinite()) throw DomainError("dbscan: non-finite input");

    constexpr int kUnvisited = -2;
    const int n = int(points.rows());
    const double eps2 = eps * eps;
    std::vector<int> labels(std::size_t(n), kUnvisited);

    auto region = [&](int i) {
        std::vector<int> out;
        for (int j = 0; j < n; ++j)
            if ((points.row(j) - points.row(i)).squaredNorm() <= eps2) out.push_back(j);
        return out;
    };

    int next_cluster = 0;
    for (int i = 0; i < n; ++i) {
        if (labels[std::size_t(i)] != kUnvisited) continue;
        std::vector<int> seeds = region(i);
        if (int(seeds.size()) < min_pts) {
            labels[std::size_t(i)] = kNoiseCluster;
            continue;
        }
        const int cluster = next_cluster++;
        labels[std::size_t(i)] = cluster;
        std::deque<int> queue(seeds.begin(), seeds.end());
        while (!queue.empty()) {
            const int q = queue.front();
            queue.pop_front();
            int& lq = labels[std::size_t(q)];
            if (lq == kNoiseCluster) lq = cluster;  // border point
            if (lq != kUnvisited) continue;
            lq = cluster;
            std::vector<int> nb = region(q);
            if (int(nb.size()) >= min_pts) queue.insert(queue.end(), nb.begin(), nb.end());
        }
    }
    return labels;
}

namespace {

struct DisjointSet {
    std::vector<int> parent;
    explicit DisjointSet(int n) : parent(std::size_t(n)) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[std::size_t(x)] != x) {
            parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
            x = parent[std::size_t(x)];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::size_t(std::max(a, b))] = std::min(a, b);
    }
};

}  // namespace

GroupingResult group_keyframes(std::span<const int> frame_ids, std::span<const int> shot_ids,
                               const Eigen::MatrixXd& embeddings, const GroupingConfig& cfg) {
    const int n = int(frame_ids.size());
    if (int(shot_ids.size()) != n || embeddings.rows() != n)
        throw ValidationError("group_keyframes: frame ids, shot ids and embeddings disagree in length");
    GroupingResult result;
    if (n == 0) return result;

    if (n == 1) {
        result.cluster_labels = {0};
    } else {
        const PcaModel pca = fit_pca(embeddings, cfg.variance_target);
        result.components = pca.k;
        result.cluster_labels = dbscan(pca.project(embeddings), cfg.eps, cfg.min_pts);
    }

    // Within one cluster, sorting by shot turns "shots at most one apart"
    // connectivity into runs of consecutive members.
    std::map<int, std::vector<int>> by_cluster;
    for (int i = 0; i < n; ++i)
        if (result.cluster_labels[std::size_t(i)] != kNoiseCluster)
            by_cluster[result.cluster_labels[std::size_t(i)]].push_back(i);
    DisjointSet ds(n);
    for (auto& [label, members] : by_cluster) {
        std::stable_sort(members.begin(), members.end(),
                         [&](int a, int b) { return shot_ids[std::size_t(a)] < shot_ids[std::size_t(b)]; });
        for (std::size_t m = 1; m < members.size(); ++m)
            if (shot_ids[std::size_t(members[m])] - shot_ids[std::size_t(members[m - 1])] <= 1)
                ds.unite(members[m - 1], members[m]);
    }

    std::map<int, std::vector<int>> components;
    for (int i = 0; i < n; ++i) components[ds.find(i)].push_back(frame_ids[std::size_t(i)]);
    for (auto& [root, members] : components) {
        std::sort(members.begin(), members.end());
        result.groups.push_back({0, std::move(members), -1});
    }
    std::sort(result.groups.begin(), result.groups.end(),
              [](const Group& a, const Group& b) { return a.members.front() < b.members.front(); });
    for (std::size_t g = 0; g < result.groups.size(); ++g) result.groups[g].group_id = int(g);
    return result;
}

double clustering_score(std::span<const int> labels, const Eigen::MatrixXd& embeddings) {
    if (Eigen::Index(labels.size()) != embeddings.rows())
        throw ValidationError("clustering_score: labels do not cover the embeddings");
    std::map<int, std::vector<int>> clusters;
    int noise = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kNoiseCluster)
            ++noise;
        else
            clusters[labels[i]].push_back(int(i));
    }
    const Eigen::VectorXd norms = embeddings.rowwise().norm();
    double score = 0.0;
    for (const auto& [label, members] : clusters) {
        double min_cos = 1.0;
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                const double denom = norms(members[a]) * norms(members[b]);
                if (!(denom > 0.0)) throw DomainError("clustering_score: zero-norm embedding");
                const double c = embeddings.row(members[a]).dot(embeddings.row(members[b])) / denom;
                min_cos = std::min(min_cos, std::clamp(c, -1.0, 1.0));
            }
        score += double(members.size()) * min_cos;
    }
    return score - noise;
}

std::vector<FaceCluster> rank_clusters(std::vector<int>& labels) {
    std::map<int, std::vector<int>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != kNoiseCluster) by_label[labels[i]].push_back(int(i));
    std::vector<std::vector<int>> groups;
    for (auto& [l, m] : by_label) groups.push_back(std::move(m));
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a.front() < b.front();
    });
    std::vector<FaceCluster> out;
    for (std::size_t r = 0; r < groups.size(); ++r) {
        for (int i : groups[r]) labels[std::size_t(i)] = int(r);
        out.push_back({int(r), groups[r], int(groups[r].size()), int(r)});
    }
    return out;
}

FaceClusterResult cluster_faces(const Eigen::MatrixXd& embeddings, const FaceClusterConfig& cfg) {
    FaceClusterResult result;
    const int n = int(embeddings.rows());
    result.labels.assign(std::size_t(n), kNoiseCluster);
    if (n < cfg.min_pts || n < 2) {
        result.manual_parameters_needed = true;
        return result;
    }

    const PcaModel pca = fit_pca(embeddings, cfg.variance_target);
    const int max_k = std::max(1, int(pca.basis.rows()));
    result.base_k = std::clamp(cfg.base_k_override.value_or(pca.k), 1, max_k);
    const int lo = std::max(1, result.base_k - cfg.grid_halfwidth);
    const int hi = std::min(max_k, result.base_k + cfg.grid_halfwidth);

    const int count = hi - lo + 1;
    std::vector<std::vector<int>> labelings(static_cast<std::size_t>(count));
    std::vector<double> scores(std::size_t(count), 0.0);
    auto evaluate = [&](int idx) {
        const int k = lo + idx;
        const Eigen::MatrixXd projected = pca.project(embeddings, k);
        labelings[std::size_t(idx)] = dbscan(projected, cfg.eps, cfg.min_pts);
        scores[std::size_t(idx)] = clustering_score(labelings[std::size_t(idx)],
                                                    cfg.score_in_projected_space ? projected : embeddings);
    };
    const int workers = std::clamp(cfg.workers, 1, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) evaluate(i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int i = w; i < count; i += workers) evaluate(i);
            });
        for (auto& t : pool) t.join();
    }

    int best = 0;
    for (int i = 0; i < count; ++i) {
        const auto& l = labelings[std::size_t(i)];
        ScorePoint p;
        p.k = lo + i;
        p.score = scores[std::size_t(i)];
        p.noise = int(std::count(l.begin(), l.end(), kNoiseCluster));
        p.clusters = l.empty() ? 0 : *std::max_element(l.begin(), l.end()) + 1;
        result.score_curve.push_back(p);
        if (scores[std::size_t(i)] > scores[std::size_t(best)]) best = i;
    }
    result.chosen_k = lo + best;
    result.labels = std::move(labelings[std::size_t(best)]);
    result.clusters = rank_clusters(result.labels);
    if (result.clusters.empty()) result.manual_parameters_needed = true;
    return result;
}

}  // namespace framepick::grouping
