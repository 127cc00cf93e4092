// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used to check the engine.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Textbook DBSCAN: full distance matrix, explicit queue. Returns labels with
// clusters numbered in order of their first core point; noise -1.
inline std::vector<int> naive_dbscan(const Eigen::MatrixXd& pts, double eps, int min_pts) {
    const int n = static_cast<int>(pts.rows());
    std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if ((pts.row(i) - pts.row(j)).norm() <= eps) nbrs[i].push_back(j);
    std::vector<bool> core(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) core[i] = static_cast<int>(nbrs[i].size()) >= min_pts;
    std::vector<int> label(static_cast<std::size_t>(n), -2);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        if (label[i] != -2 || !core[i]) continue;
        const int c = next++;
        std::vector<int> queue{i};
        label[i] = c;
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const int p = queue[q];
            if (!core[p]) continue;
            for (int nb : nbrs[p]) {
                if (label[nb] == -2) {
                    label[nb] = c;
                    queue.push_back(nb);
                }
            }
        }
    }
    for (auto& l : label)
        if (l == -2) l = -1;
    return label;
}

// True when two labelings describe the same partition (noise must match
// exactly; cluster ids may be renamed).
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] == -1) != (b[i] == -1)) return false;
        if (a[i] == -1) continue;
        auto it1 = ab.emplace(a[i], b[i]).first;
        auto it2 = ba.emplace(b[i], a[i]).first;
        if (it1->second != b[i] || it2->second != a[i]) return false;
    }
    return true;
}

// Cyclic Jacobi eigensolver for a symmetric matrix. Eigenvalues descending.
inline void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
    const int n = static_cast<int>(a.rows());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
    values.resize(n);
    vectors.resize(n, n);
    for (int i = 0; i < n; ++i) {
        values[i] = a(order[i], order[i]);
        vectors.col(i) = v.col(order[i]);
    }
}

// Sample covariance (n-1 denominator) built with explicit loops.
inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& rows) {
    const int n = static_cast<int>(rows.rows()), d = static_cast<int>(rows.cols());
    std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) mean[j] += rows(i, j) / n;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < d; ++p)
            for (int q = 0; q < d; ++q) c(p, q) += (rows(i, p) - mean[p]) * (rows(i, q) - mean[q]) / (n - 1);
    return c;
}

// Largest principal angle between the row spaces of two orthonormal bases.
inline double subspace_angle(const Eigen::MatrixXd& a_rows, const Eigen::MatrixXd& b_rows) {
    const Eigen::MatrixXd m = a_rows * b_rows.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const double smin = svd.singularValues().minCoeff();
    return std::acos(std::clamp(smin, -1.0, 1.0));
}

// Histogram uniformity by brute force: count each gray level, sort counts,
// sum the largest ceil(frac * 256).
inline double uniformity(const std::vector<int>& gray_levels, double frac) {
    std::vector<long> counts(256, 0);
    for (int g : gray_levels) ++counts[static_cast<std::size_t>(g)];
    std::sort(counts.rbegin(), counts.rend());
    const int top = static_cast<int>(std::ceil(frac * 256.0));
    long sum = 0;
    for (int i = 0; i < top; ++i) sum += counts[static_cast<std::size_t>(i)];
    return static_cast<double>(sum) / static_cast<double>(gray_levels.size());
}

// Random point cloud for DBSCAN comparisons: a few blobs plus uniform
// background, with eps and min_pts drawn to produce mixed outcomes.
struct DbscanInstance {
    Eigen::MatrixXd points;
    double eps = 1.0;
    int min_pts = 1;
};

inline DbscanInstance random_dbscan_instance(std::mt19937_64& rng, int max_n = 500, int max_d = 16) {
    std::uniform_int_distribution<int> nd(1, max_n), dd(1, max_d), bd(1, 6), md(1, 12);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    DbscanInstance inst;
    const int n = nd(rng), d = dd(rng), blobs = bd(rng);
    std::vector<Eigen::VectorXd> centres;
    for (int b = 0; b < blobs; ++b) {
        Eigen::VectorXd c(d);
        for (int j = 0; j < d; ++j) c[j] = u(rng);
        centres.push_back(c);
    }
    inst.points.resize(n, d);
    for (int i = 0; i < n; ++i) {
        if (rng() % 4 == 0) {
            for (int j = 0; j < d; ++j) inst.points(i, j) = u(rng);
        } else {
            const auto& c = centres[rng() % centres.size()];
            for (int j = 0; j < d; ++j) inst.points(i, j) = c[j] + g(rng);
        }
    }
    inst.eps = std::uniform_real_distribution<double>(0.3, 2.0)(rng) * std::sqrt(static_cast<double>(d));
    inst.min_pts = md(rng);
    return inst;
}

// Rows with well separated variances along a random rotation, so the
// principal axes are unique.
inline Eigen::MatrixXd random_pca_matrix(std::mt19937_64& rng, int max_rows = 64, int max_d = 32) {
    std::uniform_int_distribution<int> dd(2, max_d);
    const int d = dd(rng);
    const int n = std::uniform_int_distribution<int>(d + 2, std::max(d + 2, max_rows))(rng);
    std::normal_distribution<double> g;
    Eigen::MatrixXd q(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) q(i, j) = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    const Eigen::MatrixXd rot = qr.householderQ();
    Eigen::MatrixXd z(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) z(i, j) = g(rng) * std::pow(0.8, j) + 0.5;
    return z * rot.transpose();
}

// Unit vectors around orthonormal identity centres.
inline Eigen::MatrixXd identity_blobs(int blobs, int per_blob, int dim, double jitter, std::uint64_t seed,
                                      std::vector<int>* truth = nullptr) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd out(blobs * per_blob, dim);
    for (int b = 0; b < blobs; ++b)
        for (int i = 0; i < per_blob; ++i) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
            v[b % dim] = 1.0;
            for (int j = 0; j < dim; ++j) v[j] += jitter * g(rng);
            out.row(b * per_blob + i) = v.normalized().transpose();
            if (truth) truth->push_back(b);
        }
    return out;
}

// Fraction of clustered points whose cluster's majority truth label matches.
inline double purity(const std::vector<int>& labels, const std::vector<int>& truth) {
    std::map<int, std::map<int, int>> counts;
    int clustered = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) continue;
        ++counts[labels[i]][truth[i]];
        ++clustered;
    }
    if (clustered == 0) return 0.0;
    int agree = 0;
    for (const auto& [c, m] : counts) {
        int best = 0;
        for (const auto& [t, n] : m) best = std::max(best, n);
        agree += best;
    }
    return static_cast<double>(agree) / clustered;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() /
               ("framepick_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

}  // namespace oracle
