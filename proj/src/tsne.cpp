#include "stylerep/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stylerep/rng.hpp"

namespace stylerep {

void TsneConfig::validate(int n) const {
    if (n < 3) throw DataError(str("tsne: need >= 3 points, got ", n));
    if (!(perplexity > 0.0))
        throw DataError(str("tsne: perplexity must be positive, got ", perplexity));
    if (!(perplexity < (n - 1) / 3.0))
        throw DataError(str("tsne: perplexity ", perplexity, " too large for ", n,
                            " points (needs perplexity < (n-1)/3)"));
    if (!(theta >= 0.0 && theta < 1.0))
        throw DataError(str("tsne: theta ", theta, " outside [0,1)"));
    if (iterations < 1) throw DataError(str("tsne: iterations ", iterations, " < 1"));
    if (!(learning_rate > 0.0))
        throw DataError(str("tsne: learning rate must be positive, got ", learning_rate));
    if (!(exaggeration >= 1.0))
        throw DataError(str("tsne: exaggeration factor ", exaggeration, " < 1"));
}

// Affinities -------------------------------------------------------------------

SparseAffinities perplexity_affinities(const FeatureMatrix& features, double perplexity) {
    const int n = features.rows;
    if (!(perplexity > 0.0))
        throw DataError(str("tsne: perplexity must be positive, got ", perplexity));
    if (n < static_cast<int>(3.0 * perplexity) + 1)
        throw DataError(str("tsne: ", n, " points cannot support perplexity ", perplexity,
                            " (needs n >= 3*perplexity + 1)"));
    const int k = std::min(n - 1, static_cast<int>(3.0 * perplexity));
    const double target_bits = std::log2(perplexity);
    constexpr double kLog2 = 0.6931471805599453;

    std::vector<int> neighbor(static_cast<std::size_t>(n) * k);
    std::vector<double> cond(static_cast<std::size_t>(n) * k);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> dist;
        dist.reserve(static_cast<std::size_t>(n) - 1);
        const auto xi = features.row(i);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const auto xj = features.row(j);
            double d2 = 0.0;
            for (int c = 0; c < features.cols; ++c) {
                const double d = static_cast<double>(xi[static_cast<std::size_t>(c)]) -
                                 xj[static_cast<std::size_t>(c)];
                d2 += d * d;
            }
            dist.emplace_back(d2, j);
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

        std::vector<double> d2(static_cast<std::size_t>(k));
        double dmin = dist[0].first, dmax = dist[0].first;
        for (int j = 0; j < k; ++j) {
            d2[static_cast<std::size_t>(j)] = dist[static_cast<std::size_t>(j)].first;
            neighbor[static_cast<std::size_t>(i) * k + j] = dist[static_cast<std::size_t>(j)].second;
            dmin = std::min(dmin, d2[static_cast<std::size_t>(j)]);
            dmax = std::max(dmax, d2[static_cast<std::size_t>(j)]);
        }

        double* row = cond.data() + static_cast<std::size_t>(i) * k;
        if (!(dmax - dmin > 0.0)) { // equidistant (or duplicate) neighbors
            for (int j = 0; j < k; ++j) row[j] = 1.0 / k;
            continue;
        }

        double beta = 1.0;
        double beta_lo = 0.0, beta_hi = std::numeric_limits<double>::infinity();
        for (int step = 0; step < 200; ++step) {
            double sum = 0.0, dsum = 0.0;
            for (int j = 0; j < k; ++j) {
                const double w = std::exp(-beta * (d2[static_cast<std::size_t>(j)] - dmin));
                row[j] = w;
                sum += w;
                dsum += (d2[static_cast<std::size_t>(j)] - dmin) * w;
            }
            const double entropy_bits = (std::log(sum) + beta * dsum / sum) / kLog2;
            const double diff = entropy_bits - target_bits;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0.0) { // distribution too flat: sharpen
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
            } else {
                beta_hi = beta;
                beta = (beta + beta_lo) / 2.0;
            }
        }
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += row[j];
        for (int j = 0; j < k; ++j) row[j] /= sum;
    }

    // Symmetrize: P = (P_cond + P_cond') / (2n) over the union support.
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
            const int jj = neighbor[static_cast<std::size_t>(i) * k + j];
            const double v = cond[static_cast<std::size_t>(i) * k + j] / (2.0 * n);
            rows[static_cast<std::size_t>(i)].emplace_back(jj, v);
            rows[static_cast<std::size_t>(jj)].emplace_back(i, v);
        }

    SparseAffinities p;
    p.n = n;
    p.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) {
        auto& row = rows[static_cast<std::size_t>(i)];
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        int prev = -1;
        for (const auto& [j, v] : row) {
            if (j == prev) {
                p.val.back() += v;
            } else {
                p.col.push_back(j);
                p.val.push_back(v);
                prev = j;
            }
        }
        p.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<int>(p.col.size());
    }
    return p;
}

// Quadtree ---------------------------------------------------------------------

namespace {

constexpr int kMaxDepth = 64;

struct QuadTree {
    struct Node {
        double cx, cy, hw, hh;      // center and half extents
        double com_x = 0.0, com_y = 0.0;
        int count = 0;
        int children[4] = {-1, -1, -1, -1};
        bool leaf = true;
        std::vector<int> points; // leaf occupants (singleton except at depth cap)
    };
    std::vector<Node> nodes;
    const std::vector<double>& y;

    explicit QuadTree(const std::vector<double>& coords) : y(coords) {
        const int n = static_cast<int>(coords.size() / 2);
        double xmin = coords[0], xmax = coords[0], ymin = coords[1], ymax = coords[1];
        for (int i = 1; i < n; ++i) {
            xmin = std::min(xmin, coords[2 * static_cast<std::size_t>(i)]);
            xmax = std::max(xmax, coords[2 * static_cast<std::size_t>(i)]);
            ymin = std::min(ymin, coords[2 * static_cast<std::size_t>(i) + 1]);
            ymax = std::max(ymax, coords[2 * static_cast<std::size_t>(i) + 1]);
        }
        Node root;
        root.cx = (xmin + xmax) / 2;
        root.cy = (ymin + ymax) / 2;
        root.hw = std::max((xmax - xmin) / 2, 1e-10);
        root.hh = std::max((ymax - ymin) / 2, 1e-10);
        nodes.push_back(root);
        nodes.reserve(static_cast<std::size_t>(n) * 3);
        for (int i = 0; i < n; ++i) insert(0, i, 0);
    }

    int quadrant(const Node& node, double px, double py) const {
        return (px >= node.cx ? 1 : 0) + (py >= node.cy ? 2 : 0);
    }

    int make_child(int id, int q) {
        Node child;
        const Node& parent = nodes[static_cast<std::size_t>(id)];
        child.hw = parent.hw / 2;
        child.hh = parent.hh / 2;
        child.cx = parent.cx + ((q & 1) ? child.hw : -child.hw);
        child.cy = parent.cy + ((q & 2) ? child.hh : -child.hh);
        nodes.push_back(child);
        const int cid = static_cast<int>(nodes.size()) - 1;
        nodes[static_cast<std::size_t>(id)].children[q] = cid;
        return cid;
    }

    void insert(int id, int point, int depth) {
        const double px = y[2 * static_cast<std::size_t>(point)];
        const double py = y[2 * static_cast<std::size_t>(point) + 1];
        {
            Node& node = nodes[static_cast<std::size_t>(id)];
            node.com_x = (node.com_x * node.count + px) / (node.count + 1);
            node.com_y = (node.com_y * node.count + py) / (node.count + 1);
            ++node.count;
        }
        if (nodes[static_cast<std::size_t>(id)].leaf) {
            Node& node = nodes[static_cast<std::size_t>(id)];
            node.points.push_back(point);
            if (node.points.size() <= 1 || depth >= kMaxDepth) return;
            // Split: push every occupant one level down.
            std::vector<int> occupants = std::move(node.points);
            node.points.clear();
            node.leaf = false;
            for (int occ : occupants) {
                const double ox = y[2 * static_cast<std::size_t>(occ)];
                const double oy = y[2 * static_cast<std::size_t>(occ) + 1];
                const int q = quadrant(nodes[static_cast<std::size_t>(id)], ox, oy);
                int child = nodes[static_cast<std::size_t>(id)].children[q];
                if (child < 0) child = make_child(id, q);
                insert(child, occ, depth + 1);
            }
            return;
        }
        const int q = quadrant(nodes[static_cast<std::size_t>(id)], px, py);
        int child = nodes[static_cast<std::size_t>(id)].children[q];
        if (child < 0) child = make_child(id, q);
        insert(child, point, depth + 1);
    }

    /// Accumulates the repulsive numerator for `point` and returns its share
    /// of the normalizer Z.
    double repulse(int point, double theta, double& fx, double& fy) const {
        const double px = y[2 * static_cast<std::size_t>(point)];
        const double py = y[2 * static_cast<std::size_t>(point) + 1];
        double z = 0.0;
        repulse_node(0, point, px, py, theta * theta, z, fx, fy);
        return z;
    }

private:
    void repulse_node(int id, int point, double px, double py, double theta2, double& z,
                      double& fx, double& fy) const {
        const Node& node = nodes[static_cast<std::size_t>(id)];
        if (node.count == 0) return;
        if (node.leaf) {
            for (int j : node.points) {
                if (j == point) continue;
                const double dx = px - y[2 * static_cast<std::size_t>(j)];
                const double dy = py - y[2 * static_cast<std::size_t>(j) + 1];
                const double w = 1.0 / (1.0 + dx * dx + dy * dy);
                z += w;
                fx += w * w * dx;
                fy += w * w * dy;
            }
            return;
        }
        const double dx = px - node.com_x;
        const double dy = py - node.com_y;
        const double d2 = dx * dx + dy * dy;
        const double extent = 2.0 * std::max(node.hw, node.hh);
        if (extent * extent < theta2 * d2) { // cell_extent / distance < theta
            const double w = 1.0 / (1.0 + d2);
            z += node.count * w;
            fx += node.count * w * w * dx;
            fy += node.count * w * w * dy;
            return;
        }
        for (int child : node.children)
            if (child >= 0) repulse_node(child, point, px, py, theta2, z, fx, fy);
    }
};

} // namespace

std::vector<double> tsne_gradient(const SparseAffinities& p, const std::vector<double>& y,
                                  double theta) {
    const int n = p.n;
    if (y.size() != static_cast<std::size_t>(n) * 2)
        throw ShapeError(str("tsne_gradient: ", y.size(), " coordinates for ", n, " points"));

    QuadTree tree(y);
    std::vector<double> rep(static_cast<std::size_t>(n) * 2, 0.0);
    double z = 0.0;
    for (int i = 0; i < n; ++i) // serial: Z reduction order is part of determinism
        z += tree.repulse(i, theta, rep[2 * static_cast<std::size_t>(i)],
                          rep[2 * static_cast<std::size_t>(i) + 1]);
    if (!(z > 0.0)) z = std::numeric_limits<double>::min();

    std::vector<double> grad(static_cast<std::size_t>(n) * 2, 0.0);
    for (int i = 0; i < n; ++i) {
        double ax = 0.0, ay = 0.0;
        for (int e = p.row_ptr[static_cast<std::size_t>(i)];
             e < p.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
            const int j = p.col[static_cast<std::size_t>(e)];
            const double dx = y[2 * static_cast<std::size_t>(i)] - y[2 * static_cast<std::size_t>(j)];
            const double dy =
                y[2 * static_cast<std::size_t>(i) + 1] - y[2 * static_cast<std::size_t>(j) + 1];
            const double w = 1.0 / (1.0 + dx * dx + dy * dy);
            const double coeff = p.val[static_cast<std::size_t>(e)] * w;
            ax += coeff * dx;
            ay += coeff * dy;
        }
        grad[2 * static_cast<std::size_t>(i)] = 4.0 * (ax - rep[2 * static_cast<std::size_t>(i)] / z);
        grad[2 * static_cast<std::size_t>(i) + 1] =
            4.0 * (ay - rep[2 * static_cast<std::size_t>(i) + 1] / z);
    }
    return grad;
}

double tsne_kl(const SparseAffinities& p, const std::vector<double>& y) {
    const int n = p.n;
    double z = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dx = y[2 * static_cast<std::size_t>(i)] - y[2 * static_cast<std::size_t>(j)];
            const double dy =
                y[2 * static_cast<std::size_t>(i) + 1] - y[2 * static_cast<std::size_t>(j) + 1];
            z += 1.0 / (1.0 + dx * dx + dy * dy);
        }
    double kl = 0.0;
    for (int i = 0; i < n; ++i)
        for (int e = p.row_ptr[static_cast<std::size_t>(i)];
             e < p.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
            const int j = p.col[static_cast<std::size_t>(e)];
            const double pij = p.val[static_cast<std::size_t>(e)];
            if (pij <= 0.0) continue;
            const double dx = y[2 * static_cast<std::size_t>(i)] - y[2 * static_cast<std::size_t>(j)];
            const double dy =
                y[2 * static_cast<std::size_t>(i) + 1] - y[2 * static_cast<std::size_t>(j) + 1];
            const double q = std::max(1.0 / ((1.0 + dx * dx + dy * dy) * z),
                                      std::numeric_limits<double>::min());
            kl += pij * std::log(pij / q);
        }
    return kl;
}

Embedding tsne_embed(const FeatureMatrix& features, const TsneConfig& cfg) {
    const int n = features.rows;
    cfg.validate(n);

    SparseAffinities p = perplexity_affinities(features, cfg.perplexity);
    const bool exaggerate = cfg.exaggeration > 1.0 && cfg.exaggeration_iters > 0;
    if (exaggerate)
        for (auto& v : p.val) v *= cfg.exaggeration;

    std::vector<double> y(static_cast<std::size_t>(n) * 2);
    Rng rng(mix_seed(cfg.seed, 0x74736e65ULL));
    for (auto& v : y) v = rng.normal(0.0, 1e-4);

    std::vector<double> velocity(y.size(), 0.0), gains(y.size(), 1.0);

    // KL is always reported against the true (un-exaggerated) P.
    double p_scale = exaggerate ? cfg.exaggeration : 1.0;
    auto kl_now = [&]() {
        if (p_scale == 1.0) return tsne_kl(p, y);
        SparseAffinities plain = p;
        for (auto& v : plain.val) v /= p_scale;
        return tsne_kl(plain, y);
    };

    Embedding out;
    out.kl_trace.emplace_back(0, kl_now());

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const std::vector<double> grad = tsne_gradient(p, y, cfg.theta);
        for (double g : grad)
            if (!std::isfinite(g))
                throw NumericError(str("tsne: non-finite gradient at iteration ", iter));

        const double momentum =
            iter < cfg.momentum_switch ? cfg.momentum_start : cfg.momentum_final;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const bool same_sign = (grad[i] > 0.0) == (velocity[i] > 0.0);
            gains[i] = same_sign ? gains[i] * 0.8 : gains[i] + 0.2;
            gains[i] = std::max(gains[i], 0.01);
            velocity[i] = momentum * velocity[i] - cfg.learning_rate * gains[i] * grad[i];
            y[i] += velocity[i];
        }
        double mx = 0.0, my = 0.0;
        for (int i = 0; i < n; ++i) {
            mx += y[2 * static_cast<std::size_t>(i)];
            my += y[2 * static_cast<std::size_t>(i) + 1];
        }
        mx /= n;
        my /= n;
        for (int i = 0; i < n; ++i) {
            y[2 * static_cast<std::size_t>(i)] -= mx;
            y[2 * static_cast<std::size_t>(i) + 1] -= my;
        }

        if (exaggerate && iter + 1 == cfg.exaggeration_iters) {
            for (auto& v : p.val) v /= cfg.exaggeration;
            p_scale = 1.0;
        }
        if ((iter + 1) % 50 == 0) out.kl_trace.emplace_back(iter + 1, kl_now());
    }

    out.final_kl = kl_now();
    if (out.kl_trace.empty() || out.kl_trace.back().first != cfg.iterations)
        out.kl_trace.emplace_back(cfg.iterations, out.final_kl);
    out.coords = FeatureMatrix(n, 2);
    for (int i = 0; i < n; ++i) {
        out.coords.at(i, 0) = static_cast<float>(y[2 * static_cast<std::size_t>(i)]);
        out.coords.at(i, 1) = static_cast<float>(y[2 * static_cast<std::size_t>(i) + 1]);
    }
    return out;
}

} // namespace stylerep
