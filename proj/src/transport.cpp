#include "sloc/transport.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "sloc/errors.hpp"

namespace sloc {

namespace {

constexpr double kMassTol = 1e-13;

} // namespace

TransportPlan transport_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu)
{
    if (mu.dimension() != nu.dimension())
        throw InputError("transport_plan: dimension mismatch");
    const Eigen::Index m = mu.atom_count();
    const Eigen::Index k = nu.atom_count();
    if (m + k > 256)
        throw CapabilityError(
            "transport_plan: combined support exceeds 256 atoms; "
            "summarize the larger measure first (quantize_points)");

    Eigen::MatrixXd C(m, k);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            C(i, j) = (mu.atom(i) - nu.atom(j)).squaredNorm();

    std::vector<double> supply(static_cast<std::size_t>(m));
    std::vector<double> deficit(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < m; ++i) supply[i] = mu.weights()[i];
    for (Eigen::Index j = 0; j < k; ++j) deficit[j] = nu.weights()[j];

    Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(m, k);
    std::vector<double> pot_row(static_cast<std::size_t>(m), 0.0);
    std::vector<double> pot_col(static_cast<std::size_t>(k), 0.0);

    const double inf = std::numeric_limits<double>::infinity();
    const Eigen::Index nodes = m + k; // rows first, then columns

    std::vector<double> dist(static_cast<std::size_t>(nodes));
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(nodes));
    std::vector<char> done(static_cast<std::size_t>(nodes));

    auto live_supply = [&]() {
        for (Eigen::Index i = 0; i < m; ++i)
            if (supply[i] > kMassTol) return true;
        return false;
    };
    auto live_deficit = [&]() {
        for (Eigen::Index j = 0; j < k; ++j)
            if (deficit[j] > kMassTol) return true;
        return false;
    };

    while (live_supply() && live_deficit()) {
        // Multi-source Dijkstra on reduced costs.  Flow arcs are kept tight
        // by the potential update, so backward arcs cost zero and forward
        // arcs cost C + p_row - p_col >= 0 (clamped against roundoff).
        std::fill(dist.begin(), dist.end(), inf);
        std::fill(parent.begin(), parent.end(), Eigen::Index{-1});
        std::fill(done.begin(), done.end(), char{0});
        for (Eigen::Index i = 0; i < m; ++i)
            if (supply[i] > kMassTol) dist[i] = 0.0;

        Eigen::Index sink = -1;
        while (true) {
            Eigen::Index u = -1;
            double best = inf;
            for (Eigen::Index v = 0; v < nodes; ++v)
                if (!done[v] && dist[v] < best) {
                    best = dist[v];
                    u = v;
                }
            if (u < 0) break;
            done[u] = 1;
            if (u >= m && deficit[u - m] > kMassTol) {
                sink = u - m;
                break;
            }
            if (u < m) {
                const Eigen::Index i = u;
                for (Eigen::Index j = 0; j < k; ++j) {
                    if (done[m + j]) continue;
                    double rc = C(i, j) + pot_row[i] - pot_col[j];
                    if (rc < 0.0) rc = 0.0;
                    if (dist[i] + rc < dist[m + j]) {
                        dist[m + j] = dist[i] + rc;
                        parent[m + j] = i;
                    }
                }
            } else {
                const Eigen::Index j = u - m;
                for (Eigen::Index i = 0; i < m; ++i) {
                    if (done[i] || flow(i, j) <= 0.0) continue;
                    if (dist[m + j] < dist[i]) {
                        dist[i] = dist[m + j];
                        parent[i] = m + j;
                    }
                }
            }
        }
        if (sink < 0)
            throw NumericalError("transport_plan: no augmenting path found");

        const double reach = dist[m + sink];
        for (Eigen::Index i = 0; i < m; ++i)
            pot_row[i] += std::min(dist[i], reach);
        for (Eigen::Index j = 0; j < k; ++j)
            pot_col[j] += std::min(dist[m + j], reach);

        // Bottleneck along the augmenting path.
        double delta = deficit[sink];
        {
            Eigen::Index node = m + sink;
            while (parent[node] >= 0) {
                const Eigen::Index p = parent[node];
                if (node < m) // backward arc from column p-m into row node
                    delta = std::min(delta, flow(node, p - m));
                node = p;
            }
            // `node` is now the source row.
            delta = std::min(delta, supply[node]);
        }

        Eigen::Index node = m + sink;
        while (true) {
            const Eigen::Index p = parent[node];
            if (p < 0) break;
            if (node >= m) {
                flow(p, node - m) += delta; // forward row -> col
            } else {
                flow(node, p - m) -= delta; // backward col -> row
            }
            node = p;
        }
        supply[node] -= delta;
        deficit[sink] -= delta;
    }

    TransportPlan plan;
    plan.flow = std::move(flow);
    plan.cost = (plan.flow.array() * C.array()).sum();
    return plan;
}

double t2_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu)
{
    return transport_plan(mu, nu).cost;
}

} // namespace sloc
