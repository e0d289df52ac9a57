#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iemd/errors.hpp"

/**
 * Exact solver for the balanced transportation problem behind the Earth
 * Mover's Distance, plus the sensitivity of the optimum with respect to the
 * histogram weights.
 *
 * Supplies are the target-model weights (rows, index u), demands are the
 * candidate-model weights (columns, index v). Every basis is a spanning tree
 * of the bipartite supply/demand graph with exactly N_T + N_C - 1 cells.
 */
namespace iemd::emd {

inline constexpr double kBalanceTolerance = 1e-9;
inline constexpr double kFeasibilityTolerance = 1e-9;
inline constexpr double kOptimalityTolerance = 1e-9;
inline constexpr double kFormTolerance = 1e-8;

/** A (supply, demand) cell of the flow matrix. */
struct Cell
{
    int supply = 0;
    int demand = 0;

    auto operator<=>(const Cell&) const = default;
};

struct TransportProblem
{
    Eigen::VectorXd supplies;   // w_T, length N_T
    Eigen::VectorXd demands;    // w_C, length N_C
    Eigen::MatrixXd costs;      // N_T x N_C ground distances

    int num_supplies() const { return static_cast<int>(supplies.size()); }
    int num_demands() const { return static_cast<int>(demands.size()); }
    int basis_size() const { return num_supplies() + num_demands() - 1; }

    /** Throws InvalidProblem or InfeasibleBalance when the instance is not a valid EMD LP. */
    void validate() const
    {
        if (supplies.size() < 1 || demands.size() < 1)
            throw InvalidProblem("transport problem needs at least one supply and one demand");
        if (costs.rows() != supplies.size() || costs.cols() != demands.size())
            throw InvalidProblem("cost matrix is " + std::to_string(costs.rows()) + "x" +
                                 std::to_string(costs.cols()) + ", expected " +
                                 std::to_string(supplies.size()) + "x" + std::to_string(demands.size()));
        if (!supplies.allFinite() || !demands.allFinite() || !costs.allFinite())
            throw InvalidProblem("transport problem contains non-finite values");
        if ((supplies.array() < 0).any() || (demands.array() < 0).any() || (costs.array() < 0).any())
            throw InvalidProblem("transport problem contains negative entries");
        const double imbalance = std::abs(supplies.sum() - demands.sum());
        if (imbalance > kBalanceTolerance)
            throw InfeasibleBalance("supplies and demands differ by " + std::to_string(imbalance));
    }
};

struct FlowSolution
{
    Eigen::MatrixXd flows;      // f_uv
    std::vector<Cell> basis;    // N_T + N_C - 1 cells, spanning tree
    double objective = 0.0;     // sum d_uv f_uv
    int pivots = 0;
};

/**
 * The optimal EMD written as a linear function of the reduced weight vector
 * w* = [w_C (N_C entries), w_T without its last entry (N_T - 1 entries)],
 * i.e. D* = M . w*.
 */
struct WeightLinearForm
{
    Eigen::VectorXd m_vector;
    int num_supplies = 0;
    int num_demands = 0;

    auto demand_part() const { return m_vector.head(num_demands); }
    auto supply_part() const { return m_vector.tail(num_supplies - 1); }
};

namespace detail {

inline int demand_node(int num_supplies, int v) { return num_supplies + v; }

/**
 * Adjacency of the basis tree. Nodes 0..N_T-1 are supplies, N_T..N_T+N_C-1
 * demands; each edge carries the index of its basis cell.
 */
struct BasisTree
{
    std::vector<std::vector<std::pair<int, int>>> adjacency;   // (neighbor, basis index)

    BasisTree(int num_supplies, int num_demands, const std::vector<Cell>& basis)
        : adjacency(static_cast<std::size_t>(num_supplies + num_demands))
    {
        for (std::size_t k = 0; k < basis.size(); ++k) {
            const int s = basis[k].supply;
            const int d = demand_node(num_supplies, basis[k].demand);
            adjacency[s].emplace_back(d, static_cast<int>(k));
            adjacency[d].emplace_back(s, static_cast<int>(k));
        }
    }
};

/**
 * Dual potentials u (supplies) and v (demands) with u_root = 0 on the last
 * supply and u_i + v_j = c_ij on every basic cell. Returns false when the
 * basis does not reach every node.
 */
inline bool basis_potentials(const Eigen::MatrixXd& costs, const std::vector<Cell>& basis,
                             Eigen::VectorXd& u, Eigen::VectorXd& v)
{
    const int nt = static_cast<int>(costs.rows());
    const int nc = static_cast<int>(costs.cols());
    BasisTree tree(nt, nc, basis);
    std::vector<double> potential(static_cast<std::size_t>(nt + nc), 0.0);
    std::vector<char> seen(static_cast<std::size_t>(nt + nc), 0);
    std::vector<int> stack{nt - 1};
    seen[nt - 1] = 1;
    int visited = 1;
    while (!stack.empty()) {
        const int node = stack.back();
        stack.pop_back();
        for (auto [next, k] : tree.adjacency[node]) {
            if (seen[next])
                continue;
            seen[next] = 1;
            ++visited;
            potential[next] = costs(basis[k].supply, basis[k].demand) - potential[node];
            stack.push_back(next);
        }
    }
    if (visited != nt + nc)
        return false;
    u.resize(nt);
    v.resize(nc);
    for (int i = 0; i < nt; ++i) u[i] = potential[i];
    for (int j = 0; j < nc; ++j) v[j] = potential[nt + j];
    return true;
}

/** Basis cells on the tree path from `from` to `to`, in walk order. */
inline std::vector<int> tree_path(const BasisTree& tree, int from, int to)
{
    const std::size_t n = tree.adjacency.size();
    std::vector<int> parent_node(n, -1), parent_edge(n, -1);
    std::vector<int> queue{from};
    parent_node[from] = from;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int node = queue[head];
        if (node == to)
            break;
        for (auto [next, k] : tree.adjacency[node]) {
            if (parent_node[next] != -1)
                continue;
            parent_node[next] = node;
            parent_edge[next] = k;
            queue.push_back(next);
        }
    }
    std::vector<int> path;
    if (parent_node[to] == -1)
        return path;
    for (int node = to; node != from; node = parent_node[node])
        path.push_back(parent_edge[node]);
    std::reverse(path.begin(), path.end());
    return path;
}

inline double flow_cost(const Eigen::MatrixXd& costs, const Eigen::MatrixXd& flows)
{
    return (costs.array() * flows.array()).sum();
}

}   // namespace detail

/**
 * True when `basis` has N_T + N_C - 1 distinct cells forming a spanning tree
 * of the bipartite supply/demand graph.
 */
inline bool is_spanning_tree(int num_supplies, int num_demands, const std::vector<Cell>& basis)
{
    if (static_cast<int>(basis.size()) != num_supplies + num_demands - 1)
        return false;
    for (const Cell& c : basis)
        if (c.supply < 0 || c.supply >= num_supplies || c.demand < 0 || c.demand >= num_demands)
            return false;
    // n - 1 edges plus connectivity implies acyclic.
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(num_supplies, num_demands);
    Eigen::VectorXd u, v;
    return detail::basis_potentials(zero, basis, u, v);
}

/**
 * Largest violation of the row/column sum and nonnegativity constraints.
 */
inline double feasibility_error(const TransportProblem& problem, const Eigen::MatrixXd& flows)
{
    double err = 0.0;
    err = std::max(err, (flows.rowwise().sum() - problem.supplies).cwiseAbs().maxCoeff());
    err = std::max(err, (flows.colwise().sum().transpose() - problem.demands).cwiseAbs().maxCoeff());
    err = std::max(err, std::max(0.0, -flows.minCoeff()));
    return err;
}

/**
 * Initial basic feasible solution by Russell's approximation method.
 *
 * Each step allocates to the remaining cell minimizing c_ij - ubar_i - vbar_j
 * (ubar/vbar are the largest remaining costs of the row/column) and retires
 * exactly one line, so the allocated cells always form a spanning tree, with
 * zero-flow cells kept when supply and demand exhaust together.
 */
inline FlowSolution russell_initial_solution(const TransportProblem& problem)
{
    problem.validate();
    const int nt = problem.num_supplies();
    const int nc = problem.num_demands();
    const Eigen::MatrixXd& c = problem.costs;

    Eigen::VectorXd supply = problem.supplies;
    Eigen::VectorXd demand = problem.demands;
    std::vector<char> row_active(nt, 1), col_active(nc, 1);
    int rows_left = nt, cols_left = nc;

    FlowSolution sol;
    sol.flows = Eigen::MatrixXd::Zero(nt, nc);
    sol.basis.reserve(static_cast<std::size_t>(problem.basis_size()));

    Eigen::VectorXd row_max(nt), col_max(nc);
    while (true) {
        row_max.setConstant(-std::numeric_limits<double>::infinity());
        col_max.setConstant(-std::numeric_limits<double>::infinity());
        for (int i = 0; i < nt; ++i) {
            if (!row_active[i]) continue;
            for (int j = 0; j < nc; ++j) {
                if (!col_active[j]) continue;
                row_max[i] = std::max(row_max[i], c(i, j));
                col_max[j] = std::max(col_max[j], c(i, j));
            }
        }
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < nt; ++i) {
            if (!row_active[i]) continue;
            for (int j = 0; j < nc; ++j) {
                if (!col_active[j]) continue;
                const double delta = c(i, j) - row_max[i] - col_max[j];
                if (delta < best) {
                    best = delta;
                    bi = i;
                    bj = j;
                }
            }
        }

        const double amount = std::min(supply[bi], demand[bj]);
        sol.flows(bi, bj) = amount;
        sol.basis.push_back({bi, bj});

        if (rows_left == 1 && cols_left == 1)
            break;
        const bool retire_row = cols_left == 1 || (rows_left > 1 && supply[bi] <= demand[bj]);
        if (retire_row) {
            demand[bj] = std::max(0.0, demand[bj] - amount);
            supply[bi] = 0.0;
            row_active[bi] = 0;
            --rows_left;
        } else {
            supply[bi] = std::max(0.0, supply[bi] - amount);
            demand[bj] = 0.0;
            col_active[bj] = 0;
            --cols_left;
        }
    }
    sol.objective = detail::flow_cost(c, sol.flows);
    return sol;
}

struct SimplexOptions
{
    /** Pivot cap; 0 selects the default 10 * N_T * N_C. */
    int max_pivots = 0;
    double optimality_tolerance = kOptimalityTolerance;
};

/**
 * Transportation simplex (MODI) from a basic feasible starting point.
 *
 * Entering cell: most negative reduced cost. After a degenerate pivot the
 * next pivots follow Bland's rule (lowest row-major index entering, lowest
 * index leaving) until a pivot moves flow, which rules out cycling. Leaving
 * ties always go to the lowest cell index.
 */
inline FlowSolution transportation_simplex(const TransportProblem& problem, FlowSolution initial,
                                           const SimplexOptions& options = {})
{
    problem.validate();
    const int nt = problem.num_supplies();
    const int nc = problem.num_demands();
    const Eigen::MatrixXd& c = problem.costs;
    if (initial.flows.rows() != nt || initial.flows.cols() != nc)
        throw DimensionMismatch("initial flow matrix does not match the problem");
    if (!is_spanning_tree(nt, nc, initial.basis))
        throw SingularBasis("initial basis is not a spanning tree");

    const int cap = options.max_pivots > 0 ? options.max_pivots : 10 * nt * nc;
    FlowSolution sol = std::move(initial);
    sol.pivots = 0;
    bool bland = false;

    Eigen::VectorXd u, v;
    std::vector<char> in_basis(static_cast<std::size_t>(nt * nc), 0);
    while (true) {
        if (!detail::basis_potentials(c, sol.basis, u, v))
            throw SingularBasis("basis lost connectivity during pivoting");
        std::fill(in_basis.begin(), in_basis.end(), 0);
        for (const Cell& cell : sol.basis) in_basis[cell.supply * nc + cell.demand] = 1;

        int enter = -1;
        double most_negative = -options.optimality_tolerance;
        for (int idx = 0; idx < nt * nc && !(bland && enter >= 0); ++idx) {
            if (in_basis[idx]) continue;
            const int i = idx / nc, j = idx % nc;
            const double reduced = c(i, j) - u[i] - v[j];
            if (reduced < most_negative) {
                most_negative = reduced;
                enter = idx;
            }
        }
        if (enter < 0)
            break;
        if (sol.pivots >= cap)
            throw CycleLimitExceeded("transportation simplex exceeded " + std::to_string(cap) + " pivots");

        const int ei = enter / nc, ej = enter % nc;
        detail::BasisTree tree(nt, nc, sol.basis);
        // Cycle: entering (+), then path from demand ej back to supply ei alternating -, +, ...
        const std::vector<int> path = detail::tree_path(tree, detail::demand_node(nt, ej), ei);
        int leave = -1;
        double theta = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < path.size(); p += 2) {
            const Cell& cell = sol.basis[path[p]];
            const double f = sol.flows(cell.supply, cell.demand);
            const int idx = cell.supply * nc + cell.demand;
            if (f < theta || (f == theta && idx < sol.basis[leave].supply * nc + sol.basis[leave].demand)) {
                theta = f;
                leave = path[p];
            }
        }
        for (std::size_t p = 0; p < path.size(); ++p) {
            const Cell& cell = sol.basis[path[p]];
            if (p % 2 == 0)
                sol.flows(cell.supply, cell.demand) -= theta;
            else
                sol.flows(cell.supply, cell.demand) += theta;
        }
        sol.flows(sol.basis[leave].supply, sol.basis[leave].demand) = 0.0;
        sol.flows(ei, ej) = theta;
        sol.basis[leave] = {ei, ej};
        ++sol.pivots;
        bland = theta <= 1e-15;

#if !defined(NDEBUG) || defined(IEMD_CHECK_PIVOTS)
        if (feasibility_error(problem, sol.flows) > 10 * kFeasibilityTolerance)
            throw Error("transportation simplex pivot broke feasibility");
#endif
    }
    sol.objective = detail::flow_cost(c, sol.flows);
    return sol;
}

/** Optimal EMD flow: Russell start followed by the transportation simplex. */
inline FlowSolution solve_emd(const TransportProblem& problem, const SimplexOptions& options = {})
{
    return transportation_simplex(problem, russell_initial_solution(problem), options);
}

/**
 * M = d_B^T (H_B*)^-1 for the optimal basis, where H_B* is the basis
 * constraint matrix (demand rows first, then supply rows) without the last
 * supply row. Solved on the basis tree: M holds the dual potentials with the
 * dropped supply pinned to zero.
 */
inline WeightLinearForm weight_linear_form(const TransportProblem& problem, const FlowSolution& optimal)
{
    problem.validate();
    const int nt = problem.num_supplies();
    const int nc = problem.num_demands();
    if (!is_spanning_tree(nt, nc, optimal.basis))
        throw SingularBasis("basis is not a spanning tree of the transport graph");
    Eigen::VectorXd u, v;
    if (!detail::basis_potentials(problem.costs, optimal.basis, u, v))
        throw SingularBasis("basis system is singular");

    WeightLinearForm form;
    form.num_supplies = nt;
    form.num_demands = nc;
    form.m_vector.resize(nc + nt - 1);
    form.m_vector.head(nc) = v;
    form.m_vector.tail(nt - 1) = u.head(nt - 1);
    return form;
}

/** D* = M . [w_C, w_T(1..N_T-1)]. */
inline double evaluate_form(const WeightLinearForm& form, const Eigen::Ref<const Eigen::VectorXd>& demands,
                            const Eigen::Ref<const Eigen::VectorXd>& supplies_truncated)
{
    if (demands.size() != form.num_demands || supplies_truncated.size() != form.num_supplies - 1)
        throw DimensionMismatch("weight vector does not match the linear form layout");
    return form.demand_part().dot(demands) + form.supply_part().dot(supplies_truncated);
}

/** Reduced weight vector w* for a problem, in the form's layout. */
inline Eigen::VectorXd reduced_weights(const TransportProblem& problem)
{
    Eigen::VectorXd w(problem.basis_size());
    w.head(problem.num_demands()) = problem.demands;
    w.tail(problem.num_supplies() - 1) = problem.supplies.head(problem.num_supplies() - 1);
    return w;
}

}   // namespace iemd::emd
