// The 2m+1 barrier-condition objectives. Each condition is a scalar function
// of the state whose nonnegativity over its domain certifies the condition:
//   UnsafePositivity      B_{i*}(x)                over Xu (strict)
//   InitNonpositivity(i)  -B_i(x)                  over X0
//   Decrease(i)           a_i'B(x) - B_i(f_pi(x))  over X
#pragma once

#include <vector>

#include "nbf/barrier.hpp"
#include "nbf/graph.hpp"
#include "nbf/quadform.hpp"
#include "nbf/system.hpp"

namespace nbf {

struct ConditionId {
    enum Kind { UnsafePositivity, InitNonpositivity, Decrease } kind;
    Eigen::Index row = 0;  // component index for Init/Decrease (0-based)

    std::string name() const;
};

// All 2m+1 conditions in report order: Unsafe, Init(0..m-1), Decrease(0..m-1).
std::vector<ConditionId> all_conditions(Eigen::Index m);

const Box& condition_domain(const ConditionId& cond, const SafetySpec& spec);

// Identity/MLP bases: the objective as a computation graph. The Decrease graph
// contains two weight-shared copies of the basis with the closed-loop dynamics
// (and controller network, if any) inlined between them.
CompGraph build_condition_graph(const VectorBarrier& bf, const ClosedLoop& sys,
                                const ConditionId& cond);

// Quadratic basis: the objective in closed form. Requires a controller-free
// affine loop (a quadratic composed with a ReLU policy is not a quadratic).
BoxQuadratic build_condition_quad(const VectorBarrier& bf, const ClosedLoop& sys,
                                  const ConditionId& cond);

// Direct (graph-free) evaluation of a condition objective; used for witness
// re-evaluation and cut construction.
double eval_condition(const VectorBarrier& bf, const ClosedLoop& sys, const ConditionId& cond,
                      const Eigen::VectorXd& x);

}  // namespace nbf
