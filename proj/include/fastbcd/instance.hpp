#pragma once

#include "fastbcd/types.hpp"

#include <cstdint>
#include <optional>
#include <span>

namespace fastbcd {

enum class GenKind { P1, P2, Custom };

const char* to_string(GenKind kind);
GenKind gen_kind_from_string(const std::string& s);

/// Problem data for min 0.5*|Ax - b|^2 + tau*|x|_1, immutable once built.
/// Generated instances carry the planted signal and generator metadata.
struct Instance {
    Mat A;       // m x n, dense, column-accessible
    Vec b;       // m
    double tau = 0.0;
    std::optional<Vec> x_true; // planted +-1 spikes, when generated
    GenKind kind = GenKind::Custom;
    std::uint64_t seed = 0;
    double rho = 0.0;
    double density = 0.0;
    double noise_var = 0.0;

    Index m() const { return A.rows(); }
    Index n() const { return A.cols(); }
};

/// Throws std::invalid_argument if sizes, tau, or column norms are invalid.
void validate(const Instance& inst);

/// f(x) = 0.5*|Ax - b|^2 + tau*|x|_1
double objective(const Instance& inst, const Vec& x);

/// Gradient of the quadratic term, A^T * residual, with residual = Ax - b.
Vec gradient(const Instance& inst, const Vec& residual);

/// (A^T A)_JJ for an index set J without duplicates.
Mat hessian_block(const Instance& inst, std::span<const Index> J);

/// Squared column norms of A, the diagonal of A^T A.
Vec column_norms_sq(const Mat& A);

/// Iterate plus the maintained residual r = Ax - b and cached objective.
/// Owned by exactly one solve; all updates keep r and f consistent.
struct SolverState {
    Vec x;
    Vec residual;     // Ax - b
    Vec col_norms_sq; // H_ii
    double f_value = 0.0;
    int outer_iter = 0;
};

SolverState make_state(const Instance& inst, const Vec* x0 = nullptr);

/// x_i += delta with an O(m) residual update and incremental f update.
void apply_coordinate_delta(const Instance& inst, SolverState& state, Index i,
                            double delta);

/// Recompute f from the maintained residual; clears incremental drift.
void refresh_objective(const Instance& inst, SolverState& state);

/// Synthetic instances. P1: i.i.d. N(0,1) matrix; P2: Bernoulli(density)
/// sparsity pattern with U(0,1) values. Columns are scaled to unit l2 norm,
/// x_true gets round(rho*m) random +-1 spikes, b = A*x_true + noise,
/// tau = 0.1 * |A^T b|_inf.
Instance generate_instance(GenKind kind, Index n, Index m, double rho,
                           double density, double noise_var,
                           std::uint64_t seed);

} // namespace fastbcd
