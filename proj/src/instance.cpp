#include "fastbcd/instance.hpp"

#include "fastbcd/rng.hpp"

#include <cmath>
#include <numeric>
#include <unordered_set>

namespace fastbcd {

const char* to_string(GenKind kind) {
    switch (kind) {
        case GenKind::P1: return "P1";
        case GenKind::P2: return "P2";
        case GenKind::Custom: return "custom";
    }
    return "custom";
}

GenKind gen_kind_from_string(const std::string& s) {
    if (s == "P1") return GenKind::P1;
    if (s == "P2") return GenKind::P2;
    if (s == "custom") return GenKind::Custom;
    throw std::invalid_argument("unknown generator kind: " + s);
}

void validate(const Instance& inst) {
    if (inst.m() < 1 || inst.n() < 1)
        throw std::invalid_argument("instance must have m >= 1, n >= 1");
    if (inst.b.size() != inst.m())
        throw std::invalid_argument("b has wrong length");
    if (!(inst.tau > 0.0))
        throw std::invalid_argument("tau must be positive");
    if (inst.x_true && inst.x_true->size() != inst.n())
        throw std::invalid_argument("x_true has wrong length");
    for (Index j = 0; j < inst.n(); ++j) {
        if (!(inst.A.col(j).squaredNorm() > 0.0))
            throw std::invalid_argument("column " + std::to_string(j) +
                                        " of A has zero norm");
    }
}

double objective(const Instance& inst, const Vec& x) {
    if (x.size() != inst.n())
        throw std::invalid_argument("objective: x has wrong length");
    return 0.5 * (inst.A * x - inst.b).squaredNorm() +
           inst.tau * x.lpNorm<1>();
}

Vec gradient(const Instance& inst, const Vec& residual) {
    if (residual.size() != inst.m())
        throw std::invalid_argument("gradient: residual has wrong length");
    return inst.A.transpose() * residual;
}

Mat hessian_block(const Instance& inst, std::span<const Index> J) {
    std::unordered_set<Index> seen;
    for (Index j : J) {
        if (j < 0 || j >= inst.n())
            throw std::invalid_argument("hessian_block: index out of range");
        if (!seen.insert(j).second)
            throw std::invalid_argument("hessian_block: duplicate index");
    }
    const Index k = static_cast<Index>(J.size());
    Mat H(k, k);
    for (Index a = 0; a < k; ++a) {
        H(a, a) = inst.A.col(J[a]).squaredNorm();
        for (Index c = a + 1; c < k; ++c) {
            const double v = inst.A.col(J[a]).dot(inst.A.col(J[c]));
            H(a, c) = v;
            H(c, a) = v;
        }
    }
    return H;
}

Vec column_norms_sq(const Mat& A) {
    return A.colwise().squaredNorm().transpose();
}

SolverState make_state(const Instance& inst, const Vec* x0) {
    SolverState st;
    st.x = x0 ? *x0 : Vec::Zero(inst.n());
    if (st.x.size() != inst.n())
        throw std::invalid_argument("make_state: x0 has wrong length");
    st.residual = inst.A * st.x - inst.b;
    st.col_norms_sq = column_norms_sq(inst.A);
    st.f_value = 0.5 * st.residual.squaredNorm() + inst.tau * st.x.lpNorm<1>();
    st.outer_iter = 0;
    return st;
}

void apply_coordinate_delta(const Instance& inst, SolverState& state, Index i,
                            double delta) {
    if (i < 0 || i >= inst.n())
        throw std::invalid_argument("apply_coordinate_delta: index out of range");
    if (delta == 0.0) return;
    const double old_xi = state.x[i];
    // f change: delta*A_i^T r + 0.5*delta^2*H_ii + tau*(|x_i+delta| - |x_i|),
    // with r taken before the update.
    const double dot = inst.A.col(i).dot(state.residual);
    state.f_value += delta * dot + 0.5 * delta * delta * state.col_norms_sq[i] +
                     inst.tau * (std::abs(old_xi + delta) - std::abs(old_xi));
    state.residual += delta * inst.A.col(i);
    state.x[i] = old_xi + delta;
}

void refresh_objective(const Instance& inst, SolverState& state) {
    state.f_value =
        0.5 * state.residual.squaredNorm() + inst.tau * state.x.lpNorm<1>();
}

namespace {

void fill_p1(Mat& A, Xoshiro256ss& rng) {
    double* data = A.data(); // column-major
    const Index total = A.size();
    for (Index k = 0; k < total; ++k) data[k] = rng.normal();
}

void fill_p2(Mat& A, double density, Xoshiro256ss& rng) {
    // Bernoulli(density) pattern, U(0,1) values; all-zero columns are
    // redrawn so the unit-norm scaling below is well defined.
    for (Index j = 0; j < A.cols(); ++j) {
        bool any = false;
        while (!any) {
            for (Index i = 0; i < A.rows(); ++i) {
                if (rng.uniform() < density) {
                    A(i, j) = rng.uniform();
                    any = any || A(i, j) != 0.0;
                } else {
                    A(i, j) = 0.0;
                }
            }
        }
    }
}

} // namespace

Instance generate_instance(GenKind kind, Index n, Index m, double rho,
                           double density, double noise_var,
                           std::uint64_t seed) {
    if (kind == GenKind::Custom)
        throw std::invalid_argument("generate_instance: kind must be P1 or P2");
    if (m < 1 || n < m)
        throw std::invalid_argument("generate_instance: need n >= m >= 1");
    if (!(rho > 0.0 && rho <= 1.0))
        throw std::invalid_argument("generate_instance: need 0 < rho <= 1");
    if (kind == GenKind::P2 && !(density > 0.0 && density <= 1.0))
        throw std::invalid_argument("generate_instance: need 0 < density <= 1");
    if (noise_var < 0.0)
        throw std::invalid_argument("generate_instance: negative noise_var");
    const Index spikes = static_cast<Index>(std::llround(rho * double(m)));
    if (spikes < 1)
        throw std::invalid_argument(
            "generate_instance: round(rho*m) = 0, no spikes to place");

    Xoshiro256ss rng(seed);
    Instance inst;
    inst.A.resize(m, n);
    if (kind == GenKind::P1)
        fill_p1(inst.A, rng);
    else
        fill_p2(inst.A, density, rng);

    for (Index j = 0; j < n; ++j) {
        const double nrm = inst.A.col(j).norm();
        inst.A.col(j) /= nrm;
    }

    // Spike placement: Fisher-Yates prefix of length `spikes`.
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = 0; i < spikes; ++i) {
        const Index j =
            i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(perm[static_cast<std::size_t>(i)],
                  perm[static_cast<std::size_t>(j)]);
    }
    Vec x_true = Vec::Zero(n);
    for (Index i = 0; i < spikes; ++i)
        x_true[perm[static_cast<std::size_t>(i)]] =
            (rng.next() & 1u) ? 1.0 : -1.0;

    Vec noise(m);
    const double sigma = std::sqrt(noise_var);
    for (Index i = 0; i < m; ++i) noise[i] = sigma * rng.normal();

    inst.b = inst.A * x_true + noise;
    inst.tau = 0.1 * (inst.A.transpose() * inst.b).lpNorm<Eigen::Infinity>();
    inst.x_true = std::move(x_true);
    inst.kind = kind;
    inst.seed = seed;
    inst.rho = rho;
    inst.density = (kind == GenKind::P2) ? density : 0.0;
    inst.noise_var = noise_var;
    validate(inst);
    return inst;
}

} // namespace fastbcd
