#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "lassb/common.hpp"
#include "lassb/data.hpp"
#include "lassb/params.hpp"

namespace lassb {

// Poisson log-linear quasi-symmetry design with offset. Two rows per dyad
// (arc i->j first, then j->i, in dyad order). Columns: intercept; sender
// effects for blocks 2..S; receiver effects for blocks 2..S; one shared
// column per unordered block pair {r,s} with r,s >= 2 (the quasi-symmetry
// constraint). First-block effects are the reference level.
struct QsDesign {
    int S = 1;
    int n_cols = 1;
    std::size_t n_rows = 0;
    std::vector<double> X;       // row-major n_rows x n_cols
    std::vector<double> y;       // response counts
    std::vector<double> offset;  // per-row offset
    std::vector<std::string> col_names;
};

inline int qs_col_count(int S) { return 1 + 2 * (S - 1) + (S - 1) * S / 2; }

namespace detail {

// Column of the interaction term for the unordered pair {r,s}, both >= 1
// (0-based), or -1 when the pair involves the reference block.
inline int qs_mu_col(int r, int s, int S) {
    if (r > s) std::swap(r, s);
    if (r < 1) return -1;
    return 1 + 2 * (S - 1) + pair_index(r - 1, s - 1, S - 1);
}

}  // namespace detail

inline QsDesign build_design(const InteractionData& data, const std::vector<double>& offsets) {
    const int S = data.blocks.S();
    require_input(offsets.size() == 2 * data.dyads.size(), "need one offset per arc");
    for (double o : offsets) require_input(std::isfinite(o), "non-finite offset");
    {
        auto sizes = dyad_block_size_vec(data);
        for (int r = 0; r < S; ++r)
            for (int s = r; s < S; ++s)
                require_input(sizes[pair_index(r, s, S)] > 0,
                              "empty dyad-block (" + data.blocks.block_labels[r] + "," +
                                  data.blocks.block_labels[s] + "): design is rank deficient");
    }
    QsDesign d;
    d.S = S;
    d.n_cols = qs_col_count(S);
    d.n_rows = 2 * data.dyads.size();
    d.X.assign(d.n_rows * d.n_cols, 0.0);
    d.y.resize(d.n_rows);
    d.offset = offsets;
    d.col_names.push_back("eta");
    for (int r = 1; r < S; ++r) d.col_names.push_back("eta_I_" + data.blocks.block_labels[r]);
    for (int s = 1; s < S; ++s) d.col_names.push_back("eta_J_" + data.blocks.block_labels[s]);
    for (int r = 1; r < S; ++r)
        for (int s = r; s < S; ++s)
            d.col_names.push_back("eta_IJ_" + data.blocks.block_labels[r] + "_" +
                                  data.blocks.block_labels[s]);
    std::size_t row = 0;
    auto fill_row = [&](int r, int s, double count) {
        double* x = &d.X[row * d.n_cols];
        x[0] = 1.0;
        if (r >= 1) x[r] = 1.0;                  // sender columns are 1..S-1
        if (s >= 1) x[(S - 1) + s] = 1.0;        // receiver columns are S..2S-2
        const int mc = detail::qs_mu_col(r, s, S);
        if (mc >= 0) x[mc] = 1.0;
        d.y[row] = count;
        ++row;
    };
    for (const auto& dy : data.dyads) {
        fill_row(dy.r, dy.s, double(dy.x_ij));
        fill_row(dy.s, dy.r, double(dy.x_ji));
    }
    return d;
}

struct IrlsResult {
    std::vector<double> coef;
    bool converged = false;
    int iterations = 0;
    double deviance = 0.0;
    double condition = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

inline double qs_deviance(const QsDesign& d, const Eigen::VectorXd& eta) {
    double dev = 0.0;
    for (std::size_t i = 0; i < d.n_rows; ++i) {
        const double m = std::exp(eta[long(i)]);
        const double y = d.y[i];
        dev += 2.0 * ((y > 0.0 ? y * std::log(y / m) : 0.0) - (y - m));
    }
    return dev;
}

}  // namespace detail

inline IrlsResult irls_fit(const QsDesign& d, double tol = 1e-12, int max_iter = 100) {
    require_input(tol > 0 && max_iter >= 1, "bad IRLS controls");
    require_input(d.n_rows >= std::size_t(d.n_cols), "fewer rows than columns");
    const long n = long(d.n_rows), p = d.n_cols;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
        d.X.data(), n, p);
    Eigen::Map<const Eigen::VectorXd> y(d.y.data(), n);
    Eigen::Map<const Eigen::VectorXd> off(d.offset.data(), n);

    IrlsResult out;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd eta = X * b + off;
    double dev = detail::qs_deviance(d, eta);
    bool warned_cond = false;

    for (int it = 1; it <= max_iter; ++it) {
        out.iterations = it;
        Eigen::VectorXd m = eta.array().min(700.0).exp();
        Eigen::VectorXd w = m.array().max(1e-12);
        Eigen::VectorXd z = (eta - off).array() + (y - m).array() / w.array();
        Eigen::MatrixXd A = X.transpose() * w.asDiagonal() * X;
        Eigen::VectorXd rhs = X.transpose() * (w.array() * z.array()).matrix();

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        const double emin = es.eigenvalues().minCoeff();
        const double emax = es.eigenvalues().maxCoeff();
        if (!(emin > 0.0) || !std::isfinite(emax))
            throw input_error("quasi-symmetry design is rank deficient");
        out.condition = emax / emin;
        if (out.condition > 1e12 && !warned_cond) {
            out.warnings.push_back("ill-conditioned normal equations (cond " +
                                   std::to_string(out.condition) + ")");
            warned_cond = true;
        }
        Eigen::VectorXd b_new = A.llt().solve(rhs);

        // step halving keeps the deviance non-increasing
        Eigen::VectorXd eta_new = X * b_new + off;
        double dev_new = detail::qs_deviance(d, eta_new);
        int halvings = 0;
        while ((!std::isfinite(dev_new) || dev_new > dev + 1e-12) && halvings < 20) {
            b_new = 0.5 * (b_new + b);
            eta_new = X * b_new + off;
            dev_new = detail::qs_deviance(d, eta_new);
            ++halvings;
        }
        if (!std::isfinite(dev_new) || dev_new > dev + 1e-8)
            throw convergence_error("IRLS diverged (step halving exhausted)");

        const double rel = std::abs(dev - dev_new) / (std::abs(dev) + 1.0);
        b = b_new;
        eta = eta_new;
        dev = dev_new;
        if (rel < tol) {
            out.converged = true;
            break;
        }
    }
    out.coef.assign(b.data(), b.data() + p);
    out.deviance = dev;
    if (!out.converged) throw convergence_error("IRLS did not converge");
    return out;
}

struct RateBlock {
    double theta = 1.0;
    std::vector<double> alpha, beta;  // size S
    std::vector<double> mu;           // S*S, symmetric
};

inline RateBlock extract_rates(int S, const std::vector<double>& coef) {
    require_input(int(coef.size()) == qs_col_count(S), "coefficient vector has wrong length");
    RateBlock rb;
    rb.theta = std::exp(coef[0]);
    rb.alpha.assign(S, 1.0);
    rb.beta.assign(S, 1.0);
    rb.mu.assign(std::size_t(S) * S, 1.0);
    for (int r = 1; r < S; ++r) rb.alpha[r] = std::exp(coef[std::size_t(r)]);
    for (int s = 1; s < S; ++s) rb.beta[s] = std::exp(coef[std::size_t(S - 1 + s)]);
    for (int r = 1; r < S; ++r)
        for (int s = r; s < S; ++s) {
            const double v = std::exp(coef[std::size_t(detail::qs_mu_col(r, s, S))]);
            rb.mu[std::size_t(r) * S + s] = v;
            rb.mu[std::size_t(s) * S + r] = v;
        }
    return rb;
}

inline void apply_rates(ParamSet& p, const RateBlock& rb) {
    p.theta = rb.theta;
    p.alpha = rb.alpha;
    p.beta = rb.beta;
    p.mu = rb.mu;
}

}  // namespace lassb
