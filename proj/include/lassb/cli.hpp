#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "lassb/bootstrap.hpp"
#include "lassb/common.hpp"
#include "lassb/data.hpp"
#include "lassb/derived.hpp"
#include "lassb/em.hpp"
#include "lassb/estep.hpp"
#include "lassb/gof.hpp"
#include "lassb/params.hpp"
#include "lassb/sampler.hpp"

namespace lassb::cli {

struct RunConfig {
    std::string command;  // fit | simulate | bootstrap | gof | derive
    std::string edges;
    std::string blocks;
    std::string params_in;
    std::string out_dir = ".";
    double epsilon = 0.05;
    double tol = 1e-8;
    int max_iter = 1000;
    int bootstrap_reps = 200;
    int gof_reps = 1000;
    int sim_reps = 1;
    double level = 0.95;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string fallback = "quad";  // quad | mc
    int cutoff_max = 6;
};

namespace detail {

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Hashes the inputs that determine the numbers, not where they are written
// (out_dir) or how the work is scheduled (threads).
inline std::string config_hash(const RunConfig& c) {
    std::ostringstream os;
    os << c.command << '|' << c.edges << '|' << c.blocks << '|' << c.params_in << '|'
       << fmt(c.epsilon) << '|' << fmt(c.tol) << '|' << c.max_iter << '|'
       << c.bootstrap_reps << '|' << c.gof_reps << '|' << c.sim_reps << '|' << fmt(c.level)
       << '|' << c.seed << '|' << c.fallback << '|' << c.cutoff_max;
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(os.str())));
    return buf;
}

inline std::string header(const RunConfig& c) {
    std::ostringstream os;
    os << "# " << kVersion << "\n# seed: " << c.seed << "\n# config: " << config_hash(c)
       << '\n';
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    require_input(bool(os), "cannot open output file: " + path);
    os << content;
    require_input(bool(os), "write failed: " + path);
}

inline std::string out_path(const RunConfig& c, const std::string& name) {
    std::filesystem::create_directories(c.out_dir);
    return (std::filesystem::path(c.out_dir) / name).string();
}

inline InteractionData load_data(const RunConfig& c) {
    require_input(!c.edges.empty(), "--edges is required");
    require_input(!c.blocks.empty(), "--blocks is required");
    return load_edges(c.edges, load_blocks(c.blocks));
}

// Accepts either a bare parameter object or a fit report wrapping one.
inline ParamSet load_params_file(const std::string& path) {
    require_input(!path.empty(), "--params is required");
    std::ifstream is(path);
    require_input(bool(is), "cannot open params file: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw input_error("invalid JSON in " + path + ": " + e.what());
    }
    return params_from_json(j.contains("params") ? j.at("params") : j);
}

inline FitConfig fit_config(const RunConfig& c) {
    FitConfig fc;
    fc.epsilon = c.epsilon;
    fc.tol = c.tol;
    fc.max_iter = c.max_iter;
    fc.seed = c.seed;
    if (c.fallback == "quad")
        fc.fallback.kind = sf::FallbackSpec::Kind::quadrature;
    else if (c.fallback == "mc")
        fc.fallback.kind = sf::FallbackSpec::Kind::monte_carlo;
    else
        throw input_error("--fallback must be 'quad' or 'mc'");
    return fc;
}

inline FitResult fit_data(const RunConfig& c, const InteractionData& data) {
    return fit(data, fit_config(c));
}

inline void write_fit_outputs(const RunConfig& c, const FitResult& r) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["seed"] = c.seed;
    j["config"] = config_hash(c);
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["loglik"] = r.loglik_trace.back();
    j["estep_fallbacks"] = r.estep_fallback_count;
    j["params"] = params_to_json(r.params);
    write_file(out_path(c, "params.json"), j.dump(2) + "\n");

    std::ostringstream trace;
    trace << header(c) << "iteration,loglik\n";
    for (std::size_t i = 0; i < r.loglik_trace.size(); ++i)
        trace << i << ',' << fmt(r.loglik_trace[i]) << '\n';
    write_file(out_path(c, "trace.csv"), trace.str());
}

inline int run_fit(const RunConfig& c) {
    const auto data = load_data(c);
    const auto r = fit_data(c, data);
    write_fit_outputs(c, r);
    if (!r.converged) {
        std::cerr << "error: convergence: EM did not converge within " << c.max_iter
                  << " iterations\n";
        return 3;
    }
    return 0;
}

inline int run_simulate(const RunConfig& c) {
    const auto data = load_data(c);
    const auto p = load_params_file(c.params_in);
    require_input(c.sim_reps >= 1, "--reps must be at least 1");
    for (int rep = 1; rep <= c.sim_reps; ++rep) {
        const auto draw = sample_network(data, p, {c.seed, std::uint64_t(rep)});
        std::ostringstream os;
        write_edges(draw, os, header(c));
        write_file(out_path(c, "edges_" + std::to_string(rep) + ".csv"), os.str());
    }
    return 0;
}

inline int run_bootstrap(const RunConfig& c) {
    const auto data = load_data(c);
    const auto fitted = fit_data(c, data);
    if (!fitted.converged) {
        std::cerr << "error: convergence: EM did not converge within " << c.max_iter
                  << " iterations\n";
        return 3;
    }
    const auto bs = bootstrap_ci(data, fitted, c.bootstrap_reps, c.level, c.seed,
                                 fit_config(c), c.threads);
    std::ostringstream os;
    os << header(c) << "parameter,point,lower,upper\n";
    for (const auto& ci : bs.ci)
        os << ci.name << ',' << fmt(ci.point) << ',' << fmt(ci.lower) << ',' << fmt(ci.upper)
           << '\n';
    write_file(out_path(c, "ci.csv"), os.str());
    return 0;
}

inline int run_gof(const RunConfig& c) {
    const auto data = load_data(c);
    const auto p = c.params_in.empty() ? fit_data(c, data).params
                                       : load_params_file(c.params_in);
    GofBins bins;
    require_input(c.cutoff_max >= 0, "--cutoff-max must be nonnegative");
    bins.triangle_cutoff_max = c.cutoff_max;
    const auto report = gof_envelope(data, p, c.gof_reps, c.seed, bins);
    std::ostringstream os;
    os << header(c) << "statistic,bin,observed,q025,q50,q975\n";
    for (const auto& row : report.rows)
        os << row.statistic << ',' << row.bin << ',' << fmt(row.observed) << ','
           << fmt(row.q025) << ',' << fmt(row.q50) << ',' << fmt(row.q975) << '\n';
    write_file(out_path(c, "gof.csv"), os.str());
    return 0;
}

inline int run_derive(const RunConfig& c) {
    const auto data = load_data(c);
    const auto p = c.params_in.empty() ? fit_data(c, data).params
                                       : load_params_file(c.params_in);
    const auto st = e_step(data, p, fit_config(c).fallback);
    const auto d = derived_measures(data, p, st);

    std::ostringstream dy;
    dy << header(c) << "node_i,node_j,rho_ij,rho_ji,gamma_dyad,lambda_star_ij,lambda_star_ji\n";
    for (std::size_t k = 0; k < data.dyads.size(); ++k) {
        const auto& dd = data.dyads[k];
        dy << dd.node_i << ',' << dd.node_j << ',' << fmt(d.rho_hat[k]) << ','
           << fmt(1.0 - d.rho_hat[k]) << ',' << fmt(d.gamma_hat[k]) << ','
           << fmt(d.lambda_star_ij[k]) << ',' << fmt(d.lambda_star_ji[k]) << '\n';
    }
    write_file(out_path(c, "dyads.csv"), dy.str());

    std::ostringstream bl;
    bl << header(c)
       << "row_block,col_block,m,interaction_ratio,discounted_ratio,block_odds_ratio,"
          "var_lambda_star\n";
    const auto& t = d.table;
    const auto label = [&](int b) {
        return p.labels.empty() ? std::to_string(b) : p.labels[std::size_t(b)];
    };
    for (int r = 0; r < t.S; ++r)
        for (int s = 0; s < t.S; ++s)
            bl << label(r) << ',' << label(s) << ','
               << fmt(t.at(t.m, r, s)) << ',' << fmt(t.at(t.interaction_ratio, r, s)) << ','
               << fmt(t.at(t.discounted_ratio, r, s)) << ','
               << fmt(t.at(t.block_odds_ratio, r, s)) << ','
               << fmt(t.at(t.var_lambda_star, r, s)) << '\n';
    write_file(out_path(c, "blocks.csv"), bl.str());
    return 0;
}

}  // namespace detail

// Dispatches one command; returns the process exit status (0 ok, 2 input
// error, 3 convergence failure, 4 internal failure) and prints a one-line
// machine-readable message on failure.
inline int run(const RunConfig& c) {
    try {
        if (c.command == "fit") return detail::run_fit(c);
        if (c.command == "simulate") return detail::run_simulate(c);
        if (c.command == "bootstrap") return detail::run_bootstrap(c);
        if (c.command == "gof") return detail::run_gof(c);
        if (c.command == "derive") return detail::run_derive(c);
        throw input_error("unknown command: " + c.command);
    } catch (const input_error& e) {
        std::cerr << "error: input: " << e.what() << '\n';
        return 2;
    } catch (const convergence_error& e) {
        std::cerr << "error: convergence: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace lassb::cli
