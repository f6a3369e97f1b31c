// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "lassb/bootstrap.hpp"
#include "lassb/cli.hpp"
#include "lassb/derived.hpp"
#include "lassb/em.hpp"
#include "lassb/gof.hpp"
#include "lassb/rng.hpp"
#include "lassb/sampler.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace lassb;

namespace {

int g_failures = 0;

struct Check {
    bool ok = true;
    std::string why;
    void fail(const std::string& reason) {
        if (ok) why = reason;  // keep the first reason
        ok = false;
    }
    void require(bool cond, const std::string& reason) {
        if (!cond) fail(reason);
    }
};

void criterion(int id, const std::string& name, double budget_s,
               const std::function<void(Check&)>& body) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.ok && secs > budget_s) {
        c.ok = false;
        c.why = "over time budget";
    }
    g_failures += !c.ok;
    std::printf("[%s] criterion %d: %s (%.2fs, budget %.0fs)%s%s\n", c.ok ? "PASS" : "FAIL", id,
                name.c_str(), secs, budget_s, c.ok ? "" : " -- ", c.ok ? "" : c.why.c_str());
    std::fflush(stdout);
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

bool within_pct(double got, double want, double pct) { return rel_err(got, want) <= pct / 100.0; }

std::string mismatch(const std::string& what, double got, double want) {
    std::ostringstream os;
    os << what << ": got " << got << ", expected " << want;
    return os.str();
}

// Shared simulation truth with well-identified parameters at modest sizes:
// symmetric cross-block rates and low concentrations.
ParamSet fast_truth() {
    ParamSet p = testutil::recovery_truth();
    p.theta = 3.0;
    p.alpha = {1.0, 4.0};
    p.beta = {1.0, 4.0};
    p.phi = {5.0, 6.0, 6.0, 4.0};
    return p;
}

void criterion1(Check& c) {
    const ParamSet p = testutil::kolkata_params();
    const AssociationTable t = association_table(p);
    c.require(within_pct(t.at(t.interaction_ratio, 1, 0), 2.69, 2.0),
              mismatch("interaction ratio M/F", t.at(t.interaction_ratio, 1, 0), 2.69));
    c.require(within_pct(t.at(t.discounted_ratio, 1, 0), 0.99, 2.0),
              mismatch("discounted ratio M/F", t.at(t.discounted_ratio, 1, 0), 0.99));
    c.require(within_pct(t.at(t.block_odds_ratio, 1, 0), 2.82, 2.0),
              mismatch("block odds ratio", t.at(t.block_odds_ratio, 1, 0), 2.82));
    const double want_m[2][2] = {{0.71, 1.46}, {3.93, 2.85}};
    for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s)
            c.require(within_pct(t.at(t.m, r, s), want_m[r][s], 2.0),
                      mismatch("mean interaction", t.at(t.m, r, s), want_m[r][s]));
}

void criterion2(Check& c) {
    const std::vector<std::pair<double, double>> counts = {{0, 0}, {1, 0}, {5, 1}, {40, 5}};
    const std::vector<double> zs = {-4.5, -2.0, -0.5, 0.0, 0.3, 0.9};
    const std::vector<double> nus = {0.05, 0.5, 5.0};
    const std::vector<double> pis = {0.1, 0.27, 0.5};
    const std::vector<double> phis = {1.0, 12.62, 1000.0};
    int cases = 0;
    double worst = 0.0;
    for (auto [xij, xji] : counts)
        for (double z : zs)
            for (double nu : nus)
                for (double pi : pis) {
                    const double phi = phis[std::size_t(cases) % phis.size()];
                    // invert z = (tau_ji - tau_ij)/(tau_ji + nu) with tau_ji fixed
                    const double tji = 12.0 * nu + 1.0;
                    const double tij = tji - z * (tji + nu);
                    const auto e = dyad_expectations(xij, xji, tij, tji, nu, pi, phi);
                    const auto o = oracle::estep(xij, xji, tij, tji, nu, pi, phi);
                    for (auto [got, want] : {std::pair{e.rho_log_ij, o.rho_log_ij},
                                             {e.rho_log_ji, o.rho_log_ji},
                                             {e.gamma_dyad, o.gamma_dyad},
                                             {e.gamma_arc_ij, o.gamma_arc_ij},
                                             {e.log_gamma_dyad, o.log_gamma_dyad}})
                        worst = std::max(worst, rel_err(got, want));
                    ++cases;
                }
    c.require(cases >= 200, "grid smaller than 200 cases");
    std::ostringstream os;
    os << "worst relative error " << worst << " over " << cases << " cases";
    c.require(worst <= 1e-6, os.str());
}

void criterion3(Check& c) {
    const double sets[5][5] = {{0.3, 0.2, 0.7, 0.4, 3.0},
                               {1.0, 1.0, 0.5, 0.5, 1.0},
                               {0.8, 1.4, 2.0, 0.27, 12.62},
                               {1.5, 0.5, 1.2, 0.6, 5.0},
                               {0.05, 0.05, 0.07, 0.5, 50.0}};
    for (const auto& s : sets) {
        double total = 0.0;
        for (int xij = 0; xij <= 30; ++xij)
            for (int xji = 0; xji <= 30; ++xji)
                total += std::exp(dyad_loglik(xij, xji, s[0], s[1], s[2], s[3], s[4]));
        c.require(std::abs(total - 1.0) <= 1e-6, mismatch("probability mass", total, 1.0));
    }
}

void criterion4(Check& c) {
    const ParamSet truth = fast_truth();
    const auto structure = testutil::make_structure({"F", "M"}, {500, 500, 500});
    FitConfig cfg;
    cfg.max_iter = 10000;
    for (unsigned long seed = 1; seed <= 20 && c.ok; ++seed) {
        const auto data = sample_network(structure, truth, {seed, 0});
        const auto r = fit(data, cfg);  // throws beyond the monotonicity slack
        c.require(r.converged, "seed " + std::to_string(seed) + " did not converge");
        for (std::size_t i = 1; i < r.loglik_trace.size(); ++i)
            c.require(r.loglik_trace[i] >= r.loglik_trace[i - 1] - 1e-8,
                      "trace decreased at step " + std::to_string(i));

        // score equations at the fitted point
        const auto st = e_step(data, r.params);
        const auto ps = detail::pair_stats(data, st);
        for (int rr = 0; rr < 2; ++rr)
            for (int ss = rr; ss < 2; ++ss) {
                const auto& stats = ps[std::size_t(pair_index(rr, ss, 2))];
                const double nu = r.params.nu_at(rr, ss);
                const double score =
                    stats.b * (1.0 + std::log(nu) - sf::digamma(nu)) - (stats.s_mean - stats.s_log);
                c.require(std::abs(score) / (1.0 + std::abs(stats.s_mean)) <= 1e-4,
                          "shape score " + std::to_string(score));
            }
        {
            const auto& stats = ps[std::size_t(pair_index(0, 1, 2))];
            const double pi = r.params.pi_at(0, 1), phi = r.params.phi_at(0, 1);
            const auto f = [&](double t, double lphi) {
                const double pp = 1.0 / (1.0 + std::exp(-t));
                return detail::share_objective(pp, std::exp(lphi), stats.b, stats.s_li,
                                               stats.s_lj);
            };
            const double t0 = std::log(pi) - std::log1p(-pi), l0 = std::log(phi);
            const double f0 = f(t0, l0), h = 1e-5;
            const double g_pi = (f(t0 + h, l0) - f(t0 - h, l0)) / (2 * h);
            const double g_phi = (f(t0, l0 + h) - f(t0, l0 - h)) / (2 * h);
            c.require(std::abs(g_pi) * (1.0 + std::abs(t0)) / (1.0 + std::abs(f0)) <= 1e-4,
                      "share gradient in pi " + std::to_string(g_pi));
            c.require(std::abs(g_phi) * (1.0 + std::abs(l0)) / (1.0 + std::abs(f0)) <= 1e-4,
                      "share gradient in phi " + std::to_string(g_phi));
        }
        // the rate block is an M-step fixed point as well
        const ParamSet next = m_step(data, st, r.params);
        for (int rr = 0; rr < 2; ++rr)
            for (int ss = 0; ss < 2; ++ss)
                c.require(rel_err(tau(next, rr, ss), tau(r.params, rr, ss)) <= 1e-4,
                          "rate fixed point moved");
    }
}

void criterion5(Check& c) {
    // Published two-block estimates except phi_FF reduced to 50 and the
    // weakly identified layers lifted off their noise floors: at this size
    // tau_hat carries relative sd ~ sqrt(1/(nu n) + 1/(theta n)) and nu_hat
    // ~ (1 + nu/theta) sqrt(2/n), so the published theta and nu leave the 5%
    // and 10% bounds at barely one sigma.
    ParamSet truth = testutil::kolkata_params();
    truth.theta = 5.0;
    truth.nu = {2.0, 2.0, 2.0, 2.0};
    truth.phi = {50.0, 12.62, 12.62, 71.32};
    const auto structure = testutil::make_structure({"F", "M"}, {2000, 2000, 2000});
    FitConfig cfg;
    cfg.max_iter = 20000;
    int passes = 0;
    for (unsigned long seed = 1; seed <= 10; ++seed) {
        const auto data = sample_network(structure, truth, {seed, 0});
        bool ok = true;
        try {
            const auto r = fit(data, cfg);
            ok = r.converged;
            for (int rr = 0; rr < 2 && ok; ++rr)
                for (int ss = 0; ss < 2; ++ss)
                    ok = ok && rel_err(tau(r.params, rr, ss), tau(truth, rr, ss)) <= 0.05;
            for (int rr = 0; rr < 2 && ok; ++rr)
                for (int ss = rr; ss < 2; ++ss)
                    ok = ok && rel_err(r.params.nu_at(rr, ss), truth.nu_at(rr, ss)) <= 0.10;
            ok = ok && std::abs(r.params.pi_at(0, 1) - truth.pi_at(0, 1)) <= 0.02;
        } catch (const std::exception&) {
            ok = false;
        }
        passes += ok;
    }
    c.require(passes >= 9, "only " + std::to_string(passes) + "/10 seeds recovered");
}

void criterion6(Check& c) {
    for (int i = 0; i < 50; ++i) {
        const double z = -5.0 + 5.95 * (i + 0.5) / 50.0;
        const auto log_form = sf::hyp2f1(1.0, 1.0, 2.0, z);
        c.require(log_form.converged, "series did not converge");
        c.require(rel_err(log_form.value, -std::log1p(-z) / z) <= 1e-10,
                  mismatch("log identity", log_form.value, -std::log1p(-z) / z));
        const auto geom = sf::hyp2f1(1.0, 3.7, 3.7, z);
        c.require(rel_err(geom.value, 1.0 / (1.0 - z)) <= 1e-10,
                  mismatch("geometric identity", geom.value, 1.0 / (1.0 - z)));
        // Pfaff: F(a,b;c;z) = (1-z)^-a F(a, c-b; c; z/(z-1))
        const double a = 1.0, b = 2.3, cc = 7.1;
        const double lhs = sf::hyp2f1(a, b, cc, z).value;
        const double rhs =
            std::pow(1.0 - z, -a) * sf::hyp2f1(a, cc - b, cc, z / (z - 1.0)).value;
        c.require(rel_err(lhs, rhs) <= 1e-9, mismatch("Pfaff consistency", lhs, rhs));
    }
}

void criterion7(Check& c) {
    Rng rng(2718, 0);
    for (int inst = 0; inst < 50 && c.ok; ++inst) {
        const int n = 5 + int(rng.uniform() * 11);  // 5..15 nodes
        InteractionData data;
        data.blocks.block_labels = {"A"};
        for (int i = 0; i < n; ++i) {
            const std::string id = "n" + std::to_string(i);
            data.blocks.node_ids.push_back(id);
            data.blocks.block_of[id] = 0;
        }
        std::map<std::pair<int, int>, std::pair<long, long>> present;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                if (rng.uniform() < 0.45) continue;
                Dyad dy;
                dy.r = dy.s = 0;
                dy.node_i = "n" + std::to_string(i);
                dy.node_j = "n" + std::to_string(j);
                dy.x_ij = long(rng.uniform() * 25.0);
                dy.x_ji = long(rng.uniform() * 25.0);
                data.dyads.push_back(dy);
                present[{i, j}] = {dy.x_ij, dy.x_ji};
            }
        GofBins bins;
        const auto st = gof_stats(data, bins);

        // cubic triangle enumeration
        std::vector<long> want(std::size_t(bins.triangle_cutoff_max) + 1, 0);
        long triples = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (int k = j + 1; k < n; ++k) {
                    auto a = present.find({i, j}), b = present.find({i, k}),
                         d = present.find({j, k});
                    if (a == present.end() || b == present.end() || d == present.end()) continue;
                    ++triples;
                    const long m = std::min({a->second.first + a->second.second,
                                             b->second.first + b->second.second,
                                             d->second.first + d->second.second});
                    for (int cut = 0; cut <= bins.triangle_cutoff_max; ++cut)
                        want[std::size_t(cut)] += m > cut;
                }
        c.require(st.triples == triples, "triple count mismatch");
        for (std::size_t k = 0; k < want.size(); ++k)
            c.require(st.triangles[k] == want[k], "triangle count mismatch at cutoff " +
                                                      std::to_string(k));

        // degree statistics by direct summation
        std::map<std::string, long> bin_out, val_in;
        for (const auto& dy : data.dyads) {
            bin_out[dy.node_i] += dy.x_ij > 0;
            bin_out[dy.node_j] += dy.x_ji > 0;
            val_in[dy.node_j] += dy.x_ij;
            val_in[dy.node_i] += dy.x_ji;
        }
        std::vector<long> want_bin(std::size_t(bins.binary_cap) + 1, 0);
        std::vector<long> want_val(bins.valued_upper.size() + 1, 0);
        for (const auto& id : data.blocks.node_ids) {
            const long bo = bin_out.count(id) ? bin_out[id] : 0;
            const long vi = val_in.count(id) ? val_in[id] : 0;
            ++want_bin[std::size_t(std::min(bo, long(bins.binary_cap)))];
            std::size_t bin = 0;
            while (bin < bins.valued_upper.size() && vi > bins.valued_upper[bin]) ++bin;
            ++want_val[bin];
        }
        c.require(st.binary_out == want_bin, "binary outdegree histogram mismatch");
        c.require(st.valued_in == want_val, "valued indegree histogram mismatch");
    }
}

void criterion8(Check& c) {
    const ParamSet truth = fast_truth();
    const auto structure = testutil::make_structure({"F", "M"}, {150, 225, 150});
    FitConfig cfg;
    cfg.max_iter = 8000;
    int contain = 0;
    for (unsigned long rep = 1; rep <= 20; ++rep) {
        const auto data = sample_network(structure, truth, {rep, 0});
        try {
            const auto fitted = fit(data, cfg);
            if (!fitted.converged) continue;
            const auto bs = bootstrap_ci(data, fitted, 200, 0.95, 1000 + rep, cfg);
            bool all = true;
            for (const auto& ci : bs.ci) {
                double tv = 0.0;
                if (ci.name == "theta") tv = truth.theta;
                else if (ci.name == "pi_F_M") tv = truth.pi_at(0, 1);
                else if (ci.name == "nu_F_M") tv = truth.nu_at(0, 1);
                else continue;
                all = all && ci.lower <= tv && tv <= ci.upper;
            }
            contain += all;
        } catch (const std::exception&) {
            // a failed repetition simply does not count as containing
        }
    }
    c.require(contain >= 16, "only " + std::to_string(contain) + "/20 repetitions covered");
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LASSB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void criterion9(Check& c) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("lassb_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const auto structure = testutil::make_structure({"F", "M"}, {100, 150, 100});
    const auto data = sample_network(structure, fast_truth(), {404, 0});
    {
        std::ofstream e(dir / "edges.csv");
        write_edges(data, e);
        std::ofstream b(dir / "blocks.csv");
        b << "node,block\n";
        for (const auto& id : data.blocks.node_ids)
            b << id << ','
              << data.blocks.block_labels[std::size_t(data.blocks.block_of.at(id))] << '\n';
        std::ofstream t(dir / "truth.json");
        t << params_to_json(fast_truth()).dump(2) << '\n';
    }
    const std::string base = "--edges " + (dir / "edges.csv").string() + " --blocks " +
                             (dir / "blocks.csv").string();
    const auto twins = [&](const std::string& args, const std::string& file) {
        const fs::path a = dir / "a", b = dir / "b";
        if (run_cli(args + " --out " + a.string()) != 0) {
            c.fail("command failed: " + args);
            return;
        }
        if (run_cli(args + " --out " + b.string()) != 0) {
            c.fail("command failed: " + args);
            return;
        }
        const std::string fa = slurp(a / file), fb = slurp(b / file);
        c.require(!fa.empty() && fa == fb, file + " not byte-identical");
    };
    twins("fit " + base + " --max-iter 4000 --seed 7", "params.json");
    twins("fit " + base + " --max-iter 4000 --seed 7", "trace.csv");
    twins("bootstrap " + base + " --max-iter 4000 --bootstrap-reps 50 --seed 3 --threads 2",
          "ci.csv");
    twins("gof " + base + " --params " + (dir / "truth.json").string() +
              " --gof-reps 150 --seed 5 --threads 2",
          "gof.csv");
    fs::remove_all(dir);
}

}  // namespace

int main() {
    criterion(1, "derived measures reproduce the published two-block study", 1, criterion1);
    criterion(2, "E-step matches quadrature oracles across a 216-case grid", 30, criterion2);
    criterion(3, "observed likelihood normalizes over the 31x31 count grid", 10, criterion3);
    criterion(4, "EM traces are monotone and score equations hold on 20 fits", 300, criterion4);
    criterion(5, "parameters recovered at 2000 dyads per block pair", 600, criterion5);
    criterion(6, "hypergeometric identities and Pfaff consistency", 1, criterion6);
    criterion(7, "goodness-of-fit statistics match brute-force oracles", 10, criterion7);
    criterion(8, "bootstrap intervals cover the simulation truth", 1200, criterion8);
    criterion(9, "reruns are byte-identical, including threaded runs", 600, criterion9);
    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
