#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "json.hpp"
#include "lassb/data.hpp"
#include "lassb/sampler.hpp"
#include "test_util.hpp"

using namespace lassb;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LASSB_CLI_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(bool(is));
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

long data_rows(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    long rows = 0;
    bool saw_column_header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!saw_column_header) {
            saw_column_header = true;
            continue;
        }
        ++rows;
    }
    return rows;
}

// One shared workspace with a simulated two-block network on disk.
struct Workspace {
    fs::path dir;
    fs::path edges, blocks, truth;
    long n_dyads = 0;

    Workspace() {
        dir = fs::temp_directory_path() / ("lassb_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        auto structure = testutil::make_structure({"F", "M"}, {100, 150, 100});
        ParamSet p = testutil::recovery_truth();
        p.theta = 3.0;
        p.alpha = {1.0, 4.0};
        p.beta = {1.0, 4.0};
        p.phi = {5.0, 6.0, 6.0, 4.0};
        auto data = sample_network(structure, p, {99, 0});
        n_dyads = long(data.dyads.size());

        edges = dir / "edges.csv";
        std::ofstream e(edges);
        write_edges(data, e);

        blocks = dir / "blocks.csv";
        std::ofstream b(blocks);
        b << "node,block\n";
        for (const auto& id : data.blocks.node_ids)
            b << id << ','
              << data.blocks.block_labels[std::size_t(data.blocks.block_of.at(id))] << '\n';

        truth = dir / "truth.json";
        std::ofstream t(truth);
        t << params_to_json(p).dump(2) << '\n';
    }
};

const Workspace& ws() {
    static Workspace w;
    return w;
}

std::string base_flags() {
    std::ostringstream os;
    os << "--edges " << ws().edges.string() << " --blocks " << ws().blocks.string();
    return os.str();
}

}  // namespace

TEST_CASE("cli fit emits a parseable report and a trace") {
    const fs::path out = ws().dir / "fit";
    REQUIRE(run_cli("fit " + base_flags() + " --max-iter 4000 --seed 7 --out " +
                    out.string()) == 0);

    nlohmann::json j = nlohmann::json::parse(slurp(out / "params.json"));
    CHECK(j.at("version") == kVersion);
    CHECK(j.at("seed") == 7);
    CHECK(j.at("converged") == true);
    CHECK(j.at("iterations").get<int>() > 0);
    const ParamSet p = params_from_json(j.at("params"));
    CHECK(p.S == 2);
    CHECK(p.theta > 0.0);

    const std::string trace = slurp(out / "trace.csv");
    CHECK(trace.rfind("# lassb", 0) == 0);
    CHECK(trace.find("# seed: 7") != std::string::npos);
    CHECK(trace.find("# config: ") != std::string::npos);
    CHECK(trace.find("iteration,loglik") != std::string::npos);
    CHECK(data_rows(trace) == j.at("iterations").get<long>() + 1);
}

TEST_CASE("cli fit then derive covers every dyad") {
    const fs::path out = ws().dir / "derive";
    REQUIRE(run_cli("derive " + base_flags() + " --params " +
                    (ws().dir / "fit" / "params.json").string() + " --out " + out.string()) ==
            0);
    const std::string dyads = slurp(out / "dyads.csv");
    CHECK(data_rows(dyads) == ws().n_dyads);
    CHECK(dyads.find("node_i,node_j,rho_ij,rho_ji,gamma_dyad,lambda_star_ij,lambda_star_ji") !=
          std::string::npos);
    const std::string blocks = slurp(out / "blocks.csv");
    CHECK(data_rows(blocks) == 4);  // S^2 ordered block pairs
}

TEST_CASE("cli simulate writes one reloadable edge file per replicate") {
    const fs::path out = ws().dir / "sim";
    REQUIRE(run_cli("simulate " + base_flags() + " --params " + ws().truth.string() +
                    " --reps 3 --seed 11 --out " + out.string()) == 0);
    for (int rep = 1; rep <= 3; ++rep) {
        const fs::path f = out / ("edges_" + std::to_string(rep) + ".csv");
        REQUIRE(fs::exists(f));
        CHECK(data_rows(slurp(f)) == 2 * ws().n_dyads);  // both directions per dyad
        const auto reloaded = load_edges(f.string(), load_blocks(ws().blocks.string()));
        CHECK(long(reloaded.dyads.size()) == ws().n_dyads);
    }
    CHECK(slurp(out / "edges_1.csv") != slurp(out / "edges_2.csv"));
}

TEST_CASE("cli bootstrap emits one row per free parameter plus measures") {
    const fs::path out = ws().dir / "bs";
    REQUIRE(run_cli("bootstrap " + base_flags() +
                    " --max-iter 4000 --bootstrap-reps 50 --level 0.95 --seed 21 --out " +
                    out.string()) == 0);
    const std::string ci = slurp(out / "ci.csv");
    CHECK(data_rows(ci) == 11 + 3);  // free parameters for S=2, then measure rows
    CHECK(ci.find("parameter,point,lower,upper") != std::string::npos);
    CHECK(ci.find("theta,") != std::string::npos);
    CHECK(ci.find("pi_F_M,") != std::string::npos);
}

TEST_CASE("cli gof emits the fixed bin schema") {
    const fs::path out = ws().dir / "gof";
    REQUIRE(run_cli("gof " + base_flags() + " --params " + ws().truth.string() +
                    " --gof-reps 150 --seed 5 --out " + out.string()) == 0);
    const std::string gof = slurp(out / "gof.csv");
    CHECK(gof.find("statistic,bin,observed,q025,q50,q975") != std::string::npos);
    // 21+21 binary, 8+8 valued, 10 absolute differences, 7 triangle cutoffs
    CHECK(data_rows(gof) == 75);
    CHECK(gof.find("triangles,6,") != std::string::npos);
    CHECK(gof.find("valued_outdegree,5-8,") != std::string::npos);
}

TEST_CASE("cli reruns are byte-identical, including threaded bootstrap") {
    const fs::path a = ws().dir / "det_a", b = ws().dir / "det_b";
    const std::string bs_flags = " --max-iter 4000 --bootstrap-reps 50 --seed 3 --threads 2";
    REQUIRE(run_cli("bootstrap " + base_flags() + bs_flags + " --out " + a.string()) == 0);
    REQUIRE(run_cli("bootstrap " + base_flags() + bs_flags + " --out " + b.string()) == 0);
    CHECK(slurp(a / "ci.csv") == slurp(b / "ci.csv"));

    const std::string gof_flags = " --gof-reps 150 --seed 5";
    REQUIRE(run_cli("gof " + base_flags() + " --params " + ws().truth.string() + gof_flags +
                    " --out " + a.string()) == 0);
    REQUIRE(run_cli("gof " + base_flags() + " --params " + ws().truth.string() + gof_flags +
                    " --out " + b.string()) == 0);
    CHECK(slurp(a / "gof.csv") == slurp(b / "gof.csv"));

    const std::string fit_flags = " --max-iter 4000 --seed 7";
    REQUIRE(run_cli("fit " + base_flags() + fit_flags + " --out " + a.string()) == 0);
    REQUIRE(run_cli("fit " + base_flags() + fit_flags + " --out " + b.string()) == 0);
    CHECK(slurp(a / "params.json") == slurp(b / "params.json"));
    CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
}

TEST_CASE("cli maps failures to documented exit codes") {
    const std::string out = " --out " + (ws().dir / "err").string();
    CHECK(run_cli("fit --edges missing.csv --blocks " + ws().blocks.string() + out) == 2);
    CHECK(run_cli("fit --blocks " + ws().blocks.string() + out) == 2);
    CHECK(run_cli("simulate " + base_flags() + out) == 2);  // no --params
    CHECK(run_cli("fit " + base_flags() + " --fallback bogus" + out) == 2);
    CHECK(run_cli("gof " + base_flags() + " --params " + ws().truth.string() +
                  " --gof-reps 5" + out) == 2);
    CHECK(run_cli("frobnicate " + base_flags() + out) == 2);
    CHECK(run_cli("fit " + base_flags() + " --max-iter 3" + out) == 3);
    CHECK(run_cli("bootstrap " + base_flags() + " --max-iter 4000 --bootstrap-reps 50" +
                  " --level 0.999 --seed 4" + out) == 2);
}
