#include <catch2/catch_amalgamated.hpp>

#include "hydrohom/cli.hpp"

using namespace hydrohom;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("hydrohom_test_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("binary fields round-trip bit exactly") {
    auto dir = temp_dir("fields");
    Grid g(2, {16, 12}, Bc::dirichlet, {2.0, 1.5});
    FieldArray f(g, 3);
    RngStream rng(42);
    for (double& v : f.data) v = rng.sym() * 1e3;
    io::write_field(dir / "f", f, "testfield", 3);
    io::LoadedField back = io::read_field(dir / "f");
    CHECK(back.name == "testfield");
    CHECK(back.m == 3);
    CHECK(back.field.comps == 3);
    CHECK(back.field.grid.same_layout(g));
    REQUIRE(back.field.data.size() == f.data.size());
    for (std::size_t i = 0; i < f.data.size(); ++i)
        CHECK(back.field.data[i] == f.data[i]); // bit exact
}

TEST_CASE("1D CSV export carries 17 significant digits") {
    auto dir = temp_dir("csv");
    Grid g(1, {8, 1}, Bc::periodic);
    FieldArray f(g, 1);
    f.at(0, 0) = 1.0 / 3.0;
    io::write_field_csv(dir / "f.csv", f);
    const std::string text = slurp(dir / "f.csv");
    CHECK(text.find("0.33333333333333331") != std::string::npos);
    CHECK(text.rfind("x,v0", 0) == 0);
}

TEST_CASE("tensor JSON round-trips through the vendored parser") {
    EffectiveTensor T;
    T.dim = 1;
    T.m = 2;
    T.mat = Eigen::Matrix2d::Zero();
    T.mat << M_PI, 1.0 / 3.0, 1.0 / 3.0, std::sqrt(2.0);
    T.finalize();
    nlohmann::json j = nlohmann::json::parse(io::tensor_json(T));
    CHECK(j["kind"] == "a_sharp");
    CHECK(j["m"] == 2);
    std::vector<double> mat = j["matrix"].get<std::vector<double>>();
    CHECK(mat[0] == T.mat(0, 0)); // %.17g round-trips exactly
    CHECK(mat[3] == T.mat(1, 1));
}

TEST_CASE("unknown config keys are rejected") {
    nlohmann::json j{{"command", "check"}, {"grdi", 1}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    nlohmann::json j2{{"command", "check"}, {"medium", {{"presett", "dirac"}}}};
    CHECK_THROWS_AS(parse_config(j2), ConfigError);
    nlohmann::json j3{{"command", "frobnicate"}};
    CHECK_THROWS_AS(parse_config(j3), ConfigError);
    nlohmann::json j4{{"command", "check"}, {"grid", {{"n", {3, 3}}}}};
    CHECK_THROWS_AS(parse_config(j4), ConfigError);
}

TEST_CASE("config errors carry exit code 2 and leave no outputs") {
    auto dir = temp_dir("cfgerr");
    const auto out = dir / "results";
    nlohmann::json j{{"command", "tensor"}, {"bogus", true}, {"out", out.string()}};
    try {
        parse_config(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.exit_code() == 2);
    }
    CHECK_FALSE(std::filesystem::exists(out));
}

TEST_CASE("degenerate media exit with code 4 through the run path") {
    auto dir = temp_dir("degen");
    RunConfig cfg;
    cfg.command = "tensor";
    cfg.out = (dir / "o").string();
    cfg.grid_n = {16, 16};
    cfg.medium.preset = "dirac";
    cfg.medium.gamma.kind = "constant";
    cfg.medium.n0 = 0.0;
    cfg.medium.n1 = 0.0;
    try {
        run(cfg);
        FAIL("expected DegenerateForm");
    } catch (const DegenerateForm& e) {
        CHECK(e.exit_code() == 4);
    }
}

TEST_CASE("tensor command writes parseable artifacts") {
    auto dir = temp_dir("tensorcmd");
    RunConfig cfg;
    cfg.command = "tensor";
    cfg.out = (dir / "o").string();
    cfg.grid_n = {16, 16};
    cfg.threads = 1;
    CHECK(run(cfg) == 0);
    nlohmann::json t = nlohmann::json::parse(slurp(dir / "o" / "tensor.json"));
    CHECK(t["positive_definite"].get<bool>());
    CHECK(t["matrix"].size() == 16);
    nlohmann::json s = nlohmann::json::parse(slurp(dir / "o" / "summary.json"));
    CHECK(s["oscillation"].get<double>() > 0.0);
    CHECK(std::filesystem::exists(dir / "o" / "fields" / "current0.bin"));
    CHECK(std::filesystem::exists(dir / "o" / "fields" / "current0.json"));
    CHECK(std::filesystem::exists(dir / "o" / "rows.csv"));
}

TEST_CASE("transport command reports blocks and the WF gap") {
    auto dir = temp_dir("transport");
    RunConfig cfg;
    cfg.command = "transport";
    cfg.out = (dir / "o").string();
    cfg.grid_dim = 1;
    cfg.grid_n = {256, 1};
    cfg.medium.gamma.kind = "sin1";
    cfg.medium.eta = 1.0;
    CHECK(run(cfg) == 0);
    nlohmann::json s = nlohmann::json::parse(slurp(dir / "o" / "summary.json"));
    CHECK(s.contains("sigma"));
    CHECK(s.contains("lorenz"));
    CHECK(s["wf_deviation"].get<double>() > 0.0);
}

TEST_CASE("bounds command reports nonnegative margins") {
    auto dir = temp_dir("bounds");
    RunConfig cfg;
    cfg.command = "bounds";
    cfg.out = (dir / "o").string();
    cfg.grid_n = {16, 16};
    CHECK(run(cfg) == 0);
    nlohmann::json s = nlohmann::json::parse(slurp(dir / "o" / "summary.json"));
    CHECK(s["bound_holds"].get<bool>());
    CHECK(s["worst_margin"].get<double>() >= -1e-9);
}

TEST_CASE("identical configs and seeds give byte-identical artifacts") {
    auto dir = temp_dir("determinism");
    RunConfig cfg;
    cfg.command = "bounds";
    cfg.grid_n = {16, 16};
    cfg.seed = 9;
    cfg.out = (dir / "a").string();
    CHECK(run(cfg) == 0);
    cfg.out = (dir / "b").string();
    CHECK(run(cfg) == 0);
    for (const char* f : {"summary.json", "rows.csv", "tensor.json"})
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}

TEST_CASE("cli entry point maps errors to exit codes") {
    auto dir = temp_dir("cliexit");
    // malformed config file
    {
        std::ofstream f(dir / "bad.json");
        f << "{ not json";
    }
    std::string cfg_arg = "--config";
    std::string cfg_path = (dir / "bad.json").string();
    std::string cmd = "check";
    char* argv1[] = {const_cast<char*>("hydrohom"), const_cast<char*>(cmd.c_str()),
                     const_cast<char*>(cfg_arg.c_str()), const_cast<char*>(cfg_path.c_str())};
    CHECK(cli_main(4, argv1) == 2);

    // missing command entirely
    char* argv2[] = {const_cast<char*>("hydrohom")};
    CHECK(cli_main(1, argv2) == 2);
}

TEST_CASE("sweep configs parse into study options") {
    nlohmann::json j{{"command", "sweep-eps"},
                     {"sweep", {{"eps", {0.5, 0.25}}, {"points_per_cell", 8}}}};
    RunConfig cfg = parse_config(j);
    CHECK(cfg.sweep.eps == std::vector<double>{0.5, 0.25});
    CHECK(cfg.command == "sweep-eps");
}
