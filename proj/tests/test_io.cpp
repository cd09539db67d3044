#include <catch2/catch_amalgamated.hpp>

#include <dwave/config.hpp>
#include <dwave/io.hpp>

#include "test_support.hpp"

using namespace dwave;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratchDir(const std::string& name)
{
    auto d = fs::temp_directory_path() / ("dwave_io_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

json minimal()
{
    return json{{"schema_version", 1}, {"scenario", "t"}, {"alpha", 1.0}};
}

std::string configErrorField(const json& j)
{
    try {
        parseConfig(j);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<no error>";
}

} // namespace

TEST_CASE("csv round trip is bit exact", "[io]")
{
    std::mt19937_64 rng(61);
    CsvTable t({"a", "b", "c"});
    for (int i = 0; i < 50; ++i) {
        Field x = testing::randomField(rng, 3, -1e6, 1e6);
        t.addRow({x[0], x[1] * 1e-300, x[2]});
    }
    t.addRow({0.0, -0.0, 1.0 / 3.0});
    auto dir = scratchDir("csv");
    t.write(dir / "t.csv");
    CHECK_FALSE(fs::exists(dir / "t.csv.tmp"));
    auto back = readCsv(dir / "t.csv");
    REQUIRE(back.rows() == t.rows());
    CHECK(back.header() == t.header());
    for (std::size_t i = 0; i < t.rows(); ++i)
        CHECK(back.row(i) == t.row(i));
    CHECK_THROWS_AS(t.addRow({1.0}), InvalidInput);
}

TEST_CASE("atomic write replaces the target", "[io]")
{
    auto dir = scratchDir("atomic");
    writeFileAtomic(dir / "sub" / "x.txt", "first");
    writeFileAtomic(dir / "sub" / "x.txt", "second");
    std::ifstream in(dir / "sub" / "x.txt");
    std::string s((std::istreambuf_iterator<char>(in)), {});
    CHECK(s == "second");
    CHECK_FALSE(fs::exists(dir / "sub" / "x.txt.tmp"));
}

TEST_CASE("state dump round trip", "[io]")
{
    std::mt19937_64 rng(62);
    auto g = SpatialGrid({Interval{0.0, 2.0}, Interval{-1.0, 1.5}}, {5, 7});
    std::vector<double> times{0.0, 0.25, 0.5};
    std::vector<State> states;
    for (int i = 0; i < 3; ++i)
        states.push_back(State{testing::randomField(rng, g.size()), testing::randomField(rng, g.size())});
    auto dir = scratchDir("dump");
    writeFileAtomic(dir / "s.bin", encodeStates(g, times, states));
    CHECK(fs::file_size(dir / "s.bin") == 8 + 4 + 4 + 2 * (4 + 16) + 16 + 3 * (8 + 2 * 35 * 8));
    auto d = readStates(dir / "s.bin");
    CHECK(d.grid.sameAs(g));
    CHECK(d.times == times);
    REQUIRE(d.states.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(d.states[i].u == states[i].u);
        CHECK(d.states[i].v == states[i].v);
    }
    writeFileAtomic(dir / "bad.bin", "NOTADUMP........");
    CHECK_THROWS_AS(readStates(dir / "bad.bin"), InvalidInput);
    CHECK_THROWS_AS(encodeStates(g, {0.0}, states), InvalidInput);
}

TEST_CASE("report format", "[io]")
{
    Report r;
    r.section("a");
    r.add("x", 0.5);
    r.add("n", 3);
    r.add("ok", true);
    r.note("hello");
    r.section("b");
    r.add("s", "text");
    CHECK(r.str() == "[a]\nx = 0.5\nn = 3\nok = true\n# hello\n\n[b]\ns = text\n");
}

TEST_CASE("config parsing", "[io][config]")
{
    SECTION("minimal config takes defaults")
    {
        auto c = parseConfig(minimal());
        CHECK(c.effectiveAlpha() == 1.0);
        CHECK(c.integrator.dt == 1e-2);
        CHECK(c.bound.r == 4.0);
        CHECK(c.MB == 1.0);
        CHECK_FALSE(c.grid.has_value());
    }
    SECTION("full config")
    {
        json j = minimal();
        j["grid"] = {{"extent", {{0.0, 4.0}}}, {"n", {63}}};
        j["model"] = {{"kind", "cubic"}, {"a", 1.0}, {"b", 1.0}};
        j["integrator"] = {{"dt", 0.02}, {"T", 3.0}, {"save_every", 5}};
        j["spectral"] = {{"lambda_sweep", {{"min", 1.0}, {"max", 100.0}, {"count", 3}}}};
        j["bound"] = {{"M_r", 2.0}, {"r", 6.0}, {"lambda1", 3.0}};
        auto c = parseConfig(j);
        REQUIRE(c.grid);
        CHECK(c.grid->n == std::vector<int>{63});
        CHECK(c.integrator.saveEvery == 5);
        CHECK(c.bound.Mr == 2.0);
        CHECK(*c.bound.lambda1 == 3.0);
        auto sw = lambdaSweep(c.spectral);
        REQUIRE(sw.size() == 3);
        CHECK(sw[0] == 1.0);
        CHECK(std::abs(sw[1] - 10.0) < 1e-12);
        CHECK(std::abs(sw[2] - 100.0) < 1e-12);
        auto g = buildGrid(c);
        CHECK(g.size() == 63);
        CHECK(buildModel(c, g).name.find("cubic") != std::string::npos);
    }
    SECTION("epsilon form")
    {
        json j = minimal();
        j.erase("alpha");
        j["epsilon"] = 0.25;
        CHECK(parseConfig(j).effectiveAlpha() == 2.0);
        j["alpha"] = 1.0;
        CHECK(configErrorField(j) == "alpha");
        j.erase("alpha");
        j.erase("epsilon");
        CHECK(configErrorField(j) == "alpha");
        j["epsilon"] = 2.0;
        CHECK(configErrorField(j) == "epsilon");
    }
    SECTION("errors name the offending field")
    {
        json j = minimal();
        j["bogus"] = 1;
        CHECK(configErrorField(j) == "bogus");
        j = minimal();
        j["integrator"] = {{"dt", "fast"}};
        CHECK(configErrorField(j) == "integrator.dt");
        j = minimal();
        j["integrator"] = {{"dt", -1.0}};
        CHECK(configErrorField(j) == "integrator.dt");
        j = minimal();
        j["model"] = {{"kind", "quintic"}};
        CHECK(configErrorField(j) == "model.kind");
        j = minimal();
        j["tangent"] = {{"d", 2}, {"extra", true}};
        CHECK(configErrorField(j) == "tangent.extra");
        j = minimal();
        j["schema_version"] = 2;
        CHECK(configErrorField(j) == "schema_version");
        j = minimal();
        j["bound"] = {{"r", 3.0}};
        CHECK(configErrorField(j) == "bound.r");
        j = minimal();
        j["beta_sigma"] = 1.5;
        CHECK(configErrorField(j) == "beta_sigma");
        j = minimal();
        j["grid"] = {{"extent", {{0.0, 1.0}}}, {"n", {4, 4}}};
        CHECK(configErrorField(j).rfind("grid", 0) == 0);
        j = minimal();
        j.erase("scenario");
        CHECK(configErrorField(j) == "scenario");
    }
    SECTION("files")
    {
        auto dir = scratchDir("cfg");
        {
            std::ofstream out(dir / "c.json");
            out << "// comment\n" << minimal().dump();
        }
        CHECK(loadConfig(dir / "c.json").baseDir == dir);
        {
            std::ofstream out(dir / "broken.json");
            out << "{ not json";
        }
        try {
            loadConfig(dir / "broken.json");
            FAIL("expected a config error");
        } catch (const ConfigError& e) {
            CHECK(e.field() == "--config");
        }
        CHECK_THROWS_AS(loadConfig(dir / "missing.json"), ConfigError);
        CHECK(exitCode(ErrorKind::Config) == 2);
    }
}

TEST_CASE("initial states are seeded", "[io][config]")
{
    auto g = SpatialGrid::line(0.0, 4.0, 31);
    InitialSpec s;
    std::mt19937_64 a(7), b(7), c(8);
    auto Ua = buildInitial(s, g, a), Ub = buildInitial(s, g, b), Uc = buildInitial(s, g, c);
    CHECK(Ua.u == Ub.u);
    CHECK((Ua.u - Uc.u).norm() > 0.0);
    CHECK(Ua.v.norm() == 0.0);
    s.kind = "sine";
    s.mode = 2;
    auto Us = buildInitial(s, g, a);
    CHECK(std::abs(Us.u[15]) < 1e-12); // sin(2π·2/4) at the midpoint
}
