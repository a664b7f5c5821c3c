#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfa/config.hpp"

#include <filesystem>
#include <fstream>

using namespace sfa;

namespace {

std::string write_temp(const std::string& text) {
    static int counter = 0;
    const auto path =
        std::filesystem::temp_directory_path() / ("sfa_cfg_" + std::to_string(counter++) + ".cfg");
    std::ofstream os(path);
    os << text;
    return path.string();
}

} // namespace

TEST_CASE("key=value parsing with comments and namespaces") {
    ConfigMap cm = ConfigMap::parse_text(
        "# a comment\n"
        "seed = 42\n"
        "train.steps = 100   # trailing comment\n"
        "\n"
        "audit.k = 10 20 30\n"
        "train.lr = 1e-3\n");
    CHECK(cm.get_u64("seed", 0) == 42);
    CHECK(cm.get_int("train.steps", 0) == 100);
    CHECK(cm.get_double("train.lr", 0.0) == 1e-3);
    CHECK(cm.get_ints("audit.k", {}) == std::vector<int>{10, 20, 30});
}

TEST_CASE("parse errors carry the offending line number") {
    SUBCASE("missing equals") {
        try {
            ConfigMap::parse_text("seed = 1\nbogus line\n");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line == 2);
        }
    }
    SUBCASE("duplicate key") {
        try {
            ConfigMap::parse_text("a = 1\na = 2\n");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line == 2);
        }
    }
    SUBCASE("bad number") {
        ConfigMap cm = ConfigMap::parse_text("x = 3.abc\n");
        try {
            cm.get_double("x", 0.0);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line == 1);
        }
    }
}

TEST_CASE("unknown keys are rejected with their line") {
    const std::string path = write_temp(
        "seed = 1\n"
        "preset = stdnormal\n"
        "train.stepz = 10\n");
    try {
        load_run_config(path, {}, std::nullopt);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("train.stepz") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("a run config needs a seed from file or flag") {
    const std::string path = write_temp("preset = stdnormal\n");
    CHECK_THROWS_AS((void)load_run_config(path, {}, std::nullopt), ConfigError);
    const RunConfig rc = load_run_config(path, {}, 77);
    CHECK(rc.seed == 77);
    std::filesystem::remove(path);
}

TEST_CASE("defaults follow the shipped preset and can be overridden") {
    const std::string path = write_temp("seed = 9\npreset = default\n");
    const RunConfig rc = load_run_config(path, {"train.steps=123", "sample.method=sde"}, std::nullopt);
    CHECK(rc.gmm.dim == 8);
    CHECK(rc.gmm.components() == 4);
    CHECK(rc.schedule.T == 1000);
    CHECK(rc.schedule.offset == 0.008);
    CHECK(rc.train.steps == 123);
    CHECK(rc.train.batch == 256);
    CHECK(rc.train.lr == 1e-3);
    CHECK(rc.train.hidden == std::vector<int>{128, 128, 128});
    CHECK(rc.audit.samples_per_k == 256);
    CHECK(rc.audit.brownian_n == 1000);
    CHECK(rc.audit.brownian_horizon == 9.0);
    CHECK(rc.audit.proj_anchors == 4);
    CHECK(rc.audit.proj_n_per_segment == 256);
    CHECK(rc.sample_method == "sde");
    CHECK(rc.stein_samples == 256);
    std::filesystem::remove(path);
}

TEST_CASE("explicit mixtures parse and validate") {
    const std::string path = write_temp(
        "seed = 3\n"
        "mixture.d = 2\n"
        "mixture.weights = 0.5 0.5\n"
        "mixture.mean.0 = 1.0 0.0\n"
        "mixture.var.0 = 0.5 0.5\n"
        "mixture.mean.1 = -1.0 0.0\n"
        "mixture.var.1 = 0.5 0.5\n");
    const RunConfig rc = load_run_config(path, {}, std::nullopt);
    CHECK(rc.gmm.dim == 2);
    CHECK(rc.gmm.components() == 2);
    CHECK(rc.gmm.means[1][0] == -1.0);
    std::filesystem::remove(path);
}

TEST_CASE("bad values are usage errors") {
    SUBCASE("negative weights") {
        const std::string path = write_temp(
            "seed = 3\n"
            "mixture.d = 1\n"
            "mixture.weights = 2.0 -1.0\n"
            "mixture.mean.0 = 0\n"
            "mixture.var.0 = 1\n"
            "mixture.mean.1 = 1\n"
            "mixture.var.1 = 1\n");
        CHECK_THROWS_AS((void)load_run_config(path, {}, std::nullopt), ConfigError);
        std::filesystem::remove(path);
    }
    SUBCASE("audit k out of range") {
        const std::string path = write_temp("seed = 1\npreset = stdnormal\naudit.k = 0 10\n");
        CHECK_THROWS_AS((void)load_run_config(path, {}, std::nullopt), ConfigError);
        std::filesystem::remove(path);
    }
    SUBCASE("unknown path kind") {
        const std::string path = write_temp("seed = 1\npreset = stdnormal\naudit.kinds = moebius\n");
        CHECK_THROWS_AS((void)load_run_config(path, {}, std::nullopt), ConfigError);
        std::filesystem::remove(path);
    }
    SUBCASE("bad sample method") {
        const std::string path = write_temp("seed = 1\npreset = stdnormal\nsample.method = magic\n");
        CHECK_THROWS_AS((void)load_run_config(path, {}, std::nullopt), ConfigError);
        std::filesystem::remove(path);
    }
    SUBCASE("malformed override") {
        const std::string path = write_temp("seed = 1\npreset = stdnormal\n");
        CHECK_THROWS_AS((void)load_run_config(path, {"oops"}, std::nullopt), ConfigError);
        std::filesystem::remove(path);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS((void)load_run_config("/nonexistent/x.cfg", {}, std::nullopt), ConfigError);
    }
}

TEST_CASE("mixtures serialize to config text and parse back identically") {
    const GaussianMixture g = make_preset("default");
    const std::string path = write_temp("seed = 5\n" + mixture_to_config(g));
    const RunConfig rc = load_run_config(path, {}, std::nullopt);
    CHECK(rc.gmm.dim == g.dim);
    CHECK(rc.gmm.weights == g.weights);
    CHECK(rc.gmm.means == g.means);
    CHECK(rc.gmm.variances == g.variances);
    std::filesystem::remove(path);
}

TEST_CASE("exec mode parses") {
    const std::string path = write_temp("seed = 1\npreset = stdnormal\nexec = serial\n");
    const RunConfig rc = load_run_config(path, {}, std::nullopt);
    CHECK(rc.exec == Exec::Serial);
    std::filesystem::remove(path);
}
