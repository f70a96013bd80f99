#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "gsim/runconfig.hpp"

using namespace gsim;

namespace {

void write_config(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << content;
}

}  // namespace

TEST_SUITE("runconfig") {

TEST_CASE("defaults cover every consumer") {
    const RunConfig cfg = RunConfig::defaults();

    // The typed views must build and validate straight from the defaults.
    const SynthSpec spec = cfg.synth_spec();
    CHECK(spec.num_classes == 200);
    CHECK(spec.samples_per_class_x == 8);
    CHECK(spec.samples_per_class_y == 8);
    CHECK(spec.latent_dim == 6);
    CHECK(spec.input_dim_x == 32);
    CHECK(spec.input_dim_y == 32);
    CHECK(spec.noise_sigma == 0.1);
    CHECK(spec.noise_boost == 3.0);
    CHECK(spec.noisy_class_fraction == 0.15);
    CHECK(spec.scale == 1000.0);
    CHECK(spec.nonlinear);
    CHECK(spec.seed == 1);

    const TrainConfig train = cfg.train_config();
    CHECK(train.learning_rate == 0.0013);
    CHECK(train.reg_w == 1e-4);
    CHECK(train.reg_phi == 1e-4);
    CHECK(train.iterations == 14000);
    CHECK(train.seed == 1);
    CHECK(train.variant == SimilarityVariant::Generalized);
    CHECK(train.f == -1.9);
    CHECK(train.scheme.k_hat == 40);
    CHECK(train.scheme.o1 == 3);
    CHECK(train.scheme.o2 == 3);
    CHECK(train.scheme.pairs_per_anchor == 8);
    CHECK(train.scheme.positive_fraction == 0.5);

    const NetShape shape = cfg.net_shape(32, 32);
    CHECK(shape.branch_x[0].out_dim == 24);
    CHECK(shape.shared[0].out_dim == 16);
    CHECK(shape.shared[1].out_dim == 16);
    CHECK(shape.normalize_output);

    CHECK(cfg.get_int("data.holdout_classes") == 10);
    CHECK(cfg.get_int("eval.splits") == 10);
    CHECK(cfg.get_seed("eval.seed") == 99);
    CHECK(cfg.get_double("grad.step") == 1e-5);
    CHECK(cfg.get_seed("grad.seed") == 7);
}

TEST_CASE("unknown keys are rejected everywhere") {
    RunConfig cfg = RunConfig::defaults();
    CHECK_THROWS_WITH_AS(cfg.set("data.wobble", "3"), doctest::Contains("data.wobble"),
                         ValidationError);
    CHECK_THROWS_AS(cfg.get_string("data.wobble"), ValidationError);
    CHECK_THROWS_AS(cfg.set_expr("no_equals_sign"), ValidationError);
    CHECK_NOTHROW(cfg.set_expr("train.iterations=5"));
    CHECK(cfg.get_int("train.iterations") == 5);
    // Spaces around the separator are tolerated.
    CHECK_NOTHROW(cfg.set_expr(" batch.o1 = 2 "));
    CHECK(cfg.get_int("batch.o1") == 2);
}

TEST_CASE("config files layer over the defaults") {
    const std::string path = "gsim_test_config.cfg";
    write_config(path,
                 "# training tweaks\n"
                 "train.learning_rate = 0.5\n"
                 "\n"
                 "data.num_classes = 12   # inline comment\n"
                 "net.normalize = false\n");
    const RunConfig cfg = RunConfig::from_file(path);
    CHECK(cfg.get_double("train.learning_rate") == 0.5);
    CHECK(cfg.get_int("data.num_classes") == 12);
    CHECK_FALSE(cfg.get_bool("net.normalize"));
    // Untouched keys keep their defaults.
    CHECK(cfg.get_int("train.iterations") == 14000);

    write_config(path, "train.learning_rate = 0.5\nmystery.key = 1\n");
    CHECK_THROWS_WITH_AS(RunConfig::from_file(path), doctest::Contains("line 2"),
                         ValidationError);

    write_config(path, "this line has no assignment\n");
    CHECK_THROWS_WITH_AS(RunConfig::from_file(path), doctest::Contains("line 1"), IoError);

    write_config(path, "train.learning_rate =\n");
    CHECK_THROWS_AS(RunConfig::from_file(path), IoError);

    CHECK_THROWS_AS(RunConfig::from_file("gsim_no_such_config.cfg"), IoError);
    std::remove(path.c_str());
}

TEST_CASE("typed getters validate their parses") {
    RunConfig cfg = RunConfig::defaults();
    cfg.set("train.iterations", "12x");
    CHECK_THROWS_WITH_AS(cfg.get_int("train.iterations"), doctest::Contains("train.iterations"),
                         ValidationError);
    cfg.set("train.learning_rate", "fast");
    CHECK_THROWS_AS(cfg.get_double("train.learning_rate"), ValidationError);
    cfg.set("data.nonlinear", "maybe");
    CHECK_THROWS_AS(cfg.get_bool("data.nonlinear"), ValidationError);
    cfg.set("data.nonlinear", "1");
    CHECK(cfg.get_bool("data.nonlinear"));
    cfg.set("data.nonlinear", "0");
    CHECK_FALSE(cfg.get_bool("data.nonlinear"));
    cfg.set("data.seed", "-3");
    CHECK_THROWS_AS(cfg.get_seed("data.seed"), ValidationError);

    // Typed views surface bad values too.
    cfg = RunConfig::defaults();
    cfg.set("train.variant", "cosine");
    CHECK_THROWS_AS(cfg.train_config(), ValidationError);
    cfg = RunConfig::defaults();
    cfg.set("data.latent_dim", "0");
    CHECK_THROWS_AS(cfg.synth_spec(), ValidationError);
    cfg = RunConfig::defaults();
    cfg.set("net.feature_dim", "-4");
    CHECK_THROWS_AS(cfg.net_shape(8, 8), ValidationError);
}

TEST_CASE("every default key is echoed in sorted order") {
    const RunConfig cfg = RunConfig::defaults();
    const auto& values = cfg.values();
    CHECK(values.size() == 33);
    CHECK(values.count("data.num_classes") == 1);
    CHECK(values.count("batch.positive_fraction") == 1);
    CHECK(values.count("grad.step") == 1);
    // std::map iteration order doubles as the stable echo order.
    std::string prev;
    for (const auto& [key, value] : values) {
        CHECK(prev < key);
        prev = key;
        CHECK_FALSE(value.empty());
    }
}

}  // TEST_SUITE("runconfig")
