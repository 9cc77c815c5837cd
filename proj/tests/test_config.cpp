#include "acam/config.hpp"
#include "acam/tensor.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace acam;

TEST_CASE("parse_config_text: empty text yields the defaults") {
    RunConfig c = parse_config_text("");
    CHECK(c.scales == 3);
    CHECK(c.n_classifiers == 4);
    CHECK(c.categories == 4);
    CHECK(c.epochs == 15);
    CHECK(c.lr == 5e-4);
    CHECK(c.momentum == 0.9);
    CHECK(c.batch_size == 8);
    CHECK(c.image_size == 64);
    CHECK(c.margin_fraction == 0.1);
    CHECK_FALSE(c.freeze_backbone);
    CHECK(c.seed == 42);
    CHECK(c.otsu_bins == 256);
    CHECK(c.aggregate_on == AggregateOn::Probs);
}

TEST_CASE("parse_config_text: overrides, comments, and blank lines") {
    RunConfig c = parse_config_text(
        "# full-scale-ish run\n"
        "\n"
        "scales = 2\n"
        "n_classifiers=16   # dense bank\n"
        "lr = 1e-4\n"
        "freeze_backbone = true\n"
        "aggregate_on = logits\n"
        "seed = 7\n");
    CHECK(c.scales == 2);
    CHECK(c.n_classifiers == 16);
    CHECK(c.lr == 1e-4);
    CHECK(c.freeze_backbone);
    CHECK(c.aggregate_on == AggregateOn::Logits);
    CHECK(c.seed == 7);
    // Untouched keys keep their defaults.
    CHECK(c.epochs == 15);
}

TEST_CASE("parse_config_text rejects unknown keys with the line number") {
    try {
        parse_config_text("scales = 1\nlearning_rate = 0.1\n", "run.cfg");
        FAIL("expected format_error");
    } catch (const format_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("run.cfg:2") != std::string::npos);
        CHECK(msg.find("learning_rate") != std::string::npos);
    }
}

TEST_CASE("parse_config_text rejects out-of-range and malformed values") {
    CHECK_THROWS_AS(parse_config_text("scales = 0\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("epochs = -1\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("lr = 0\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("momentum = 1.5\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("momentum = -0.1\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("batch_size = 0\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("image_size = 7\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("margin_fraction = -0.2\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("otsu_bins = 1\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("aggregate_on = maybe\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("freeze_backbone = yes\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("epochs = ten\n"), format_error);
    CHECK_THROWS_AS(parse_config_text("scales\n"), format_error); // no '='
}

TEST_CASE("parse_config_file matches parse_config_text and flags missing files") {
    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "acam_cfg_test.cfg";
    {
        std::ofstream f(path);
        f << "epochs = 3\nmomentum = 0\n";
    }
    RunConfig c = parse_config_file(path.string());
    CHECK(c.epochs == 3);
    CHECK(c.momentum == 0.0);
    fs::remove(path);
    CHECK_THROWS_AS(parse_config_file(path.string()), io_error);
}

TEST_CASE("echo lists every key and round-trips through the parser") {
    RunConfig c = parse_config_text("scales = 1\nlr = 0.125\naggregate_on = logits\n");
    auto kv = c.echo();
    CHECK(kv.size() == 13);
    std::string text;
    for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
    RunConfig back = parse_config_text(text);
    CHECK(back.scales == c.scales);
    CHECK(back.lr == c.lr);
    CHECK(back.aggregate_on == c.aggregate_on);
    CHECK(back.echo() == kv);
}
