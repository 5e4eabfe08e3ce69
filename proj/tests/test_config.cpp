#include "mosaic/config.hpp"
#include "mosaic/error.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mosaic;

namespace {

AppConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

}  // namespace

TEST_CASE("config defaults") {
    const AppConfig c = parse("");
    CHECK(c.train.learning_rate == 1e-3);
    CHECK(c.data.patch_size == 10);
    CHECK(c.data.snr == 100.0);
    CHECK(c.sweep.learning_rates == std::vector<double>{1e-4, 3e-4, 1e-3});
    CHECK(c.sweep.l2_weights == std::vector<double>{0.0, 1e-4, 1e-3});
    CHECK(c.sweep.configurations.size() == 5);
    CHECK(c.synth.rows == 64);
}

TEST_CASE("config sections override fields") {
    const AppConfig c = parse(
        "[train]\nlearning_rate = 3e-4\nschedule = cosine\nepochs = 12\n"
        "[trainable]\nfilters = true\nreconstructor = false\n"
        "[lorentzian]\nenabled = yes\nalpha_reg = auto\nwidth = 0.1\ntargets = 460:10, 580:50\n"
        "[data]\nsnr = inf\nsplit_axis = rows\npatch_size = 4\n"
        "[synth]\nrank = 3\ncorrelation_length = 5.5\n"
        "[sweep]\nn_filters = 2,3\nconfigurations = regular-lvf, optimized-squarish\nrandom_inits = 2\n"
        "[analysis]\nband_index = 3\n");
    CHECK(c.train.learning_rate == 3e-4);
    CHECK(c.train.schedule == LrSchedule::cosine);
    CHECK(c.train.epochs == 12);
    CHECK(c.train.trainable.filters);
    CHECK_FALSE(c.train.trainable.reconstructor);
    CHECK(c.train.lorentzian.enabled);
    CHECK(c.train.lorentzian.alpha_reg < 0);
    CHECK(c.train.lorentzian.width == 0.1);
    CHECK(c.train.lorentzian.targets.size() == 2);
    CHECK(std::isinf(c.data.snr));
    CHECK(c.data.split_axis == SplitAxis::rows);
    CHECK(c.data.patch_size == 4);
    CHECK(c.synth.spectral_rank == 3);
    CHECK(c.synth.correlation_length == 5.5);
    CHECK(c.sweep.n_filters == std::vector<std::size_t>{2, 3});
    CHECK(c.sweep.configurations ==
          std::vector<Configuration>{Configuration::regular_lvf, Configuration::optimized_squarish});
    CHECK(c.sweep.random_inits == 2);
    CHECK(c.analysis.band_index == 3);
}

TEST_CASE("format_config round-trips") {
    AppConfig c = parse("[train]\nlearning_rate = 0.1\nl2_weight = 1.25e-7\n[data]\nsnr = inf\n");
    c.train.seed = 18446744073709551615ULL;
    c.sweep.learning_rates = {0.1, 1.0 / 3.0};
    const std::string text = format_config(c);
    const AppConfig back = parse(text);
    CHECK(format_config(back) == text);
    CHECK(back.train.seed == c.train.seed);
    CHECK(back.sweep.learning_rates[1] == 1.0 / 3.0);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse("[nope]\na = 1\n"), Error);
    CHECK_THROWS_AS(parse("[train]\nlearning_rat = 1\n"), Error);
    CHECK_THROWS_AS(parse("[train]\nepochs = -3\n"), Error);
    CHECK_THROWS_AS(parse("[train]\nlearning_rate = fast\n"), Error);
    CHECK_THROWS_AS(parse("[sweep]\nconfigurations = best-everything\n"), Error);
    CHECK_THROWS_AS(load_config("/nonexistent/mosaic.ini"), Error);
}
