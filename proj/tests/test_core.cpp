#include <doctest.h>

#include "edgehml/core.hpp"
#include "edgehml/scheduler.hpp"

using namespace edgehml;

namespace {
const StreamMeta kMeta{5, 10, 16};
}

TEST_CASE("validate_config accepts defaults and resolves v1/v2") {
  Hyperparams h;
  h.iters_per_task = 100;
  const auto out = validate_config(h, kMeta);
  CHECK(out == h);
  const auto s = ProgressiveSchedule::from(out);
  CHECK(s.onset == 20);
  CHECK(s.saturation == 30);
}

TEST_CASE("validate_config names the violated constraint") {
  Hyperparams h;
  h.tau = 1.2;
  CHECK_THROWS_WITH_AS(validate_config(h, kMeta), doctest::Contains("tau"), ConfigError);

  h = {};
  h.v1_frac = 0.6;
  h.v2_frac = 0.3;
  CHECK_THROWS_WITH_AS(validate_config(h, kMeta), doctest::Contains("v1>v2"), ConfigError);

  h = {};
  h.tau = 0.0;
  CHECK_THROWS_AS(validate_config(h, kMeta), ConfigError);
  h = {};
  h.p_admit = 1.5;
  CHECK_THROWS_AS(validate_config(h, kMeta), ConfigError);
  h = {};
  h.mem_capacity = 0;
  CHECK_THROWS_AS(validate_config(h, kMeta), ConfigError);
  h = {};
  h.disk_capacity = h.mem_capacity - 1;
  CHECK_THROWS_AS(validate_config(h, kMeta), ConfigError);
}

TEST_CASE("validate_config is idempotent") {
  Hyperparams h;
  h.v1_frac = 0.6;
  h.v2_frac = 0.65;
  h.iters_per_task = 37;
  const auto once = validate_config(h, kMeta);
  CHECK(validate_config(once, kMeta) == once);
}

TEST_CASE("round half up when resolving fractions") {
  CHECK(resolve_fraction(0.2, 100) == 20);
  CHECK(resolve_fraction(0.25, 10) == 3);  // 2.5 -> 3
  CHECK(resolve_fraction(0.0, 10) == 0);
  CHECK(resolve_fraction(1.0, 10) == 10);
}

TEST_CASE("config text parses, rejects unknown keys, and round-trips") {
  const auto h = parse_config("# comment\ntau = 0.9\nmem_capacity=500\nrelabel_replay = true\n\n");
  CHECK(h.tau == 0.9);
  CHECK(h.mem_capacity == 500);
  CHECK(h.relabel_replay);

  CHECK_THROWS_WITH_AS(parse_config("tua = 0.9\n"), doctest::Contains("unknown config key"), ConfigError);
  CHECK_THROWS_AS(parse_config("tau = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("tau 0.9\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("tau = 0.9\ntau = 0.8\n"), ConfigError);

  Hyperparams odd;
  odd.lr = 0.1 + 0.2;
  odd.seed = 123456789012345ULL;
  odd.class_incremental_eval = true;
  CHECK(parse_config(to_config_text(odd)) == odd);
}
