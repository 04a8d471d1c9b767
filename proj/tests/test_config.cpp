#include <doctest.h>

#include <string>
#include <vector>

#include "mpdo/config.hpp"
#include "mpdo/errors.hpp"

using namespace mpdo;

TEST_CASE("config parsing handles comments, blanks, and whitespace") {
  const Config c = parse_config(
      "# experiment setup\n"
      "\n"
      "task = truncate\n"
      "  state.sites   =  5 \n"
      "state.kind = gibbs   # inline comments are stripped\n");
  CHECK(c.values.size() == 3);
  CHECK(c.get_string("task", "") == "truncate");
  CHECK(c.get_int("state.sites", 0) == 5);
  CHECK(c.get_string("state.kind", "") == "gibbs");
}

TEST_CASE("config parse/serialize round trip is lossless") {
  const std::string text =
      "compress.d_p = 1, 2, 4\n"
      "seed = 18446744073709551615\n"
      "state.beta = 0.5\n"
      "task = compress\n";
  const Config a = parse_config(text);
  const Config b = parse_config(serialize_config(a));
  CHECK(a.values == b.values);
  // Canonical form sorts keys and normalizes spacing around '='.
  CHECK(serialize_config(a) ==
        "compress.d_p = 1, 2, 4\n"
        "seed = 18446744073709551615\n"
        "state.beta = 0.5\n"
        "task = compress\n");
}

TEST_CASE("config parsing rejects malformed input with line numbers") {
  CHECK_THROWS_WITH_AS(parse_config("task compress\n"),
                       doctest::Contains("line 1"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("task = a\n= b\n"),
                       doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("task = a\ntask = b\n"),
                       doctest::Contains("duplicate key 'task'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_file("/nonexistent/path.cfg"),
                       doctest::Contains("cannot open"), ConfigError);
}

TEST_CASE("typed accessors return defaults and reject bad values") {
  Config c;
  c.set("d", "2.5");
  c.set("i", "7");
  c.set("u", "18446744073709551615");
  c.set("b1", "true");
  c.set("b2", "off");
  c.set("ints", "1, 2,4");
  c.set("doubles", "0.5,1.0");
  c.set("bad", "zebra");

  CHECK(c.get_double("d", 0.0) == 2.5);
  CHECK(c.get_double("missing", 3.25) == 3.25);
  CHECK(c.get_int("i", 0) == 7);
  CHECK(c.get_uint64("u", 0) == 18446744073709551615ull);
  CHECK(c.get_bool("b1", false));
  CHECK_FALSE(c.get_bool("b2", true));
  CHECK(c.get_bool("missing", true));
  CHECK(c.get_int_list("ints", {}) == std::vector<int>{1, 2, 4});
  CHECK(c.get_double_list("doubles", {}) == std::vector<double>{0.5, 1.0});
  CHECK(c.get_int_list("missing", {9}) == std::vector<int>{9});

  CHECK_THROWS_AS((void)c.get_double("bad", 0.0), ConfigError);
  CHECK_THROWS_AS((void)c.get_int("bad", 0), ConfigError);
  CHECK_THROWS_AS((void)c.get_int("d", 0), ConfigError);  // 2.5 is not an integer
  CHECK_THROWS_AS((void)c.get_bool("bad", false), ConfigError);
  CHECK_THROWS_AS((void)c.get_int_list("bad", {}), ConfigError);

  Config range;
  range.set("big", "4294967296");
  CHECK_THROWS_WITH_AS((void)range.get_int("big", 0), doctest::Contains("out of int range"),
                       ConfigError);

  Config empty_list;
  empty_list.set("xs", "");
  CHECK_THROWS_WITH_AS((void)empty_list.get_int_list("xs", {}),
                       doctest::Contains("empty list"), ConfigError);
  // A stray comma still names the offending piece.
  empty_list.set("ys", "1,,2");
  CHECK_THROWS_AS((void)empty_list.get_int_list("ys", {}), ConfigError);
}

TEST_CASE("config hash identifies the experiment, not the output plumbing") {
  Config a = parse_config("task = scan\nseed = 3\nstate.sites = 4\n");
  Config b = a;
  b.set("out", "/tmp/somewhere/else");
  b.set("format", "json");
  b.set("threads", "8");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash_hex(a) == config_hash_hex(b));

  Config c = a;
  c.set("seed", "4");
  CHECK(config_hash(a) != config_hash(c));

  Config d = a;
  d.set("state.sites", "5");
  CHECK(config_hash(a) != config_hash(d));

  // Hex form: fixed width, lowercase.
  const std::string hex = config_hash_hex(a);
  CHECK(hex.size() == 16);
  for (char ch : hex) CHECK(((ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'f')));
}

TEST_CASE("config hash is insensitive to declaration order") {
  const Config a = parse_config("task = eop\nstate.beta = 2\n");
  const Config b = parse_config("state.beta = 2\ntask = eop\n");
  CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("validation accepts documented keys and rejects everything else") {
  Config good;
  good.set("task", "compress");
  for (const auto& [key, desc] : known_config_keys()) {
    CHECK_FALSE(desc.empty());
    if (key != "task") good.set(key, "1");
  }
  CHECK_NOTHROW(validate_config(good));

  Config bad;
  bad.set("task", "scan");
  bad.set("state.typo", "1");
  CHECK_THROWS_WITH_AS(validate_config(bad), doctest::Contains("unknown config key"),
                       ConfigError);

  Config bad_task;
  bad_task.set("task", "fly");
  CHECK_THROWS_WITH_AS(validate_config(bad_task), doctest::Contains("task"), ConfigError);
}
