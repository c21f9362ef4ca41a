#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rcpn/config.hpp"
#include "rcpn/error.hpp"

using namespace rcpn;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("defaults populated for a minimal command line") {
  CliConfig c = parse_config({"synth", "--out", "o"});
  CHECK(c.command == "synth");
  CHECK(c.out == "o");
  CHECK(c.seed == 42);
  CHECK(c.d_sem == 60);
  CHECK(c.r_train == 4);
  CHECK(c.r_test == 20);
  CHECK(c.learning_rate == 0.01);
  CHECK(c.clip_norm == 5.0);
  CHECK(c.loss_mode == "pure_node");
  CHECK(c.tree_policy == "balanced");
  CHECK(c.superpixel_method == "grid");
  CHECK(c.mrf == false);
  CHECK(c.mrf_k == 9);
}

TEST_CASE("kebab-case flags map onto snake-case keys") {
  CliConfig c = parse_config({"synth", "--out", "o", "--d-sem", "12", "--learning-rate",
                              "0.5", "--synth-cells-x", "7", "--plain-nn", "true"});
  CHECK(c.d_sem == 12);
  CHECK(c.learning_rate == 0.5);
  CHECK(c.synth_cells_x == 7);
  CHECK(c.plain_nn == true);
}

TEST_CASE("flag overrides config file which overrides default") {
  std::string path = "cfg_precedence.txt";
  write_file(path, "d_sem = 30\nepochs = 3\n");
  CliConfig c = parse_config({"synth", "--out", "o", "--config", path, "--d-sem", "15"});
  CHECK(c.d_sem == 15);   // flag wins
  CHECK(c.epochs == 3);   // file wins over default
  CHECK(c.r_train == 4);  // default survives
  std::remove(path.c_str());
}

TEST_CASE("bad value names the key") {
  std::string path = "cfg_badvalue.txt";
  write_file(path, "d_sem = sixty\n");
  CHECK_THROWS_WITH_AS(parse_config({"synth", "--out", "o", "--config", path}),
                       doctest::Contains("d_sem"), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("unknown keys rejected from flags and files") {
  CHECK_THROWS_WITH_AS(parse_config({"synth", "--out", "o", "--frobnicate", "1"}),
                       doctest::Contains("frobnicate"), ConfigError);
  std::string path = "cfg_unknown.txt";
  write_file(path, "mystery_key = 1\n");
  CHECK_THROWS_WITH_AS(parse_config({"synth", "--out", "o", "--config", path}),
                       doctest::Contains("mystery_key"), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("missing command or required fields") {
  CHECK_THROWS_AS(parse_config({}), ConfigError);
  CHECK_THROWS_AS(parse_config({"launch"}), ConfigError);
  CHECK_THROWS_AS(parse_config({"synth"}), ConfigError);                      // no out
  CHECK_THROWS_WITH_AS(parse_config({"train", "--out", "o"}),
                       doctest::Contains("images-dir"), ConfigError);
  CHECK_THROWS_AS(parse_config({"infer", "--out", "o", "--images-dir", "i"}),
                  ConfigError);  // no model
  CHECK_THROWS_AS(parse_config({"eval", "--pred-dir", "p", "--out", "o"}), ConfigError);
}

TEST_CASE("flag missing its value") {
  CHECK_THROWS_AS(parse_config({"synth", "--out"}), ConfigError);
}

TEST_CASE("enum-like strings validated") {
  CHECK_THROWS_AS(
      parse_config({"synth", "--out", "o", "--superpixel-method", "watershed"}),
      ConfigError);
  CHECK_THROWS_AS(parse_config({"synth", "--out", "o", "--loss-mode", "hinge"}),
                  ConfigError);
  CHECK_THROWS_AS(parse_config({"synth", "--out", "o", "--activation", "swish"}),
                  ConfigError);
  CHECK_THROWS_AS(parse_config({"synth", "--out", "o", "--tree-policy", "dfs"}),
                  ConfigError);
}

TEST_CASE("resolved config echoes every setting and parses back") {
  CliConfig c = parse_config({"train", "--out", "o", "--images-dir", "imgs",
                              "--labels-dir", "labs", "--d-sem", "17",
                              "--learning-rate", "0.125", "--balanced", "true"});
  std::string echo = resolved_config(c);
  CHECK(echo.find("command = train") != std::string::npos);
  CHECK(echo.find("d_sem = 17") != std::string::npos);
  CHECK(echo.find("learning_rate = 0.125") != std::string::npos);
  CHECK(echo.find("balanced = true") != std::string::npos);

  std::string path = "cfg_roundtrip.txt";
  write_file(path, echo);
  CliConfig d = parse_config({"train", "--config", path});
  CHECK(d.out == c.out);
  CHECK(d.images_dir == c.images_dir);
  CHECK(d.d_sem == c.d_sem);
  CHECK(d.learning_rate == c.learning_rate);
  CHECK(d.balanced == c.balanced);
  CHECK(d.seed == c.seed);
  std::remove(path.c_str());
}

TEST_CASE("config file tolerates comments and blank lines") {
  std::string path = "cfg_comments.txt";
  write_file(path, "# settings\n\nepochs = 2\n  \n# done\n");
  CliConfig c = parse_config({"synth", "--out", "o", "--config", path});
  CHECK(c.epochs == 2);
  std::remove(path.c_str());
}

TEST_CASE("train_config mirrors the flat keys") {
  CliConfig c = parse_config({"train", "--out", "o", "--images-dir", "i", "--labels-dir",
                              "l", "--loss-mode", "rcpn", "--tree-policy", "uniform",
                              "--activation", "relu", "--momentum", "0.5", "--seed", "7"});
  TrainConfig t = c.train_config();
  CHECK(t.mode == LossMode::Rcpn);
  CHECK(t.policy == TreePolicy::Uniform);
  CHECK(t.act == Activation::Relu);
  CHECK(t.momentum == 0.5);
  CHECK(t.seed == 7);
}

TEST_CASE("boolean parsing accepts true/false and 1/0") {
  CliConfig a = parse_config({"synth", "--out", "o", "--mrf", "1"});
  CHECK(a.mrf == true);
  CliConfig b = parse_config({"synth", "--out", "o", "--mrf", "false"});
  CHECK(b.mrf == false);
  CHECK_THROWS_AS(parse_config({"synth", "--out", "o", "--mrf", "maybe"}), ConfigError);
}
