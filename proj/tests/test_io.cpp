#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rwlab/io.hpp"

using namespace rwlab;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = RWLAB_FIXTURE_DIR;

std::string field_of(const std::string& text) {
  try {
    parse_config(parse_json_text(text), kFixtures / "configs");
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST(Io, FieldDiagnostics) {
  EXPECT_EQ(field_of(R"({"experiment": "fclt", "t_grid": [0.25, 0.75, 0.5, 1.0]})"), "/t_grid/2");
  EXPECT_EQ(field_of(R"({"experiment": "fclt", "bogus": 1})"), "/bogus");
  EXPECT_EQ(field_of(R"({"experiment": "nope"})"), "/experiment");
  EXPECT_EQ(field_of(R"({})"), "/experiment");
  EXPECT_EQ(field_of(R"({"experiment": "fclt", "n": -4})"), "/n");
  EXPECT_EQ(field_of(R"({"experiment": "fclt", "walk": {"preset": "lazy", "dimension": 7}})"), "/walk/dimension");
  EXPECT_EQ(field_of(R"({"experiment": "fclt", "scenery": {"kind": "iid", "law": "cauchy"}})"), "/scenery/law");
  EXPECT_EQ(field_of(R"({"experiment": "fclt", "scenery": {"kind": "toral", "pair_file": "../commuting_pair.json",
                        "f": [[[1, 0, 0], 0.5, 0.0], [[-1, 0, 0], 0.5, 0.0]], "modulus": 1000}})"),
            "/scenery/modulus");
  EXPECT_EQ(field_of(R"({"experiment": "fclt", "scenery": {"kind": "moving_average", "base": {"kind": "iid",
                        "law": "rademacher"}, "coefficients": [{"q": [0, 0], "a": 1}, {"q": [0, 0], "a": 2}]}})"),
            "/scenery/coefficients/1/q");
  EXPECT_EQ(field_of(R"({"experiment": "variance_lln", "n_ladder": [1024]})"), "/n_ladder");
  EXPECT_EQ(field_of(R"({"experiment": "fclt"})"), "<no error>");
}

TEST(Io, SyntaxErrorsCarryLineAndColumn) {
  try {
    parse_json_text("{\n  \"experiment\": \"fclt\",\n  \"n\": ,\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Io, FixturesRoundTripAndHashIsStable) {
  std::size_t seen = 0;
  for (const auto& entry : experiment_catalog()) {
    const ExperimentConfig c = load_config(kFixtures / "configs" / entry.fixture);
    EXPECT_EQ(c.experiment, entry.experiment) << entry.id;
    const Json j = config_to_json(c);
    const ExperimentConfig back = parse_config(j);
    EXPECT_EQ(canonical_dump(config_to_json(back)), canonical_dump(j)) << entry.id;
    EXPECT_EQ(sha256_hex(canonical_dump(j)).size(), 64u);
    ++seen;
  }
  EXPECT_EQ(seen, 12u);
}

TEST(Io, Sha256KnownAnswer) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Io, ToralPairFileResolvesAndInlines) {
  const ExperimentConfig c = load_config(kFixtures / "configs" / "fclt-toral.json");
  const Json s = config_to_json(c)["scenery"];
  EXPECT_TRUE(s.contains("pair"));
  EXPECT_FALSE(s.contains("pair_file"));
  EXPECT_EQ(s["pair"]["a1"][2][1].get<long>(), -26);
  EXPECT_EQ(s["f"].size(), 4u);
}

TEST(Io, CatalogJsonRoundTrip) {
  const auto back = catalog_from_json(parse_json_text(catalog_to_json().dump()));
  const auto& cat = experiment_catalog();
  ASSERT_EQ(back.size(), cat.size());
  for (std::size_t i = 0; i < cat.size(); ++i) {
    EXPECT_EQ(back[i].id, cat[i].id);
    EXPECT_EQ(back[i].anchor, cat[i].anchor);
    EXPECT_FALSE(cat[i].anchor.empty());
  }
  std::vector<std::string> ids;
  for (const auto& e : cat) ids.push_back(e.id);
  for (const char* want : {"fclt-iid", "fclt-ma", "fclt-toral"})
    EXPECT_NE(std::find(ids.begin(), ids.end(), want), ids.end()) << want;
  Json bad = catalog_to_json();
  bad["catalog"][0]["experiment"] = "nope";
  EXPECT_THROW(catalog_from_json(bad), ConfigError);
}

TEST(Io, CsvAndSvg) {
  CsvTable t({"a", "b"});
  t.row({CsvTable::num(0.1), CsvTable::num(std::uint64_t{3})});
  EXPECT_EQ(t.str(), "a,b\n0.10000000000000001,3\n");
  EXPECT_THROW(t.row({"x"}), InvalidArgument);
  const std::string svg = svg_chart("t<1>", "x", "y", {{"s", {1, 2, 4}, {0.5, 0.25, 0.125}}}, true);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("t&lt;1&gt;"), std::string::npos);
}

TEST(Io, RunWritesDeterministicArtifacts) {
  ExperimentConfig c = load_config(kFixtures / "configs" / "truncation-ladder.json");
  const fs::path dir = fs::temp_directory_path() / "rwlab_test_io";
  fs::remove_all(dir);
  const ExperimentOutput a = run_experiment(c);
  const Json m = write_run(c, a, dir, "t0", "t1");
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "truncation_ladder.csv"));
  EXPECT_EQ(m["payload_sha256"], sha256_hex(canonical_dump(run_experiment(c).payload)));
  EXPECT_EQ(m["config_hash"], sha256_hex(canonical_dump(config_to_json(parse_config(m["config"])))));
  EXPECT_TRUE(m["pass"].get<bool>());
  fs::remove_all(dir);
}

TEST(Io, PilotFixtureMatchesDefaultTolerances) {
  std::ifstream in(kFixtures / "pilot.json");
  ASSERT_TRUE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  const Json f = parse_json_text(ss.str())["frozen"];
  const Tolerances t;
  EXPECT_EQ(f["ks_p_min"].get<double>(), t.ks_p_min);
  EXPECT_EQ(f["omega_fraction"].get<double>(), t.omega_fraction);
  EXPECT_EQ(f["corr_max"].get<double>(), t.corr_max);
  EXPECT_EQ(f["identity_z"].get<double>(), t.identity_z);
  EXPECT_EQ(f["se_factor"].get<double>(), t.se_factor);
  EXPECT_EQ(f["lln_lo"].get<double>(), t.lln_lo);
  EXPECT_EQ(f["lln_hi"].get<double>(), t.lln_hi);
  EXPECT_EQ(f["cross_fraction"].get<double>(), t.cross_fraction);
  EXPECT_EQ(f["ma_rel_tol"].get<double>(), t.ma_rel_tol);
}
