#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "speechmark/corpus.hpp"
#include "speechmark/errors.hpp"
#include "speechmark/fs_util.hpp"
#include "speechmark/rng.hpp"

using namespace speechmark;
namespace fs = std::filesystem;

namespace {

fs::path write_temp_manifest(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "speechmark_corpus_tests";
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path;
}

const char* kHeader = "id,group,sex,age,updrs3,hy,years_post_dx,audio_path,transcript_path\n";

}  // namespace

TEST_CASE("load_manifest reads a minimal csv in file order") {
  const auto path = write_temp_manifest(
      "min.csv", std::string(kHeader) + "s01,PD,M,61.5,30,2.0,5.0,,t1.txt\n"
                                        "s02,HC,F,59.0,,,,,t2.txt\n");
  const auto m = corpus::load_manifest(path);
  REQUIRE(m.subjects.size() == 2);
  CHECK(m.subjects[0].id == "s01");
  CHECK(m.subjects[0].group == corpus::Group::PD);
  CHECK(m.subjects[0].sex == corpus::Sex::male);
  CHECK(m.subjects[0].age == doctest::Approx(61.5));
  CHECK(m.subjects[0].mds_updrs_iii == 30);
  CHECK(m.subjects[0].hoehn_yahr == doctest::Approx(2.0));
  CHECK(m.subjects[1].id == "s02");
  CHECK(m.subjects[1].group == corpus::Group::HC);
  CHECK_FALSE(m.subjects[1].mds_updrs_iii.has_value());
  CHECK(m.count(corpus::Group::PD) == 1);
  CHECK(m.count(corpus::Group::HC) == 1);
  // relative transcript paths resolve against the manifest directory
  CHECK(m.subjects[0].transcript_path->parent_path() == path.parent_path());
}

TEST_CASE("load_manifest rejects a duplicated id, naming it") {
  const auto path = write_temp_manifest(
      "dup.csv", std::string(kHeader) + "s01,PD,M,61.5,,,,,t.txt\n"
                                        "s01,HC,F,59.0,,,,,t.txt\n");
  CHECK_THROWS_WITH_AS(corpus::load_manifest(path),
                       doctest::Contains("duplicate subject id 's01'"), ValidationError);
}

TEST_CASE("load_manifest errors carry line and field context") {
  const auto path = write_temp_manifest(
      "badage.csv", std::string(kHeader) + "s01,PD,M,sixty,,,,,t.txt\n");
  CHECK_THROWS_WITH_AS(corpus::load_manifest(path), doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_WITH_AS(corpus::load_manifest(path), doctest::Contains("field 'age'"),
                       ParseError);

  const auto missing = fs::temp_directory_path() / "speechmark_corpus_tests" / "nope.csv";
  CHECK_THROWS_AS(corpus::load_manifest(missing), Error);

  const auto badhdr = write_temp_manifest("badhdr.csv", "id,group\ns01,PD\n");
  CHECK_THROWS_WITH_AS(corpus::load_manifest(badhdr), doctest::Contains("header"), ParseError);
}

TEST_CASE("record invariants are enforced") {
  const auto hc_clinical = write_temp_manifest(
      "hc.csv", std::string(kHeader) + "s01,HC,M,61.5,30,,,,t.txt\n");
  CHECK_THROWS_WITH_AS(corpus::load_manifest(hc_clinical),
                       doctest::Contains("subject 's01'"), ValidationError);

  const auto no_source = write_temp_manifest(
      "nosrc.csv", std::string(kHeader) + "s01,PD,M,61.5,,,,,\n");
  CHECK_THROWS_AS(corpus::load_manifest(no_source), ValidationError);

  const auto bad_updrs = write_temp_manifest(
      "updrs.csv", std::string(kHeader) + "s01,PD,M,61.5,140,,,,t.txt\n");
  CHECK_THROWS_WITH_AS(corpus::load_manifest(bad_updrs), doctest::Contains("132"),
                       ValidationError);

  const auto bad_age = write_temp_manifest(
      "age0.csv", std::string(kHeader) + "s01,PD,M,0,,,,,t.txt\n");
  CHECK_THROWS_AS(corpus::load_manifest(bad_age), ValidationError);
}

TEST_CASE("json manifests accept the same field names") {
  const auto path = write_temp_manifest("m.json", R"({
    "name": "tiny",
    "subjects": [
      {"id": "s01", "group": "PD", "sex": "M", "age": 61.5, "updrs3": 30,
       "hy": 2.0, "years_post_dx": 5.0, "transcript_path": "t1.txt"},
      {"id": "s02", "group": "HC", "sex": "F", "age": 59.0, "transcript_path": "t2.txt"}
    ]})");
  const auto m = corpus::load_manifest(path);
  CHECK(m.name == "tiny");
  REQUIRE(m.subjects.size() == 2);
  CHECK(m.subjects[0].mds_updrs_iii == 30);
  CHECK_FALSE(m.subjects[1].hoehn_yahr.has_value());

  const auto bad = write_temp_manifest("bad.json", "{not json");
  CHECK_THROWS_AS(corpus::load_manifest(bad), ParseError);
}

TEST_CASE("demographic_summary basic statistics") {
  corpus::CorpusManifest m;
  m.name = "t";
  auto add = [&](const std::string& id, corpus::Group g, corpus::Sex s, double age) {
    corpus::SubjectRecord r;
    r.id = id;
    r.group = g;
    r.sex = s;
    r.age = age;
    r.transcript = "hola";
    m.subjects.push_back(r);
  };

  SUBCASE("constant sample has zero std") {
    add("a", corpus::Group::PD, corpus::Sex::male, 60);
    add("b", corpus::Group::PD, corpus::Sex::male, 60);
    add("c", corpus::Group::PD, corpus::Sex::male, 60);
    const auto s = corpus::demographic_summary(m);
    const auto& cell = s.cell(corpus::Group::PD, corpus::Sex::male);
    CHECK(cell.count == 3);
    CHECK(cell.age.mean == doctest::Approx(60.0));
    CHECK(cell.age.stddev == doctest::Approx(0.0));
    CHECK(cell.age.min == 60.0);
    CHECK(cell.age.max == 60.0);
  }

  SUBCASE("sample standard deviation over 1..4") {
    add("a", corpus::Group::HC, corpus::Sex::female, 1);
    add("b", corpus::Group::HC, corpus::Sex::female, 2);
    add("c", corpus::Group::HC, corpus::Sex::female, 3);
    add("d", corpus::Group::HC, corpus::Sex::female, 4);
    const auto s = corpus::demographic_summary(m);
    const auto& cell = s.cell(corpus::Group::HC, corpus::Sex::female);
    CHECK(cell.age.mean == doctest::Approx(2.5));
    CHECK(cell.age.stddev == doctest::Approx(1.2909944487).epsilon(1e-9));
    CHECK(cell.age.min == 1.0);
    CHECK(cell.age.max == 4.0);
  }

  SUBCASE("single subject reports std 0") {
    add("a", corpus::Group::HC, corpus::Sex::male, 33);
    const auto s = corpus::demographic_summary(m);
    const auto& cell = s.cell(corpus::Group::HC, corpus::Sex::male);
    CHECK(cell.count == 1);
    CHECK(cell.age.mean == 33.0);
    CHECK(cell.age.stddev == 0.0);
    CHECK(cell.age.min == 33.0);
    CHECK(cell.age.max == 33.0);
  }

  SUBCASE("empty cells have zero count") {
    add("a", corpus::Group::PD, corpus::Sex::male, 60);
    const auto s = corpus::demographic_summary(m);
    CHECK(s.cell(corpus::Group::HC, corpus::Sex::female).count == 0);
    CHECK(s.cell(corpus::Group::HC, corpus::Sex::female).age.count == 0);
  }

  SUBCASE("optional clinical fields aggregate only present values") {
    add("a", corpus::Group::PD, corpus::Sex::male, 60);
    add("b", corpus::Group::PD, corpus::Sex::male, 62);
    m.subjects[0].mds_updrs_iii = 30;
    const auto s = corpus::demographic_summary(m);
    const auto& cell = s.cell(corpus::Group::PD, corpus::Sex::male);
    CHECK(cell.count == 2);
    CHECK(cell.mds_updrs_iii.count == 1);
    CHECK(cell.mds_updrs_iii.mean == 30.0);
  }
}

TEST_CASE("demographic_summary is permutation invariant") {
  CounterRng rng(derive_key(11, "perm"));
  corpus::CorpusManifest m;
  for (int i = 0; i < 40; ++i) {
    corpus::SubjectRecord r;
    r.id = "s" + std::to_string(i);
    r.group = rng.next_unit() < 0.5 ? corpus::Group::PD : corpus::Group::HC;
    r.sex = rng.next_unit() < 0.5 ? corpus::Sex::male : corpus::Sex::female;
    r.age = 30.0 + 50.0 * rng.next_unit();
    if (r.group == corpus::Group::PD) {
      r.mds_updrs_iii = static_cast<int>(rng.next_below(132));
      r.years_post_diagnosis = 20.0 * rng.next_unit();
    }
    r.transcript = "hola";
    m.subjects.push_back(r);
  }
  const auto base = corpus::demographic_summary(m);
  auto shuffled = m;
  deterministic_shuffle(shuffled.subjects, rng);
  const auto other = corpus::demographic_summary(shuffled);
  for (auto g : {corpus::Group::PD, corpus::Group::HC}) {
    for (auto s : {corpus::Sex::male, corpus::Sex::female}) {
      const auto& a = base.cell(g, s);
      const auto& b = other.cell(g, s);
      CHECK(a.count == b.count);
      CHECK(a.age.mean == b.age.mean);  // bitwise: accumulation is sorted
      CHECK(a.age.stddev == b.age.stddev);
      CHECK(a.years_post_diagnosis.mean == b.years_post_diagnosis.mean);
      CHECK(a.mds_updrs_iii.stddev == b.mds_updrs_iii.stddev);
    }
  }
}

TEST_CASE("mann_whitney_u on identical samples") {
  const auto r = corpus::mann_whitney_u({1, 2, 3}, {1, 2, 3});
  CHECK(r.u_statistic == doctest::Approx(4.5));
  CHECK(r.p_value == doctest::Approx(1.0));
  CHECK(r.method == corpus::UTestMethod::normal_approx);  // ties force the approximation
}

TEST_CASE("mann_whitney_u exact-path cases") {
  SUBCASE("fully separated tiny samples") {
    const auto r = corpus::mann_whitney_u({1, 2}, {3, 4});
    CHECK(r.method == corpus::UTestMethod::exact);
    CHECK(r.u_statistic == doctest::Approx(0.0));
    CHECK(r.p_value == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
  }
  SUBCASE("interleaved samples match the enumeration oracle") {
    const std::vector<double> a{1, 3, 5, 7}, b{2, 4, 6, 8};
    const auto r = corpus::mann_whitney_u(a, b);
    CHECK(r.method == corpus::UTestMethod::exact);
    CHECK(r.p_value == doctest::Approx(oracles::mw_enum_two_sided_p(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("mann_whitney_u properties on random inputs") {
  CounterRng rng(derive_key(3, "mw"));
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n1 = 2 + rng.next_below(6);
    const std::size_t n2 = 2 + rng.next_below(6);
    std::vector<double> a(n1), b(n2);
    for (auto& x : a) x = rng.next_unit();  // ties have probability ~0
    for (auto& x : b) x = rng.next_unit();

    const auto ab = corpus::mann_whitney_u(a, b);
    const auto ba = corpus::mann_whitney_u(b, a);
    CHECK(ab.u_statistic + ba.u_statistic ==
          doctest::Approx(static_cast<double>(n1 * n2)).epsilon(1e-12));
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));

    // invariant under adding a common constant
    std::vector<double> a_shift = a, b_shift = b;
    for (auto& x : a_shift) x += 17.25;
    for (auto& x : b_shift) x += 17.25;
    const auto shifted = corpus::mann_whitney_u(a_shift, b_shift);
    CHECK(shifted.p_value == doctest::Approx(ab.p_value).epsilon(1e-12));

    if (ab.method == corpus::UTestMethod::exact)
      CHECK(ab.p_value ==
            doctest::Approx(oracles::mw_enum_two_sided_p(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("mann_whitney_u rejects empty samples") {
  CHECK_THROWS_AS(corpus::mann_whitney_u({}, {1.0}), ValidationError);
  CHECK_THROWS_AS(corpus::mann_whitney_u({1.0}, {}), ValidationError);
}

TEST_CASE("degenerate pools give p = 1") {
  const auto r = corpus::mann_whitney_u({5, 5, 5}, {5, 5});
  CHECK(r.p_value == 1.0);
}
