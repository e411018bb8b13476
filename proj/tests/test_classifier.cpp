#include <cmath>
#include <fstream>

#include <sys/stat.h>

#include <doctest.h>

#include "superlime/classifier.hpp"
#include "test_support.hpp"

using namespace superlime;
using namespace superlime::classify;

namespace {

constexpr imaging::Rgb kStain{80, 45, 160};
constexpr imaging::Rgb kPlain{200, 200, 200};

// Shell adapter printing `body` after the header into <dir>/predictions.csv.
std::string write_adapter(const test::ScratchDir& dir, const std::string& name, const std::string& script) {
  const auto path = dir / name;
  std::ofstream(path) << "#!/bin/sh\n" << script;
  ::chmod(path.c_str(), 0755);
  return path.string();
}

// Emits one row per PNG in the batch directory, skipping `drop` rows.
std::string csv_adapter(int drop, const std::string& header = "index,p_0,p_1") {
  return "n=$(ls \"$1\"/*.png | wc -l)\n"
         "n=$((n - " + std::to_string(drop) + "))\n"
         "echo '" + header + "' > \"$1/predictions.csv\"\n"
         "i=0\n"
         "while [ $i -lt $n ]; do echo \"$i,0.25,0.75\" >> \"$1/predictions.csv\"; i=$((i + 1)); done\n";
}

ClassifierError::Kind external_error(const std::string& command, std::size_t n) {
  std::vector<imaging::Image> imgs(n, imaging::Image(4, 4, kPlain));
  try {
    classify_batch(ClassifierSpec::external(command), imgs);
  } catch (const ClassifierError& e) {
    return e.kind();
  }
  FAIL("expected a classifier error");
  return ClassifierError::Kind::launch_failure;
}

}  // namespace

TEST_CASE("stub on an image without stain scores zero") {
  const auto p = stub_score(imaging::Image(8, 8, imaging::Rgb{0, 0, 0}));
  CHECK(p.probabilities[kIndicatorClass] == 0.0);
  CHECK(p.probabilities[kCleanClass] == 1.0);
  CHECK(p.class_names == std::vector<std::string>{"clean", "indicator"});
  CHECK(on_simplex(p));
}

TEST_CASE("stub on a fully stained image") {
  const auto p = stub_score(imaging::Image(8, 8, kStain));
  CHECK(stained_fraction(imaging::Image(8, 8, kStain)) == 1.0);
  CHECK(std::abs(p.probabilities[kIndicatorClass] - (1.0 - std::exp(-40.0))) < 1e-15);
  CHECK(p.argmax() == kIndicatorClass);
}

TEST_CASE("blue margin is strict") {
  CHECK(stained_fraction(imaging::Image(2, 2, imaging::Rgb{100, 100, 120})) == 0.0);
  CHECK(stained_fraction(imaging::Image(2, 2, imaging::Rgb{100, 100, 121})) == 1.0);
  CHECK(stained_fraction(imaging::Image(2, 2, imaging::Rgb{100, 101, 121})) == 0.0);
}

TEST_CASE("stub is monotone in the stained pixel count") {
  imaging::Image img(10, 10, kPlain);
  auto previous = stub_score(img).probabilities;
  for (std::size_t i = 0; i < img.size(); ++i) {
    img[i] = kStain;
    const auto p = stub_score(img).probabilities;
    CHECK(p[kIndicatorClass] >= previous[kIndicatorClass]);
    CHECK(p[kCleanClass] < previous[kCleanClass]);
    previous = p;
  }
}

TEST_CASE("removing the only stained patch lowers the score") {
  imaging::Image img(16, 16, kPlain);
  for (std::size_t y = 4; y < 8; ++y) {
    for (std::size_t x = 4; x < 8; ++x) img.at(x, y) = kStain;
  }
  imaging::Image removed(16, 16, kPlain);
  CHECK(stub_score(removed).probabilities[kIndicatorClass] < stub_score(img).probabilities[kIndicatorClass]);
}

TEST_CASE("stub batches are order preserving and stateless") {
  std::mt19937_64 rng(11);
  std::vector<imaging::Image> xs, ys;
  for (int i = 0; i < 5; ++i) xs.push_back(test::random_image(6 + i, 5, rng));
  for (int i = 0; i < 3; ++i) ys.push_back(test::random_image(7, 4 + i, rng));
  std::vector<imaging::Image> all = xs;
  all.insert(all.end(), ys.begin(), ys.end());

  const auto spec = ClassifierSpec::stub();
  const auto a = classify_batch(spec, xs);
  const auto b = classify_batch(spec, ys);
  const auto ab = classify_batch(spec, all);
  REQUIRE(ab.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& part = i < a.size() ? a[i] : b[i - a.size()];
    CHECK(ab[i].probabilities == part.probabilities);
    CHECK(ab[i].probabilities == stub_score(all[i]).probabilities);
    CHECK(on_simplex(ab[i]));
  }
}

TEST_CASE("classifier configuration validation") {
  CHECK_THROWS_AS(validate(ClassifierSpec::external("")), InvalidArgument);
  CHECK_THROWS_AS(validate(ClassifierSpec::external("x", 1)), InvalidArgument);
  CHECK_THROWS_AS(classify_batch(ClassifierSpec::stub(), std::vector<imaging::Image>{}), InvalidArgument);
}

TEST_CASE("external adapter protocol") {
  test::ScratchDir dir;

  SUBCASE("well-formed output") {
    const auto cmd = write_adapter(dir, "ok.sh",
                                   "for f in 00000 00001 00002; do [ -f \"$1/$f.png\" ] || exit 9; done\n" +
                                       csv_adapter(0));
    std::vector<imaging::Image> imgs(3, imaging::Image(4, 4, kPlain));
    const auto out = classify_batch(ClassifierSpec::external(cmd), imgs);
    REQUIRE(out.size() == 3);
    for (const auto& p : out) {
      CHECK(p.probabilities == std::vector<double>{0.25, 0.75});
      CHECK(p.argmax() == 1);
    }
  }

  SUBCASE("one row short") {
    const auto cmd = write_adapter(dir, "short.sh", csv_adapter(1));
    CHECK(external_error(cmd, 4) == ClassifierError::Kind::count_mismatch);
    try {
      classify_batch(ClassifierSpec::external(cmd), std::vector<imaging::Image>(4, imaging::Image(2, 2)));
    } catch (const ClassifierError& e) {
      CHECK(std::string(e.what()).find("short by 1") != std::string::npos);
    }
  }

  SUBCASE("non-zero exit") {
    const auto cmd = write_adapter(dir, "fail.sh", "exit 3\n");
    CHECK(external_error(cmd, 2) == ClassifierError::Kind::launch_failure);
  }

  SUBCASE("missing executable") {
    CHECK(external_error((dir / "absent.sh").string(), 2) == ClassifierError::Kind::launch_failure);
  }

  SUBCASE("bad header") {
    const auto cmd = write_adapter(dir, "header.sh", csv_adapter(0, "idx,a,b"));
    CHECK(external_error(cmd, 2) == ClassifierError::Kind::malformed_output);
  }

  SUBCASE("row off the simplex names its line") {
    const auto cmd = write_adapter(dir, "simplex.sh",
                                   "printf 'index,p_0,p_1\\n0,0.5,0.5\\n1,0.7,0.7\\n' > \"$1/predictions.csv\"\n");
    try {
      classify_batch(ClassifierSpec::external(cmd), std::vector<imaging::Image>(2, imaging::Image(2, 2)));
      FAIL("expected an error");
    } catch (const ClassifierError& e) {
      CHECK(e.kind() == ClassifierError::Kind::malformed_output);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
}

TEST_CASE("mutated adapter output is either valid or rejected as a classifier error") {
  test::ScratchDir dir;
  const std::string good = "index,p_0,p_1\n0,0.25,0.75\n1,1,0\n2,0.5,0.5\n";
  const std::string alphabet = "0123456789.,-e\nxp_index ";
  std::mt19937_64 rng(99);
  const auto path = dir / "predictions.csv";
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text = good;
    const int edits = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < edits; ++e) {
      const std::size_t at = rng() % (text.size() + 1);
      switch (rng() % 3) {
        case 0:
          text.insert(at, 1, alphabet[rng() % alphabet.size()]);
          break;
        case 1:
          if (at < text.size()) text.erase(at, 1);
          break;
        default:
          if (at < text.size()) text[at] = alphabet[rng() % alphabet.size()];
      }
    }
    std::ofstream(path, std::ios::trunc) << text;
    CAPTURE(text);
    try {
      const auto out = parse_predictions_csv(path, 3, 2);
      REQUIRE(out.size() == 3);
      for (const auto& p : out) CHECK(on_simplex(p));
    } catch (const ClassifierError&) {
    }
  }
}
