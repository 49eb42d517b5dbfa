#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fleetsim/topic.hpp"

using namespace fleetsim;

namespace {

// Independent reference matcher: recursive descent over segment vectors.
bool oracle_match(const std::vector<std::string>& pat, std::size_t pi,
                  const std::vector<std::string>& top, std::size_t ti) {
  if (pi == pat.size()) return ti == top.size();
  if (pat[pi] == "#") return true;
  if (ti == top.size()) return false;
  if (pat[pi] != "+" && pat[pi] != top[ti]) return false;
  return oracle_match(pat, pi + 1, top, ti + 1);
}

bool oracle_matches(const std::string& pattern, const std::string& topic) {
  if (pattern == "#") return true;
  return oracle_match(split(pattern.substr(1), '/'), 0, split(topic.substr(1), '/'), 0);
}

}  // namespace

TEST_CASE("single-segment wildcard") {
  CHECK(topic_matches("/vehicle/+/pose", "/vehicle/3/pose"));
  CHECK_FALSE(topic_matches("/vehicle/+/pose", "/vehicle/3/points"));
  CHECK_FALSE(topic_matches("/vehicle/+/pose", "/vehicle/pose"));
}

TEST_CASE("multi-segment wildcard") {
  CHECK(topic_matches("/vehicle/#", "/vehicle/3/points"));
  CHECK(topic_matches("/vehicle/#", "/vehicle/3"));
  CHECK(topic_matches("/vehicle/#", "/vehicle"));
  CHECK_FALSE(topic_matches("/vehicle/#", "/cloud/vehicle/3"));
  CHECK(topic_matches("#", "/anything/at/all"));
}

TEST_CASE("exact pattern matches only itself") {
  CHECK(topic_matches("/vehicle/3/pose", "/vehicle/3/pose"));
  CHECK_FALSE(topic_matches("/vehicle/3/pose", "/vehicle/3/pose/extra"));
  CHECK_FALSE(topic_matches("/vehicle/3/pose", "/vehicle/3"));
}

TEST_CASE("topic validation") {
  CHECK(is_valid_topic("/vehicle/3/pose"));
  CHECK(is_valid_topic("/a"));
  CHECK_FALSE(is_valid_topic(""));
  CHECK_FALSE(is_valid_topic("/"));
  CHECK_FALSE(is_valid_topic("vehicle/3"));
  CHECK_FALSE(is_valid_topic("/vehicle/"));
  CHECK_FALSE(is_valid_topic("/vehicle//pose"));
  CHECK_FALSE(is_valid_topic("/vehicle/+/pose"));
}

TEST_CASE("pattern validation") {
  CHECK(is_valid_pattern("#"));
  CHECK(is_valid_pattern("/vehicle/#"));
  CHECK(is_valid_pattern("/vehicle/+/pose"));
  CHECK_FALSE(is_valid_pattern("/vehicle/#/pose"));  // '#' must be last
  CHECK_FALSE(is_valid_pattern("/vehicle/p+se"));    // wildcard inside a segment
  CHECK_FALSE(is_valid_pattern("/vehicle/"));
  CHECK_FALSE(is_valid_pattern(""));
}

TEST_CASE("matcher agrees with brute-force oracle on random cases") {
  std::mt19937_64 rng{20240811};
  const std::vector<std::string> words{"vehicle", "cloud", "pose", "points", "3", "14", "x"};
  auto random_segments = [&](bool pattern) {
    std::size_t n = 1 + rng() % 4;
    std::vector<std::string> segs;
    for (std::size_t i = 0; i < n; ++i) {
      if (pattern) {
        auto roll = rng() % 10;
        if (roll == 0 && i + 1 == n) {
          segs.push_back("#");
          continue;
        }
        if (roll <= 2) {
          segs.push_back("+");
          continue;
        }
      }
      segs.push_back(words[rng() % words.size()]);
    }
    return segs;
  };
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string pattern = "/" + join(random_segments(true), '/');
    std::string topic = "/" + join(random_segments(false), '/');
    if (!is_valid_pattern(pattern) || !is_valid_topic(topic)) continue;
    INFO("pattern=" << pattern << " topic=" << topic);
    REQUIRE(topic_matches(pattern, topic) == oracle_matches(pattern, topic));
    ++checked;
  }
  CHECK(checked >= 1000);
}
