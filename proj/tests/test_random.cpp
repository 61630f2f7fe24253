#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "airtran/random.hpp"

namespace airtran {
namespace {

TEST(Rng, SplitmixMatchesPublishedReference) {
  std::uint64_t state = 0;
  EXPECT_EQ(splitmix64(state), 0xE220A8397B1DCDAFULL);
}

// Reference values from an independent Python transcription of xoshiro256**.
TEST(Rng, XoshiroStreamIsPinned) {
  Rng rng(12345);
  EXPECT_EQ(rng.next_u64(), 0xBE6A36374160D49BULL);
  EXPECT_EQ(rng.next_u64(), 0x214AAA0637A688C6ULL);
  EXPECT_EQ(rng.next_u64(), 0xF69D16DE9954D388ULL);
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  Rng rng(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.below(13);
    ASSERT_LT(v, 13u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 13u);
}

TEST(Rng, NormalHasUnitMoments) {
  Rng rng(99);
  double sum = 0, sq = 0;
  constexpr int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, DerivedStreamsDiffer) {
  Rng a = Rng::derive(1, 0);
  Rng b = Rng::derive(1, 1);
  EXPECT_NE(a.next_u64(), b.next_u64());
}

TEST(Rng, ShuffleIsAPermutation) {
  std::vector<int> items{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  Rng rng(3);
  rng.shuffle(std::span<int>(items));
  std::multiset<int> got(items.begin(), items.end());
  EXPECT_EQ(got, (std::multiset<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
}

}  // namespace
}  // namespace airtran
