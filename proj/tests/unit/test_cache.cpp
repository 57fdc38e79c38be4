#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "ideoscale/cache.hpp"
#include "ideoscale/rate_limiter.hpp"
#include "ideoscale/transport.hpp"
#include "support/temp_dir.hpp"

using namespace ideoscale;
using namespace std::chrono_literals;

TEST(PredictionCache, KeyIsContentAddressed) {
  EXPECT_EQ(PredictionCache::key("llm", "83d39fcfced28b1a", "Cut taxes."),
            "4ba4b574049160da89d85b7dafa090902197fa5a9d56cf45f8cf20fab6b1f34f");
  EXPECT_NE(PredictionCache::key("llm", "83d39fcfced28b1a", "Cut taxes"),
            PredictionCache::key("llm", "83d39fcfced28b1a", "Cut taxes."));
  EXPECT_NE(PredictionCache::key("llm2", "83d39fcfced28b1a", "Cut taxes."),
            PredictionCache::key("llm", "83d39fcfced28b1a", "Cut taxes."));
}

TEST(PredictionCache, StoreThenLookupRoundTrips) {
  testutil::TempDir dir;
  PredictionCache cache(dir.path());
  const auto key = PredictionCache::key("b", "p", "text");
  EXPECT_FALSE(cache.lookup(key).has_value());
  CacheEntry e{"b", "p", sha256_hex("text"), "s1", IdeologyClass::Left, "{text_number: 3, label: left-wing}", 3,
               "2024-01-01T00:00:00Z", false};
  cache.store(key, e);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / key.substr(0, 2) / (key + ".json")));
  const auto got = cache.lookup(key);
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(got->label, IdeologyClass::Left);
  EXPECT_EQ(got->raw_response, e.raw_response);
  EXPECT_EQ(got->batch_index, 3u);
  EXPECT_EQ(got->sentence_id, "s1");
}

TEST(PredictionCache, CorruptFileIsMiss) {
  testutil::TempDir dir;
  PredictionCache cache(dir.path());
  const auto key = PredictionCache::key("b", "p", "x");
  std::filesystem::create_directories(dir.path() / key.substr(0, 2));
  std::ofstream(dir.path() / key.substr(0, 2) / (key + ".json")) << "{\"backend_id\": ";
  EXPECT_FALSE(cache.lookup(key).has_value());
}

TEST(PredictionCache, ConcurrentWritersLeaveReadableEntries) {
  testutil::TempDir dir;
  PredictionCache cache(dir.path());
  std::vector<std::jthread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        const std::string text = "t" + std::to_string(i % 10);
        cache.store(PredictionCache::key("b", "p", text),
                    {"b", "p", sha256_hex(text), "s", IdeologyClass::Right, std::to_string(t), 0, "", false});
      }
    });
  threads.clear();
  for (int i = 0; i < 10; ++i) EXPECT_TRUE(cache.lookup(PredictionCache::key("b", "p", "t" + std::to_string(i))));
}

TEST(RateLimiter, NeverExceedsBudgetInAnyWindow) {
  ManualClock clock;
  RateLimiter limiter(clock, 5);
  std::vector<Clock::time_point> stamps;
  for (int i = 0; i < 23; ++i) {
    limiter.acquire();
    stamps.push_back(clock.now());
    clock.sleep_for(3s);
  }
  for (std::size_t i = 0; i + 5 < stamps.size(); ++i) EXPECT_GE(stamps[i + 5] - stamps[i], Clock::duration(1min));
  EXPECT_GT(clock.total_slept(), Clock::duration(4min));
}

TEST(RateLimiter, ZeroIsUnlimited) {
  ManualClock clock;
  RateLimiter limiter(clock, 0);
  for (int i = 0; i < 1000; ++i) limiter.acquire();
  EXPECT_EQ(clock.total_slept(), Clock::duration::zero());
}

TEST(RateLimiter, ThreadSafeUnderContention) {
  ManualClock clock;
  RateLimiter limiter(clock, 10);
  std::mutex m;
  std::vector<Clock::time_point> stamps;
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 4; ++t)
      threads.emplace_back([&] {
        for (int i = 0; i < 10; ++i) {
          limiter.acquire();
          std::lock_guard lock(m);
          stamps.push_back(clock.now());
        }
      });
  }
  std::sort(stamps.begin(), stamps.end());
  ASSERT_EQ(stamps.size(), 40u);
  for (std::size_t i = 0; i + 10 < stamps.size(); ++i) EXPECT_GE(stamps[i + 10] - stamps[i], Clock::duration(1min));
}

TEST(Transport, UrlHelpers) {
  EXPECT_EQ(split_url("http://h:80/a/b?q=1"), (std::pair<std::string, std::string>{"http://h:80", "/a/b?q=1"}));
  EXPECT_EQ(split_url("https://h"), (std::pair<std::string, std::string>{"https://h", "/"}));
  EXPECT_THROW(split_url("h/a"), Error);
  EXPECT_EQ(join_url("http://h/", "/zero-shot"), "http://h/zero-shot");
  EXPECT_EQ(join_url("http://h", "classify"), "http://h/classify");
}

TEST(Transport, RetryableStatuses) {
  EXPECT_TRUE((HttpResponse{0, "", "refused"}).retryable());
  EXPECT_TRUE((HttpResponse{429, "", ""}).retryable());
  EXPECT_TRUE((HttpResponse{503, "", ""}).retryable());
  EXPECT_FALSE((HttpResponse{400, "", ""}).retryable());
  EXPECT_TRUE((HttpResponse{200, "", ""}).transport_ok());
}
