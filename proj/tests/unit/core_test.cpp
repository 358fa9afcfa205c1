#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "pft/core/binary_io.hpp"
#include "pft/core/error.hpp"
#include "pft/core/ledger.hpp"
#include "pft/core/random.hpp"
#include "pft/core/types.hpp"

using namespace pft;

TEST_CASE("random streams replay identically for the same seed and id") {
  RandomStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  RandomStream c(42, 8), d(43, 7);
  RandomStream e(42, 7);
  int same_c = 0, same_d = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = e.next_u64();
    same_c += x == c.next_u64();
    same_d += x == d.next_u64();
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
}

TEST_CASE("derive depends on identity, not on how far the parent has advanced") {
  RandomStream a(3, 1);
  RandomStream child1 = a.derive(5);
  for (int i = 0; i < 17; ++i) a.uniform();
  RandomStream child2 = a.derive(5);
  for (int i = 0; i < 100; ++i) CHECK(child1.next_u64() == child2.next_u64());
  RandomStream other = RandomStream(3, 1).derive(6);
  CHECK(RandomStream(3, 1).derive(5).next_u64() != other.next_u64());
}

TEST_CASE("uniform draws match the U(0,1) mean and variance") {
  RandomStream s(11, 0);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  // CLT: sd of the mean is sqrt(1/12 / n) ~ 6.5e-4; allow 5 sd.
  CHECK(std::abs(mean - 0.5) < 5 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(var - 1.0 / 12.0) < 2e-3);
}

TEST_CASE("normal draws have unit variance") {
  RandomStream s(12, 0);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 5 / std::sqrt(double(n)));
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("categorical frequencies pass a chi-square test") {
  RandomStream s(13, 0);
  const std::vector<double> w{0.1, 0.0, 2.0, 0.9, 1.0};
  const double total = 4.0;
  std::vector<int> counts(w.size(), 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[s.categorical(w)];
  CHECK(counts[1] == 0);
  double chi2 = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] == 0) continue;
    const double e = n * w[k] / total;
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  // 3 degrees of freedom; the 0.999 quantile is 16.27.
  CHECK(chi2 < 16.27);
}

TEST_CASE("uniform_index covers its range evenly") {
  RandomStream s(14, 0);
  std::vector<int> counts(6, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[s.uniform_index(6)];
  double chi2 = 0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  CHECK(chi2 < 20.5);  // 5 dof, 0.999 quantile
}

TEST_CASE("ledger accounting") {
  BudgetLedger ledger(10);
  CHECK(ledger.remaining() == 10);
  ledger.consume(EpisodeSource::kTeacherOffline, 4);
  ledger.consume(EpisodeSource::kStudentOnline, 3);
  CHECK(ledger.offline_used() == 4);
  CHECK(ledger.online_used() == 3);
  CHECK(ledger.remaining() == 3);
  CHECK_FALSE(ledger.exhausted());

  const BudgetLedger before = ledger;
  CHECK_THROWS_AS(ledger.consume(EpisodeSource::kStudentOnline, 4), BudgetExhausted);
  CHECK(ledger == before);

  ledger.consume(EpisodeSource::kStudentOnline, 3);
  CHECK(ledger.exhausted());
  CHECK(ledger_remaining(ledger) == 0);
  CHECK_THROWS_AS(ledger.consume(EpisodeSource::kTeacherOffline, 1), BudgetExhausted);

  const BudgetLedger fresh(5);
  const BudgetLedger next = ledger_consume(fresh, EpisodeSource::kTeacherOffline, 2);
  CHECK(fresh.remaining() == 5);
  CHECK(next.remaining() == 3);
}

TEST_CASE("ledger counters never exceed the budget under random consumption") {
  RandomStream s(15, 0);
  for (int trial = 0; trial < 200; ++trial) {
    BudgetLedger ledger(s.uniform_index(50));
    for (int k = 0; k < 30; ++k) {
      const auto src = s.uniform() < 0.5 ? EpisodeSource::kTeacherOffline : EpisodeSource::kStudentOnline;
      const auto n = s.uniform_index(8);
      try {
        ledger.consume(src, n);
      } catch (const BudgetExhausted&) {
        CHECK(n > ledger.remaining());
      }
      REQUIRE(ledger.offline_used() + ledger.online_used() <= ledger.total_budget());
    }
  }
}

TEST_CASE("byte writer and reader round-trip") {
  ByteWriter w;
  w.u8(200);
  w.u32(0xdeadbeef);
  w.u64(0x0123456789abcdefULL);
  w.f64(-0.1);
  w.f64(std::nan(""));
  w.str("grid-stack");
  const std::string bytes = w.take();
  ByteReader r(bytes);
  CHECK(r.u8() == 200);
  CHECK(r.u32() == 0xdeadbeef);
  CHECK(r.u64() == 0x0123456789abcdefULL);
  CHECK(r.f64() == -0.1);
  CHECK(std::isnan(r.f64()));
  CHECK(r.str() == "grid-stack");
  CHECK(r.remaining() == 0);
  CHECK_THROWS_AS(r.u8(), FormatError);

  ByteReader short_reader(std::string_view(bytes).substr(0, 10));
  short_reader.u8();
  short_reader.u32();
  CHECK_THROWS_AS(short_reader.u64(), FormatError);
}

TEST_CASE("atomic file write replaces content") {
  const auto dir = std::filesystem::temp_directory_path() / "pft_core_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "file.bin").string();
  write_file_atomic(path, "first");
  write_file_atomic(path, std::string("sec\0nd", 6));
  CHECK(read_file(path) == std::string("sec\0nd", 6));
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("continuous actions are clipped into the unit box") {
  const auto a = ActionValue::continuous({1.5, -3.0, 0.25});
  CHECK(a.vector == std::vector<double>{1.0, -1.0, 0.25});
  CHECK(to_string(EpisodeSource::kStudentOnline) == "student-online");
}
