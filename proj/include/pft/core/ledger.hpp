#pragma once

#include <cstdint>

#include "pft/core/types.hpp"

namespace pft {

// Episode accounting against a total data budget N. Counters only grow, and
// offline_used + online_used never exceeds total_budget.
class BudgetLedger {
 public:
  explicit BudgetLedger(std::uint64_t total_budget) : total_(total_budget) {}

  std::uint64_t total_budget() const { return total_; }
  std::uint64_t offline_used() const { return offline_; }
  std::uint64_t online_used() const { return online_; }
  std::uint64_t remaining() const { return total_ - offline_ - online_; }
  bool exhausted() const { return remaining() == 0; }

  // Throws BudgetExhausted (ledger untouched) if n episodes do not fit.
  BudgetLedger& consume(EpisodeSource source, std::uint64_t n);

  friend bool operator==(const BudgetLedger&, const BudgetLedger&) = default;

 private:
  std::uint64_t total_;
  std::uint64_t offline_ = 0;
  std::uint64_t online_ = 0;
};

// Value-returning form used where the previous ledger must stay intact.
BudgetLedger ledger_consume(BudgetLedger ledger, EpisodeSource source, std::uint64_t n);
std::uint64_t ledger_remaining(const BudgetLedger& ledger);

}  // namespace pft
