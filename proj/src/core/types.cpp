#include <algorithm>
#include <string>

#include "pft/core/error.hpp"
#include "pft/core/ledger.hpp"
#include "pft/core/types.hpp"

namespace pft {

ActionValue ActionValue::continuous(std::vector<double> components) {
  for (double& c : components) c = std::clamp(c, -1.0, 1.0);
  return {Kind::kContinuous, 0, std::move(components)};
}

std::string_view to_string(EpisodeSource source) {
  return source == EpisodeSource::kTeacherOffline ? "teacher-offline" : "student-online";
}

BudgetLedger& BudgetLedger::consume(EpisodeSource source, std::uint64_t n) {
  if (n > remaining()) {
    throw BudgetExhausted("budget exhausted: requested " + std::to_string(n) + " episodes, " +
                          std::to_string(remaining()) + " remain of " + std::to_string(total_));
  }
  (source == EpisodeSource::kTeacherOffline ? offline_ : online_) += n;
  return *this;
}

BudgetLedger ledger_consume(BudgetLedger ledger, EpisodeSource source, std::uint64_t n) {
  ledger.consume(source, n);
  return ledger;
}

std::uint64_t ledger_remaining(const BudgetLedger& ledger) { return ledger.remaining(); }

}  // namespace pft
