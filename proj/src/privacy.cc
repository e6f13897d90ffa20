// Copyright 2026 The dpvfc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpvfc/privacy.h"

#include <utility>

#include "dpvfc/status.h"

namespace dpvfc {

void PrivacyBudget::Validate() const {
  CheckParameter(epsilon > 0.0, "epsilon must be positive");
  CheckParameter(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
}

BudgetSplit SplitBudget(const PrivacyBudget& budget, int parties, double b) {
  budget.Validate();
  CheckParameter(parties >= 2, "at least two parties are required");
  CheckParameter(b > 0.0 && b <= 1.0, "budget fraction b must lie in (0, 1]");
  BudgetSplit split;
  split.b = b;
  split.parties = parties;
  split.eps0 = (1.0 - b) * budget.epsilon;
  split.eps1 = b * budget.epsilon / (2.0 * parties);
  split.eps2 = split.eps1;
  split.delta2 = budget.delta / parties;
  return split;
}

void PrivacyLedger::Record(int party, std::string mechanism, double epsilon,
                           double delta) {
  entries_.push_back({party, std::move(mechanism), epsilon, delta});
}

void PrivacyLedger::Append(const PrivacyLedger& other) {
  entries_.insert(entries_.end(), other.entries_.begin(),
                  other.entries_.end());
}

double PrivacyLedger::TotalEpsilon() const {
  double total = 0.0;
  for (const auto& e : entries_) total += e.epsilon;
  return total;
}

double PrivacyLedger::TotalDelta() const {
  double total = 0.0;
  for (const auto& e : entries_) total += e.delta;
  return total;
}

double PrivacyLedger::PartyEpsilon(int party) const {
  double total = 0.0;
  for (const auto& e : entries_) {
    if (e.party == party) total += e.epsilon;
  }
  return total;
}

bool PrivacyLedger::WithinBudget(const PrivacyBudget& budget) const {
  return TotalEpsilon() <= budget.epsilon + kBudgetTolerance &&
         TotalDelta() <= budget.delta + kBudgetTolerance * budget.delta;
}

}  // namespace dpvfc
