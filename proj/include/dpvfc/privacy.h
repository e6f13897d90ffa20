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

#ifndef DPVFC_PRIVACY_H_
#define DPVFC_PRIVACY_H_

#include <string>
#include <vector>

namespace dpvfc {

inline constexpr double kBudgetTolerance = 1e-9;
inline constexpr double kDefaultBudgetFraction = 0.98;

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-5;

  // Throws kInvalidParameter unless epsilon > 0 and 0 < delta < 1.
  void Validate() const;
};

// eps0 pays for the server's count query; eps1 and eps2 are spent by every
// party on local clustering and on membership encoding respectively.
struct BudgetSplit {
  double eps0 = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double delta2 = 0.0;
  double b = kDefaultBudgetFraction;
  int parties = 2;
};

BudgetSplit SplitBudget(const PrivacyBudget& budget, int parties, double b);

struct LedgerEntry {
  // -1 denotes the server-side count query.
  int party = -1;
  std::string mechanism;
  double epsilon = 0.0;
  double delta = 0.0;
};

// Append-only record of every privacy spend in a run. Totals use basic
// sequential composition across all entries.
class PrivacyLedger {
 public:
  void Record(int party, std::string mechanism, double epsilon,
              double delta = 0.0);
  void Append(const PrivacyLedger& other);

  double TotalEpsilon() const;
  double TotalDelta() const;
  double PartyEpsilon(int party) const;
  bool WithinBudget(const PrivacyBudget& budget) const;

  const std::vector<LedgerEntry>& entries() const { return entries_; }

 private:
  std::vector<LedgerEntry> entries_;
};

}  // namespace dpvfc

#endif  // DPVFC_PRIVACY_H_
