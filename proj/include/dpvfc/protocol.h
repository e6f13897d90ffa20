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

#ifndef DPVFC_PROTOCOL_H_
#define DPVFC_PROTOCOL_H_

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpvfc/dataset.h"
#include "dpvfc/estimators.h"
#include "dpvfc/local_clustering.h"
#include "dpvfc/matrix.h"
#include "dpvfc/privacy.h"
#include "dpvfc/run_config.h"
#include "dpvfc/weight_grid.h"

namespace dpvfc {

inline constexpr int kServer = -1;

enum class MessageKind : uint64_t {
  // Server to party.
  kCountQuery = 1,
  kSetup = 2,
  kDone = 3,
  // Party to server.
  kCountResponse = 10,
  kCenters = 11,
  kMembershipEncoding = 12,
  // A party failed; the payload carries the error text.
  kAbort = 13,
};

std::string MessageKindName(MessageKind kind);

struct ProtocolMessage {
  MessageKind kind = MessageKind::kDone;
  int sender = kServer;
  int receiver = kServer;
  std::vector<uint8_t> payload;

  size_t byte_len() const { return payload.size(); }
};

// Envelope: kind, sender + 1, receiver + 1, payload length (u64 each), then
// the payload.
std::vector<uint8_t> SerializeMessage(const ProtocolMessage& message);
ProtocolMessage DeserializeMessage(std::span<const uint8_t> bytes);

// Observer of every serialized envelope crossing the party/server boundary.
class MessageTap {
 public:
  virtual ~MessageTap() = default;
  virtual void OnMessage(std::span<const uint8_t> envelope) = 0;
};

class RecordingTap : public MessageTap {
 public:
  void OnMessage(std::span<const uint8_t> envelope) override;
  std::vector<ProtocolMessage> Messages() const;
  std::vector<std::vector<uint8_t>> Envelopes() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::vector<uint8_t>> envelopes_;
};

// n + Laplace(1 / eps0), floored at 1. Throws kInvalidParameter unless
// eps0 > 0.
double EstimateN(size_t true_n, double eps0, Seed seed);

// Simulated peer-to-peer agreement: XOR of every party's share. The result
// only ever feeds DeriveKeys inside the parties.
Seed AgreeSharedSeed(std::span<const uint64_t> shares);

// Cartesian product of the parties' centers, party 0 most significant, with
// coordinates concatenated in party order.
Matrix GridPoints(std::span<const Matrix> centers);

struct ProtocolResult {
  // Final centers with coordinates concatenated in party order.
  Matrix centers;
  WeightGrid grid;
  double nhat = 0.0;
  size_t k_prime = 0;
  int queried_party = kServer;
  RefinementStats refinement;
  PrivacyLedger ledger;
  // All payload bytes a party sent, and those of its encoding message.
  std::vector<size_t> bytes_per_party;
  std::vector<size_t> encoding_bytes_per_party;
  // Simulator-side view of each party's local model, for evaluation only.
  std::vector<LocalModel> local_models;
};

// Runs every phase with one actor per party and a server actor that only
// see serialized messages. Throws kIdMismatch when the parties' id lists
// differ and kConfigInvalid on conflicting settings.
ProtocolResult RunProtocol(const RunConfig& config,
                           std::span<const DatasetView> views,
                           MessageTap* tap = nullptr);

}  // namespace dpvfc

#endif  // DPVFC_PROTOCOL_H_
