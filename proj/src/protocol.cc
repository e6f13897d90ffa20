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

#include "dpvfc/protocol.h"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <exception>
#include <numeric>
#include <thread>
#include <utility>

#include "dpvfc/baselines.h"
#include "dpvfc/bytes.h"
#include "dpvfc/geometric_hash.h"
#include "dpvfc/kmeans.h"
#include "dpvfc/sketch.h"
#include "dpvfc/status.h"

namespace dpvfc {

std::string MessageKindName(MessageKind kind) {
  switch (kind) {
    case MessageKind::kCountQuery:
      return "count-query";
    case MessageKind::kSetup:
      return "setup";
    case MessageKind::kDone:
      return "done";
    case MessageKind::kCountResponse:
      return "count-response";
    case MessageKind::kCenters:
      return "centers";
    case MessageKind::kMembershipEncoding:
      return "membership-encoding";
    case MessageKind::kAbort:
      return "abort";
  }
  return "unknown";
}

std::vector<uint8_t> SerializeMessage(const ProtocolMessage& message) {
  ByteWriter w;
  w.Reserve(32 + message.payload.size());
  w.PutU64(static_cast<uint64_t>(message.kind));
  w.PutU64(static_cast<uint64_t>(message.sender + 1));
  w.PutU64(static_cast<uint64_t>(message.receiver + 1));
  w.PutU64(message.payload.size());
  w.PutBytes(message.payload);
  return w.Take();
}

ProtocolMessage DeserializeMessage(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  ProtocolMessage m;
  m.kind = static_cast<MessageKind>(r.GetU64());
  m.sender = static_cast<int>(r.GetU64()) - 1;
  m.receiver = static_cast<int>(r.GetU64()) - 1;
  const uint64_t len = r.GetU64();
  if (len != r.remaining()) {
    throw Error(ErrorCode::kParseError, "envelope length mismatch");
  }
  m.payload.assign(bytes.end() - static_cast<std::ptrdiff_t>(len), bytes.end());
  return m;
}

void RecordingTap::OnMessage(std::span<const uint8_t> envelope) {
  std::lock_guard<std::mutex> lock(mu_);
  envelopes_.emplace_back(envelope.begin(), envelope.end());
}

std::vector<ProtocolMessage> RecordingTap::Messages() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<ProtocolMessage> out;
  for (const auto& e : envelopes_) out.push_back(DeserializeMessage(e));
  return out;
}

std::vector<std::vector<uint8_t>> RecordingTap::Envelopes() const {
  std::lock_guard<std::mutex> lock(mu_);
  return envelopes_;
}

double EstimateN(size_t true_n, double eps0, Seed seed) {
  CheckParameter(eps0 > 0.0, "eps0 must be positive to estimate n");
  const double noisy =
      static_cast<double>(true_n) + LaplaceSample(1.0 / eps0, seed);
  return std::max(1.0, noisy);
}

Seed AgreeSharedSeed(std::span<const uint64_t> shares) {
  uint64_t x = 0;
  for (uint64_t s : shares) x ^= s;
  return Seed{x};
}

Matrix GridPoints(std::span<const Matrix> centers) {
  std::vector<size_t> dims;
  size_t width = 0;
  for (const Matrix& c : centers) {
    dims.push_back(c.rows);
    width += c.cols;
  }
  WeightGrid shape = WeightGrid::Zeros(dims, 1.0);
  Matrix points(shape.size(), width);
  for (size_t flat = 0; flat < shape.size(); ++flat) {
    const std::vector<size_t> t = shape.Tuple(flat);
    size_t col = 0;
    for (size_t l = 0; l < centers.size(); ++l) {
      for (size_t j = 0; j < centers[l].cols; ++j) {
        points(flat, col++) = centers[l](t[l], j);
      }
    }
  }
  return points;
}

namespace {

std::vector<uint8_t> EncodeCenters(const Matrix& c) {
  ByteWriter w;
  w.PutU64(c.rows);
  w.PutU64(c.cols);
  for (double v : c.data) w.PutF64(v);
  return w.Take();
}

Matrix DecodeCenters(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  const uint64_t rows = r.GetU64();
  const uint64_t cols = r.GetU64();
  if (r.remaining() != 8 * rows * cols) {
    throw Error(ErrorCode::kParseError, "malformed centers payload");
  }
  Matrix c(rows, cols);
  for (double& v : c.data) v = r.GetF64();
  return c;
}

std::vector<uint8_t> EncodeDoubles(std::span<const double> values) {
  ByteWriter w;
  w.PutU64(values.size());
  for (double v : values) w.PutF64(v);
  return w.Take();
}

std::vector<double> DecodeDoubles(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  const uint64_t n = r.GetU64();
  if (r.remaining() != 8 * n) {
    throw Error(ErrorCode::kParseError, "malformed vector payload");
  }
  std::vector<double> v(n);
  for (double& x : v) x = r.GetF64();
  return v;
}

std::vector<uint8_t> EncodeLabels(std::span<const uint32_t> labels) {
  ByteWriter w;
  w.PutU64(labels.size());
  for (uint32_t l : labels) w.PutU64(l);
  return w.Take();
}

std::vector<uint32_t> DecodeLabels(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  const uint64_t n = r.GetU64();
  if (r.remaining() != 8 * n) {
    throw Error(ErrorCode::kParseError, "malformed label payload");
  }
  std::vector<uint32_t> v(n);
  for (uint32_t& x : v) x = static_cast<uint32_t>(r.GetU64());
  return v;
}

std::vector<uint8_t> EncodeU64(uint64_t v) {
  ByteWriter w;
  w.PutU64(v);
  return w.Take();
}

// One data party. It sees only its own view and the shared seed; everything
// it emits is serialized by the transport.
class Party {
 public:
  Party(int index, const DatasetView& view, const RunConfig& config,
        const BudgetSplit& split, const RandomStream& stream, Seed shared)
      : index_(index),
        view_(view),
        config_(config),
        split_(split),
        stream_(stream),
        shared_(shared) {
    // Users in id order, so that every party enumerates them identically.
    order_.resize(view.ids.size());
    std::iota(order_.begin(), order_.end(), size_t{0});
    std::sort(order_.begin(), order_.end(), [&](size_t a, size_t b) {
      return view.ids[a] < view.ids[b];
    });
  }

  std::vector<ProtocolMessage> Handle(const ProtocolMessage& in) {
    switch (in.kind) {
      case MessageKind::kCountQuery:
        return {Reply(MessageKind::kCountResponse, CountResponse())};
      case MessageKind::kSetup: {
        ByteReader r(in.payload);
        const size_t k_prime = r.GetU64();
        LocalCluster(k_prime);
        std::vector<ProtocolMessage> out;
        out.push_back(Reply(MessageKind::kCenters, EncodeCenters(model_.centers)));
        out.push_back(Reply(MessageKind::kMembershipEncoding, Encode()));
        return out;
      }
      default:
        return {};
    }
  }

  const PrivacyLedger& ledger() const { return ledger_; }
  const LocalModel& model() const { return model_; }

 private:
  ProtocolMessage Reply(MessageKind kind, std::vector<uint8_t> payload) const {
    ProtocolMessage m;
    m.kind = kind;
    m.sender = index_;
    m.receiver = kServer;
    m.payload = std::move(payload);
    return m;
  }

  std::vector<uint8_t> CountResponse() {
    double n = static_cast<double>(view_.ids.size());
    if (config_.estimator != Estimator::kNonPrivate) {
      n = EstimateN(view_.ids.size(), split_.eps0,
                    stream_.Fork("count").NextSeed());
      ledger_.Record(index_, "count-query", split_.eps0);
    }
    ByteWriter w;
    w.PutF64(n);
    return w.Take();
  }

  void LocalCluster(size_t k_prime) {
    const Seed seed = stream_.Fork("local-cluster").NextSeed();
    KMeansOptions km;
    km.iters = config_.kmeans_iters;
    km.restarts = config_.kmeans_restarts;
    switch (config_.ResolvedLocalClustering()) {
      case LocalClustering::kDplloyd: {
        DplloydOptions opts;
        opts.iters = config_.dplloyd_iters;
        model_ = Dplloyd(view_.matrix, k_prime, split_.eps1, seed, opts,
                         &ledger_, index_);
        break;
      }
      case LocalClustering::kKMeans:
        model_ = NonPrivateLocal(view_.matrix, k_prime, seed, km);
        break;
      default: {
        DplsfOptions opts;
        opts.depth = config_.dplsf_depth;
        opts.count_fraction = config_.dplsf_count_fraction;
        opts.kmeans = km;
        model_ = Dplsf(view_.matrix, k_prime, split_.eps1, seed, opts,
                       &ledger_, index_);
      }
    }
  }

  std::vector<uint32_t> SortedLabels() const {
    std::vector<uint32_t> labels(order_.size());
    for (size_t i = 0; i < order_.size(); ++i) {
      labels[i] = model_.partition.labels[order_[i]];
    }
    return labels;
  }

  std::vector<uint8_t> Encode() {
    const Seed seed = stream_.Fork("encoding").NextSeed();
    switch (config_.estimator) {
      case Estimator::kDpfmpsBasic:
      case Estimator::kDpfmpsTwoPhase: {
        const SketchParams params = SketchParams::Private(
            config_.sketches, config_.gamma, split_.eps2, split_.delta2);
        const std::vector<HashKey> keys = DeriveKeys(shared_, config_.sketches);
        std::vector<uint64_t> fps(view_.ids.size());
        for (size_t i = 0; i < fps.size(); ++i) {
          fps[i] = IdFingerprint(view_.ids[i]);
        }
        const SketchSet sketches =
            SketchPartition(fps, model_.partition, params, keys, seed, index_);
        ledger_.Record(index_, "dpfmps-encoding", split_.eps2, split_.delta2);
        return SerializeSketchSet(sketches);
      }
      case Estimator::kIndLap: {
        const NoisyHistogram h =
            MakeNoisyHistogram(model_.partition, split_.eps2, seed);
        ledger_.Record(index_, "histogram-encoding", split_.eps2);
        return EncodeDoubles(h.counts);
      }
      case Estimator::kLdpAgg:
      case Estimator::kLdpAgg2P: {
        const std::vector<uint32_t> labels = SortedLabels();
        const std::vector<LdpReport> reports =
            LdpEncodeAll(labels, model_.partition.k, split_.eps2, seed);
        ledger_.Record(index_, "ldp-encoding", split_.eps2);
        const std::string text = LdpReportsToJsonl(index_, reports);
        return {text.begin(), text.end()};
      }
      case Estimator::kNonPrivate:
        return EncodeLabels(SortedLabels());
    }
    return {};
  }

  int index_;
  const DatasetView& view_;
  const RunConfig& config_;
  BudgetSplit split_;
  RandomStream stream_;
  Seed shared_;
  std::vector<size_t> order_;
  LocalModel model_;
  PrivacyLedger ledger_;
};

struct PartyFailure {
  int party;
};

// Ordered, reliable, serialized transport between the server and parties.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void Send(const ProtocolMessage& m) = 0;
  virtual ProtocolMessage Receive(int party) = 0;
};

class Channel {
 public:
  void Push(std::vector<uint8_t> bytes) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      queue_.push_back(std::move(bytes));
    }
    cv_.notify_one();
  }
  std::vector<uint8_t> Pop() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return !queue_.empty(); });
    std::vector<uint8_t> b = std::move(queue_.front());
    queue_.pop_front();
    return b;
  }
  bool Empty() {
    std::lock_guard<std::mutex> lock(mu_);
    return queue_.empty();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::vector<uint8_t>> queue_;
};

std::vector<uint8_t> AbortEnvelope(int party, const std::string& what) {
  ProtocolMessage m;
  m.kind = MessageKind::kAbort;
  m.sender = party;
  m.payload.assign(what.begin(), what.end());
  return SerializeMessage(m);
}

// Parties run on their own threads, blocked on their downlink channel.
class ThreadedTransport : public Transport {
 public:
  ThreadedTransport(std::vector<Party>& parties, MessageTap* tap)
      : parties_(parties),
        tap_(tap),
        down_(parties.size()),
        up_(parties.size()),
        errors_(parties.size()) {
    for (size_t l = 0; l < parties.size(); ++l) {
      threads_.emplace_back([this, l] { Loop(l); });
    }
  }

  ~ThreadedTransport() override { Shutdown(); }

  void Send(const ProtocolMessage& m) override {
    std::vector<uint8_t> bytes = SerializeMessage(m);
    if (tap_ != nullptr) tap_->OnMessage(bytes);
    down_[m.receiver].Push(std::move(bytes));
  }

  ProtocolMessage Receive(int party) override {
    std::vector<uint8_t> bytes = up_[party].Pop();
    ProtocolMessage m = DeserializeMessage(bytes);
    if (m.kind == MessageKind::kAbort) throw PartyFailure{party};
    if (tap_ != nullptr) tap_->OnMessage(bytes);
    return m;
  }

  // Stops every party and returns the first party exception, if any.
  std::exception_ptr Shutdown() {
    if (!threads_.empty()) {
      ProtocolMessage done;
      done.kind = MessageKind::kDone;
      for (size_t l = 0; l < down_.size(); ++l) {
        done.receiver = static_cast<int>(l);
        down_[l].Push(SerializeMessage(done));
      }
      threads_.clear();
    }
    for (auto& e : errors_) {
      if (e) return e;
    }
    return nullptr;
  }

 private:
  void Loop(size_t l) {
    try {
      while (true) {
        const ProtocolMessage in = DeserializeMessage(down_[l].Pop());
        if (in.kind == MessageKind::kDone) return;
        for (const ProtocolMessage& out : parties_[l].Handle(in)) {
          up_[l].Push(SerializeMessage(out));
        }
      }
    } catch (const std::exception& e) {
      errors_[l] = std::current_exception();
      up_[l].Push(AbortEnvelope(static_cast<int>(l), e.what()));
    }
  }

  std::vector<Party>& parties_;
  MessageTap* tap_;
  std::vector<Channel> down_;
  std::vector<Channel> up_;
  std::vector<std::exception_ptr> errors_;
  std::vector<std::jthread> threads_;
};

// Every actor on the calling thread: a send to a party runs its handler
// immediately and queues the replies.
class InlineTransport : public Transport {
 public:
  InlineTransport(std::vector<Party>& parties, MessageTap* tap)
      : parties_(parties), tap_(tap), up_(parties.size()) {}

  void Send(const ProtocolMessage& m) override {
    const std::vector<uint8_t> bytes = SerializeMessage(m);
    if (tap_ != nullptr) tap_->OnMessage(bytes);
    const ProtocolMessage in = DeserializeMessage(bytes);
    for (const ProtocolMessage& out : parties_[m.receiver].Handle(in)) {
      up_[m.receiver].push_back(SerializeMessage(out));
    }
  }

  ProtocolMessage Receive(int party) override {
    if (up_[party].empty()) {
      throw Error(ErrorCode::kInvalidParameter, "no pending message");
    }
    std::vector<uint8_t> bytes = std::move(up_[party].front());
    up_[party].pop_front();
    if (tap_ != nullptr) tap_->OnMessage(bytes);
    return DeserializeMessage(bytes);
  }

 private:
  std::vector<Party>& parties_;
  MessageTap* tap_;
  std::vector<std::deque<std::vector<uint8_t>>> up_;
};

ProtocolMessage Expect(Transport& t, int party, MessageKind kind) {
  ProtocolMessage m = t.Receive(party);
  if (m.kind != kind || m.sender != party) {
    throw Error(ErrorCode::kParseError,
                "expected " + MessageKindName(kind) + " from party " +
                    std::to_string(party) + ", got " + MessageKindName(m.kind));
  }
  return m;
}

ProtocolMessage ServerMessage(MessageKind kind, int receiver,
                              std::vector<uint8_t> payload = {}) {
  ProtocolMessage m;
  m.kind = kind;
  m.sender = kServer;
  m.receiver = receiver;
  m.payload = std::move(payload);
  return m;
}

// The server's side of the run. It holds no hash keys and sees only what
// the transport delivers.
ProtocolResult Serve(Transport& t, const RunConfig& config,
                     const BudgetSplit& split, size_t parties) {
  const int S = static_cast<int>(parties);
  RandomStream server = RandomStream(Seed{config.seed}).Fork("server");
  ProtocolResult result;
  result.bytes_per_party.assign(parties, 0);
  result.encoding_bytes_per_party.assign(parties, 0);

  const bool ldp = IsLdp(config.estimator);
  if (!ldp) {
    const int q =
        static_cast<int>(server.Fork("query-party").NextBelow(parties));
    result.queried_party = q;
    t.Send(ServerMessage(MessageKind::kCountQuery, q));
    const ProtocolMessage resp = Expect(t, q, MessageKind::kCountResponse);
    result.bytes_per_party[q] += resp.byte_len();
    ByteReader r(resp.payload);
    result.nhat = r.GetF64();
  }

  if (config.k_prime) {
    result.k_prime = *config.k_prime;
  } else {
    SigmaModel model;
    model.rho = config.rho;
    model.M = config.sketches;
    model.eps2 = split.eps2;
    model.delta = split.delta2;
    model.parties = parties;
    result.k_prime =
        AutoKPrime(result.nhat, config.k, parties, model, config.k_max);
  }
  for (int l = 0; l < S; ++l) {
    t.Send(ServerMessage(MessageKind::kSetup, l, EncodeU64(result.k_prime)));
  }

  std::vector<Matrix> centers(parties);
  std::vector<std::vector<uint8_t>> encodings(parties);
  for (int l = 0; l < S; ++l) {
    const ProtocolMessage c = Expect(t, l, MessageKind::kCenters);
    const ProtocolMessage e = Expect(t, l, MessageKind::kMembershipEncoding);
    centers[l] = DecodeCenters(c.payload);
    if (centers[l].rows != result.k_prime) {
      throw Error(ErrorCode::kParseError, "party sent the wrong center count");
    }
    result.bytes_per_party[l] += c.byte_len() + e.byte_len();
    result.encoding_bytes_per_party[l] = e.byte_len();
    encodings[l] = e.payload;
  }
  for (int l = 0; l < S; ++l) t.Send(ServerMessage(MessageKind::kDone, l));

  const std::vector<size_t> dims(parties, result.k_prime);
  switch (config.estimator) {
    case Estimator::kDpfmpsBasic:
    case Estimator::kDpfmpsTwoPhase: {
      std::vector<SketchSet> sketches;
      for (const auto& e : encodings) sketches.push_back(DeserializeSketchSet(e));
      if (config.estimator == Estimator::kDpfmpsBasic) {
        result.grid = BasicEst(result.nhat, sketches);
      } else {
        UpdateSchedule schedule = config.schedule;
        schedule.seed = server.Fork("schedule").NextSeed();
        result.grid =
            TwoPhaseEst(result.nhat, sketches, schedule, &result.refinement);
      }
      break;
    }
    case Estimator::kIndLap: {
      std::vector<NoisyHistogram> hists;
      for (const auto& e : encodings) {
        hists.push_back({DecodeDoubles(e), split.eps2});
      }
      result.grid = IndLap(result.nhat, hists);
      break;
    }
    case Estimator::kLdpAgg:
    case Estimator::kLdpAgg2P: {
      std::vector<std::vector<LdpReport>> reports;
      for (const auto& e : encodings) {
        reports.push_back(LdpReportsFromJsonl(std::string(e.begin(), e.end())));
      }
      result.nhat = static_cast<double>(reports[0].size());
      if (config.estimator == Estimator::kLdpAgg) {
        result.grid =
            LdpDecode(result.nhat, reports, split.eps2, result.k_prime);
      } else {
        UpdateSchedule schedule = config.schedule;
        schedule.seed = server.Fork("schedule").NextSeed();
        result.grid = LdpAgg2PEst(result.nhat, reports, split.eps2,
                                  result.k_prime, schedule, &result.refinement);
      }
      break;
    }
    case Estimator::kNonPrivate: {
      std::vector<std::vector<uint32_t>> labels;
      for (const auto& e : encodings) labels.push_back(DecodeLabels(e));
      result.grid = TruthGrid(labels, dims);
      break;
    }
  }

  WeightedPoints wp;
  wp.points = GridPoints(centers);
  wp.weights = result.grid.weights;
  KMeansOptions km;
  km.iters = config.kmeans_iters;
  km.restarts = config.kmeans_restarts;
  result.centers =
      WeightedKMeans(wp, config.k, server.Fork("kmeans").NextSeed(), km)
          .centers;
  return result;
}

}  // namespace

ProtocolResult RunProtocol(const RunConfig& config,
                           std::span<const DatasetView> views,
                           MessageTap* tap) {
  config.Validate();
  if (views.size() != config.parties) {
    throw Error(ErrorCode::kConfigInvalid,
                "expected " + std::to_string(config.parties) + " party views");
  }
  {
    std::vector<UserId> reference = views[0].ids;
    std::sort(reference.begin(), reference.end());
    for (const DatasetView& v : views) {
      if (v.matrix.rows != v.ids.size()) {
        throw Error(ErrorCode::kLengthMismatch, "view rows do not match ids");
      }
      std::vector<UserId> ids = v.ids;
      std::sort(ids.begin(), ids.end());
      if (ids != reference) {
        throw Error(ErrorCode::kIdMismatch, "parties hold different user ids");
      }
    }
    if (reference.empty()) {
      throw Error(ErrorCode::kIdMismatch, "parties hold no users");
    }
  }
  const size_t S = views.size();
  const size_t n = views[0].ids.size();
  PrivacyBudget budget{config.epsilon, config.ResolvedDelta(n)};
  BudgetSplit split;
  try {
    split = SplitBudget(budget, static_cast<int>(S), config.ResolvedB());
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigInvalid, e.what());
  }

  const RandomStream root(Seed{config.seed});
  const RandomStream party_root = root.Fork("party");
  std::vector<uint64_t> shares(S);
  for (size_t l = 0; l < S; ++l) {
    shares[l] = party_root.Fork(l).Fork("key-share").NextU64();
  }
  const Seed shared = AgreeSharedSeed(shares);
  std::vector<Party> parties;
  parties.reserve(S);
  for (size_t l = 0; l < S; ++l) {
    parties.emplace_back(static_cast<int>(l), views[l], config, split,
                         party_root.Fork(l), shared);
  }

  ProtocolResult result;
  if (config.concurrent) {
    ThreadedTransport transport(parties, tap);
    try {
      result = Serve(transport, config, split, S);
    } catch (const PartyFailure&) {
      std::rethrow_exception(transport.Shutdown());
    }
    if (std::exception_ptr e = transport.Shutdown()) std::rethrow_exception(e);
  } else {
    InlineTransport transport(parties, tap);
    result = Serve(transport, config, split, S);
  }
  for (const Party& p : parties) {
    result.ledger.Append(p.ledger());
    result.local_models.push_back(p.model());
  }
  return result;
}

}  // namespace dpvfc
