#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "nfsm/protocol.hpp"

namespace nfsm {

class UnknownPolicy : public Error {
 public:
  using Error::Error;
};

/// An oblivious adversary. Values depend only on the indices passed in, never on the
/// execution, and lie in (0, 1]. Steps are numbered from 1.
class AdversaryPolicy {
 public:
  virtual ~AdversaryPolicy() = default;
  virtual std::string name() const = 0;
  /// L(v, t): length of step t of node v.
  virtual double step_length(NodeId v, std::uint64_t t) const = 0;
  /// D(v, t, u): delay of the message v transmits to u at the end of step t.
  virtual double delay(NodeId v, std::uint64_t t, NodeId u) const = 0;
};

class LockstepAdversary final : public AdversaryPolicy {
 public:
  std::string name() const override { return "lockstep"; }
  double step_length(NodeId, std::uint64_t) const override { return 1.0; }
  double delay(NodeId, std::uint64_t, NodeId) const override { return 1.0; }
};

/// Every value i.i.d. uniform on (0, 1].
class UniformAdversary final : public AdversaryPolicy {
 public:
  explicit UniformAdversary(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override;
  double step_length(NodeId v, std::uint64_t t) const override;
  double delay(NodeId v, std::uint64_t t, NodeId u) const override;

 private:
  std::uint64_t seed_;
};

/// Slow nodes get `factor` for their steps and for every delay on links touching them;
/// everything else is uniform on (0, fast_max].
class SkewAdversary final : public AdversaryPolicy {
 public:
  static constexpr double kDefaultFastMax = 0.05;

  SkewAdversary(std::uint64_t seed, std::vector<NodeId> slow, double factor, double fast_max = kDefaultFastMax);
  std::string name() const override;
  double step_length(NodeId v, std::uint64_t t) const override;
  double delay(NodeId v, std::uint64_t t, NodeId u) const override;

 private:
  bool slow(NodeId v) const;

  std::uint64_t seed_;
  std::vector<NodeId> slow_;
  double factor_;
  double fast_max_;
};

/// Replays recorded values. Unrecorded values default to 1, the largest legal value,
/// so events that were never realized in the recording can only move later.
///
/// File format, one value per line ('#' comments allowed):
///   L <v> <t> <value>
///   D <v> <t> <u> <value>
class ReplayAdversary final : public AdversaryPolicy {
 public:
  ReplayAdversary() = default;
  static ReplayAdversary from_stream(std::istream& in);
  static ReplayAdversary from_file(const std::filesystem::path& path);

  void set_step_length(NodeId v, std::uint64_t t, double value);
  void set_delay(NodeId v, std::uint64_t t, NodeId u, double value);
  void write(std::ostream& out) const;
  std::size_t size() const { return steps_.size() + delays_.size(); }

  std::string name() const override { return "replay"; }
  double step_length(NodeId v, std::uint64_t t) const override;
  double delay(NodeId v, std::uint64_t t, NodeId u) const override;

 private:
  std::map<std::pair<NodeId, std::uint64_t>, double> steps_;
  std::map<std::tuple<NodeId, std::uint64_t, NodeId>, double> delays_;
};

/// Builds a policy from a spec string:
///   lockstep | uniform:<seed> | skew:<seed>:<v1,v2,...>:<factor> | replay:<file>
std::unique_ptr<AdversaryPolicy> make_adversary(const std::string& spec);

struct PolicyInfo {
  std::string name;
  std::string spec_syntax;
  std::string description;
};

std::vector<PolicyInfo> adversary_catalog();

}  // namespace nfsm
