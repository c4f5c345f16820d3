#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqnpa {

// Thrown on malformed shapes, operators and words.
class AlgebraError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Parties, their sequential receivers, and the number of prepared states.
// inputs[p][r] / outcomes[p][r] are the alphabet sizes of receiver r of party p.
struct NetworkShape {
  std::vector<std::vector<int>> inputs;
  std::vector<std::vector<int>> outcomes;
  int n_states = 1;

  int parties() const { return static_cast<int>(inputs.size()); }
  int receivers(int party) const { return static_cast<int>(inputs.at(party).size()); }
  std::vector<int> receivers_per_party() const;

  void validate() const;

  // One party with two sequential binary receivers, four states.
  static NetworkShape qrac();

  // Copy of this shape with one more party appended.
  NetworkShape with_party(std::vector<int> party_inputs, std::vector<int> party_outcomes) const;

  bool operator==(const NetworkShape&) const = default;
};

// A full-sequence operator A_x^a of one party. Hermitian and idempotent.
struct SiteOperator {
  int party = 0;
  std::vector<int> inputs;
  std::vector<int> outcomes;

  auto operator<=>(const SiteOperator&) const = default;
  bool operator==(const SiteOperator&) const = default;
};

SiteOperator make_site_operator(const NetworkShape& shape, int party, std::vector<int> inputs,
                                std::vector<int> outcomes);

// Every full-sequence operator of `party`, inputs then outcomes in lexicographic order.
std::vector<SiteOperator> site_operators(const NetworkShape& shape, int party);

// Product of site operators in canonical form, or Zero.
// Factors are grouped by party in ascending order; within a party the order is the
// operator order. The empty product is the identity.
class CanonicalWord {
 public:
  CanonicalWord() = default;

  static CanonicalWord identity(int parties);
  static CanonicalWord zero(int parties);
  static CanonicalWord of(int parties, const SiteOperator& op);

  bool is_zero() const { return zero_; }
  bool is_identity() const { return !zero_ && factors_.empty(); }
  int parties() const { return parties_; }
  const std::vector<SiteOperator>& factors() const { return factors_; }
  std::size_t length() const { return factors_.size(); }

  // Compact text form, e.g. "0[00|01]0[01|00]"; "1" for identity, "0" for Zero.
  std::string str() const;

  auto operator<=>(const CanonicalWord&) const = default;
  bool operator==(const CanonicalWord&) const = default;

 private:
  friend CanonicalWord multiply(const CanonicalWord&, const CanonicalWord&);
  friend CanonicalWord adjoint(const CanonicalWord&);

  bool zero_ = false;
  int parties_ = 0;
  std::vector<SiteOperator> factors_;
};

CanonicalWord multiply(const CanonicalWord& lhs, const CanonicalWord& rhs);
CanonicalWord adjoint(const CanonicalWord& w);

// Result of multiplying two adjacent operators of one party.
enum class PairReduction { kKeep, kZero, kMerge };
PairReduction reduce_pair(const SiteOperator& p, const SiteOperator& q);

// One no-signaling identity  sum(lhs) = sum(rhs)  (rhs empty means the identity).
// k == 0 are the normalization families; k >= 1 fix the first k inputs and outcomes.
struct NoSignalingRelation {
  int party = 0;
  int k = 0;
  std::vector<int> prefix_inputs;
  std::vector<int> prefix_outcomes;
  std::vector<int> tail_lhs;
  std::vector<int> tail_rhs;
  std::vector<SiteOperator> lhs;
  std::vector<SiteOperator> rhs;

  bool rhs_is_identity() const { return k == 0; }
};

std::vector<NoSignalingRelation> nosignaling_relations(const NetworkShape& shape);

}  // namespace seqnpa
