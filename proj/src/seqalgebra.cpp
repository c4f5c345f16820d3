#include "seqnpa/seqalgebra.hpp"

#include <algorithm>
#include <sstream>

namespace seqnpa {

namespace {

// Calls fn for every tuple in the mixed-radix range given by sizes.
template <typename Fn>
void for_each_tuple(const std::vector<int>& sizes, Fn&& fn) {
  std::vector<int> t(sizes.size(), 0);
  for (int s : sizes)
    if (s <= 0) return;
  while (true) {
    fn(t);
    int i = static_cast<int>(t.size()) - 1;
    while (i >= 0 && ++t[i] == sizes[i]) t[i--] = 0;
    if (i < 0) return;
  }
}

std::string digits(const std::vector<int>& v) {
  std::string s;
  for (int d : v) s += std::to_string(d);
  return s;
}

}  // namespace

std::vector<int> NetworkShape::receivers_per_party() const {
  std::vector<int> r;
  for (const auto& in : inputs) r.push_back(static_cast<int>(in.size()));
  return r;
}

void NetworkShape::validate() const {
  if (inputs.empty()) throw AlgebraError("shape has no parties");
  if (inputs.size() != outcomes.size())
    throw AlgebraError("inputs and outcomes list different party counts");
  if (n_states < 1) throw AlgebraError("n_states must be >= 1");
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    if (inputs[p].empty()) throw AlgebraError("party " + std::to_string(p) + " has no receivers");
    if (inputs[p].size() != outcomes[p].size())
      throw AlgebraError("party " + std::to_string(p) + ": receiver counts differ");
    for (std::size_t r = 0; r < inputs[p].size(); ++r)
      if (inputs[p][r] < 1 || outcomes[p][r] < 1)
        throw AlgebraError("party " + std::to_string(p) + " receiver " + std::to_string(r) +
                           ": alphabet sizes must be >= 1");
  }
}

NetworkShape NetworkShape::qrac() { return NetworkShape{{{2, 2}}, {{2, 2}}, 4}; }

NetworkShape NetworkShape::with_party(std::vector<int> party_inputs,
                                      std::vector<int> party_outcomes) const {
  NetworkShape s = *this;
  s.inputs.push_back(std::move(party_inputs));
  s.outcomes.push_back(std::move(party_outcomes));
  s.validate();
  return s;
}

SiteOperator make_site_operator(const NetworkShape& shape, int party, std::vector<int> inputs,
                                std::vector<int> outcomes) {
  if (party < 0 || party >= shape.parties())
    throw AlgebraError("party " + std::to_string(party) + " out of range");
  const auto& in = shape.inputs[party];
  const auto& out = shape.outcomes[party];
  if (inputs.size() != in.size())
    throw AlgebraError("expected " + std::to_string(in.size()) + " inputs, got " +
                       std::to_string(inputs.size()));
  if (outcomes.size() != out.size())
    throw AlgebraError("expected " + std::to_string(out.size()) + " outcomes, got " +
                       std::to_string(outcomes.size()));
  for (std::size_t r = 0; r < in.size(); ++r) {
    if (inputs[r] < 0 || inputs[r] >= in[r])
      throw AlgebraError("input symbol " + std::to_string(inputs[r]) + " out of range at position " +
                         std::to_string(r));
    if (outcomes[r] < 0 || outcomes[r] >= out[r])
      throw AlgebraError("outcome symbol " + std::to_string(outcomes[r]) +
                         " out of range at position " + std::to_string(r));
  }
  return SiteOperator{party, std::move(inputs), std::move(outcomes)};
}

std::vector<SiteOperator> site_operators(const NetworkShape& shape, int party) {
  std::vector<SiteOperator> ops;
  for_each_tuple(shape.inputs.at(party), [&](const std::vector<int>& x) {
    for_each_tuple(shape.outcomes.at(party),
                   [&](const std::vector<int>& a) { ops.push_back({party, x, a}); });
  });
  return ops;
}

CanonicalWord CanonicalWord::identity(int parties) {
  CanonicalWord w;
  w.parties_ = parties;
  return w;
}

CanonicalWord CanonicalWord::zero(int parties) {
  CanonicalWord w;
  w.parties_ = parties;
  w.zero_ = true;
  return w;
}

CanonicalWord CanonicalWord::of(int parties, const SiteOperator& op) {
  if (op.party < 0 || op.party >= parties) throw AlgebraError("operator party out of range");
  CanonicalWord w = identity(parties);
  w.factors_.push_back(op);
  return w;
}

std::string CanonicalWord::str() const {
  if (zero_) return "0";
  if (factors_.empty()) return "1";
  std::ostringstream os;
  for (const auto& f : factors_)
    os << f.party << '[' << digits(f.inputs) << '|' << digits(f.outcomes) << ']';
  return os.str();
}

PairReduction reduce_pair(const SiteOperator& p, const SiteOperator& q) {
  const std::size_t m = p.inputs.size();
  std::size_t k = 0;
  while (k < m && p.inputs[k] == q.inputs[k]) {
    if (p.outcomes[k] != q.outcomes[k]) return PairReduction::kZero;
    ++k;
  }
  return k == m ? PairReduction::kMerge : PairReduction::kKeep;
}

CanonicalWord multiply(const CanonicalWord& lhs, const CanonicalWord& rhs) {
  if (lhs.parties_ != rhs.parties_) throw AlgebraError("words belong to different shapes");
  if (lhs.zero_ || rhs.zero_) return CanonicalWord::zero(lhs.parties_);
  CanonicalWord out = CanonicalWord::identity(lhs.parties_);
  out.factors_.reserve(lhs.factors_.size() + rhs.factors_.size());
  auto li = lhs.factors_.begin();
  auto ri = rhs.factors_.begin();
  for (int p = 0; p < lhs.parties_; ++p) {
    const std::size_t base = out.factors_.size();
    auto push = [&](const SiteOperator& op) {
      out.factors_.push_back(op);
      while (out.factors_.size() >= base + 2) {
        const auto& a = out.factors_[out.factors_.size() - 2];
        const auto& b = out.factors_.back();
        const PairReduction r = reduce_pair(a, b);
        if (r == PairReduction::kZero) return false;
        if (r == PairReduction::kKeep) break;
        out.factors_.pop_back();
      }
      return true;
    };
    for (; li != lhs.factors_.end() && li->party == p; ++li)
      if (!push(*li)) return CanonicalWord::zero(lhs.parties_);
    for (; ri != rhs.factors_.end() && ri->party == p; ++ri)
      if (!push(*ri)) return CanonicalWord::zero(lhs.parties_);
  }
  return out;
}

CanonicalWord adjoint(const CanonicalWord& w) {
  CanonicalWord out = w;
  auto it = out.factors_.begin();
  while (it != out.factors_.end()) {
    auto end = std::find_if(it, out.factors_.end(),
                            [&](const SiteOperator& f) { return f.party != it->party; });
    std::reverse(it, end);
    it = end;
  }
  return out;
}

std::vector<NoSignalingRelation> nosignaling_relations(const NetworkShape& shape) {
  std::vector<NoSignalingRelation> rels;
  for (int p = 0; p < shape.parties(); ++p) {
    const auto& in = shape.inputs[p];
    const auto& out = shape.outcomes[p];
    const int m = static_cast<int>(in.size());

    for_each_tuple(in, [&](const std::vector<int>& x) {
      NoSignalingRelation r;
      r.party = p;
      r.tail_lhs = x;
      for_each_tuple(out, [&](const std::vector<int>& a) { r.lhs.push_back({p, x, a}); });
      rels.push_back(std::move(r));
    });

    for (int k = 1; k < m; ++k) {
      const std::vector<int> in_head(in.begin(), in.begin() + k), in_tail(in.begin() + k, in.end());
      const std::vector<int> out_head(out.begin(), out.begin() + k),
          out_tail(out.begin() + k, out.end());
      std::vector<std::vector<int>> tails;
      for_each_tuple(in_tail, [&](const std::vector<int>& t) { tails.push_back(t); });

      for_each_tuple(in_head, [&](const std::vector<int>& xp) {
        for_each_tuple(out_head, [&](const std::vector<int>& ap) {
          auto family = [&](const std::vector<int>& t) {
            std::vector<SiteOperator> fam;
            std::vector<int> x = xp;
            x.insert(x.end(), t.begin(), t.end());
            for_each_tuple(out_tail, [&](const std::vector<int>& at) {
              std::vector<int> a = ap;
              a.insert(a.end(), at.begin(), at.end());
              fam.push_back({p, x, a});
            });
            return fam;
          };
          for (std::size_t i = 0; i < tails.size(); ++i)
            for (std::size_t j = i + 1; j < tails.size(); ++j) {
              NoSignalingRelation r;
              r.party = p;
              r.k = k;
              r.prefix_inputs = xp;
              r.prefix_outcomes = ap;
              r.tail_lhs = tails[i];
              r.tail_rhs = tails[j];
              r.lhs = family(tails[i]);
              r.rhs = family(tails[j]);
              rels.push_back(std::move(r));
            }
        });
      });
    }
  }
  return rels;
}

}  // namespace seqnpa
