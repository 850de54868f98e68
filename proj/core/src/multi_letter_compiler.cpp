#include "nfsm/multi_letter_compiler.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <string>

namespace nfsm {
namespace {

struct Key {
  StateId source;
  std::uint32_t subround;
  std::vector<std::uint8_t> partial;

  friend bool operator<(const Key& a, const Key& b) {
    return std::tie(a.source, a.subround, a.partial) < std::tie(b.source, b.subround, b.partial);
  }
};

std::size_t saturating_product(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) return std::numeric_limits<std::size_t>::max();
  return a * b;
}

}  // namespace

MultiLetterCompilation compile_multi_letter(const MultiLetterProtocol& p, const MultiLetterCompileOptions& opts) {
  require_valid(validate_protocol(p), "multi-letter protocol");
  const std::uint32_t b = p.bound();
  const std::size_t sigma = p.num_letters();

  MultiLetterCompilation out;
  out.subrounds = sigma;
  out.state_bound = saturating_product(p.num_states(), sigma);
  for (std::size_t i = 0; i < sigma; ++i) out.state_bound = saturating_product(out.state_bound, b + 1);

  // Observed letters of each source state, sorted by id.
  std::vector<std::vector<LetterId>> observed(p.num_states());
  for (StateId q = 0; q < p.num_states(); ++q) {
    observed[q] = p.state(q).observed;
    std::sort(observed[q].begin(), observed[q].end());
    observed[q].erase(std::unique(observed[q].begin(), observed[q].end()), observed[q].end());
  }

  ProtocolBuilder builder(b);
  for (LetterId l = 0; l < sigma; ++l) builder.add_letter(p.letter_name(l));
  builder.set_initial_letter(p.initial_letter());

  std::map<Key, StateId> ids;
  std::deque<Key> pending;
  auto intern = [&](const Key& k) -> StateId {
    if (auto it = ids.find(k); it != ids.end()) return it->second;
    if (ids.size() >= opts.max_states) {
      throw CompilationCapExceeded("multi-letter compilation exceeds " + std::to_string(opts.max_states) + " states");
    }
    std::string name = p.state_name(k.source) + "@" + std::to_string(k.subround);
    for (std::size_t i = 0; i < k.partial.size(); ++i) name += (i ? "." : ":") + std::to_string(k.partial[i]);
    const StateId id = builder.add_state(std::move(name));
    ids.emplace(k, id);
    out.annotations.push_back({k.source, k.subround, k.partial});
    pending.push_back(k);
    return id;
  };

  out.entry_state.resize(p.num_states());
  for (StateId q = 0; q < p.num_states(); ++q) out.entry_state[q] = intern({q, 0, {}});

  std::vector<std::uint8_t> full(sigma, 0);
  std::vector<Outcome> outs;
  while (!pending.empty()) {
    const Key k = pending.front();
    pending.pop_front();
    const StateId id = ids.at(k);
    const auto& obs = observed[k.source];
    const bool folds = std::binary_search(obs.begin(), obs.end(), k.subround);
    builder.set_query(id, k.subround);
    if (p.is_input(k.source) && k.subround == 0) builder.mark_input(id);
    if (p.is_output(k.source)) builder.mark_output(id);
    for (std::uint32_t c = 0; c <= b; ++c) {
      std::vector<std::uint8_t> partial = k.partial;
      if (folds) partial.push_back(static_cast<std::uint8_t>(c));
      const BoundedCount count = BoundedCount::from_index(c, b);
      if (k.subround + 1 < sigma) {
        builder.add_transition(id, count, {intern({k.source, k.subround + 1, std::move(partial)}), kEpsilon});
        continue;
      }
      std::fill(full.begin(), full.end(), 0);
      for (std::size_t i = 0; i < obs.size(); ++i) full[obs[i]] = partial[i];
      outs.clear();
      p.outcomes_into(k.source, CountView::from_indices(full, b), outs);
      for (const Outcome& o : outs) builder.add_transition(id, count, {intern({o.next, 0, {}}), o.letter});
    }
  }

  out.protocol = builder.build();
  return out;
}

}  // namespace nfsm
