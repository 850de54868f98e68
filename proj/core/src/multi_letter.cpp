#include "nfsm/multi_letter.hpp"

#include <algorithm>
#include <random>

namespace nfsm {

MultiLetterProtocol::MultiLetterProtocol(NameTable letters, LetterId initial_letter, std::uint32_t bound,
                                         std::vector<MultiLetterState> states)
    : letters_(std::move(letters)), initial_letter_(initial_letter), bound_(bound), states_(std::move(states)) {
  for (auto& s : states_) {
    std::sort(s.observed.begin(), s.observed.end());
    s.observed.erase(std::unique(s.observed.begin(), s.observed.end()), s.observed.end());
    state_names_.add(s.name);
  }
}

const std::string& MultiLetterProtocol::letter_name(LetterId l) const {
  static const std::string eps = "eps";
  if (l == kEpsilon) return eps;
  return letters_.name(l);
}

std::optional<StateId> MultiLetterProtocol::find_state(std::string_view name) const { return state_names_.find(name); }

std::vector<StateId> MultiLetterProtocol::input_states() const {
  std::vector<StateId> out;
  for (StateId q = 0; q < num_states(); ++q)
    if (is_input(q)) out.push_back(q);
  return out;
}

void MultiLetterProtocol::outcomes_into(StateId q, const CountView& counts, std::vector<Outcome>& out) const {
  out.clear();
  for (const GuardRule& rule : states_[q].rules) {
    if (!rule.guard(counts)) continue;
    for (const Outcome& o : rule.outcomes) {
      if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
    }
  }
}

std::vector<Outcome> MultiLetterProtocol::outcomes(StateId q, const CountView& counts) const {
  std::vector<Outcome> out;
  outcomes_into(q, counts, out);
  return out;
}

namespace {

// Number of points in B^k, saturating at limit + 1.
std::uint64_t space_size(std::uint32_t radix, std::size_t k, std::uint64_t limit) {
  std::uint64_t size = 1;
  for (std::size_t i = 0; i < k; ++i) {
    size *= radix;
    if (size > limit) return limit + 1;
  }
  return size;
}

// Advances a mixed-radix counter over the given positions; false after the last point.
bool next_point(std::vector<std::uint8_t>& v, const std::vector<LetterId>& positions, std::uint32_t radix) {
  for (LetterId l : positions) {
    if (++v[l] < radix) return true;
    v[l] = 0;
  }
  return false;
}

std::string describe(const MultiLetterProtocol& p, StateId q, const std::vector<std::uint8_t>& v) {
  std::string s = "(" + p.state_name(q) + ", <";
  for (std::size_t l = 0; l < v.size(); ++l) {
    if (l) s += ",";
    s += to_string(BoundedCount::from_index(v[l], p.bound()));
  }
  return s + ">)";
}

}  // namespace

ValidationReport validate_protocol(const MultiLetterProtocol& p, std::uint64_t exhaustive_limit,
                                   std::uint64_t samples_per_state) {
  ValidationReport report;
  auto& violations = report.violations;
  const std::uint32_t radix = p.bound() + 1;
  const std::size_t sigma = p.num_letters();

  if (p.bound() < 1) violations.push_back("bound must be a positive integer");
  if (p.num_states() == 0) violations.push_back("state set is empty");
  if (sigma == 0) violations.push_back("alphabet is empty");
  if (p.initial_letter() >= sigma) violations.push_back("initial letter is not in the alphabet");
  if (p.input_states().empty()) violations.push_back("input state set is empty");
  if (!violations.empty()) return report;

  const bool exhaustive = space_size(radix, sigma, exhaustive_limit) <= exhaustive_limit;
  report.coverage = exhaustive ? CoverageMethod::kExhaustive : CoverageMethod::kSampled;

  std::vector<LetterId> all(sigma);
  for (LetterId l = 0; l < sigma; ++l) all[l] = l;
  std::mt19937_64 rng(0x6e66736dULL);
  std::vector<Outcome> got;
  std::vector<Outcome> projected;

  for (StateId q = 0; q < p.num_states(); ++q) {
    const auto& st = p.state(q);
    bool bad_observed = false;
    for (LetterId l : st.observed) {
      if (l >= sigma) {
        violations.push_back("state '" + st.name + "' observes an unknown letter");
        bad_observed = true;
      }
    }
    if (bad_observed) continue;
    std::vector<bool> is_observed(sigma, false);
    for (LetterId l : st.observed) is_observed[l] = true;

    std::size_t reported = 0;
    auto check_point = [&](const std::vector<std::uint8_t>& v) {
      if (reported >= 4) return;
      p.outcomes_into(q, CountView::from_indices(v, p.bound()), got);
      if (got.empty()) {
        violations.push_back("no rule covers " + describe(p, q, v));
        ++reported;
        return;
      }
      for (const Outcome& o : got) {
        if (o.next >= p.num_states() || (o.letter != kEpsilon && o.letter >= sigma)) {
          violations.push_back("rule outcome at " + describe(p, q, v) + " references an unknown state or letter");
          ++reported;
          return;
        }
      }
      std::vector<std::uint8_t> proj = v;
      for (LetterId l = 0; l < sigma; ++l)
        if (!is_observed[l]) proj[l] = 0;
      if (proj != v) {
        p.outcomes_into(q, CountView::from_indices(proj, p.bound()), projected);
        if (projected != got) {
          violations.push_back("state '" + st.name + "' depends on an unobserved letter at " + describe(p, q, v));
          ++reported;
        }
      }
    };

    std::vector<std::uint8_t> v(sigma, 0);
    if (exhaustive) {
      do check_point(v);
      while (next_point(v, all, radix));
      continue;
    }
    // Observed sub-space exhaustively (when small), then random full vectors.
    if (space_size(radix, st.observed.size(), exhaustive_limit) <= exhaustive_limit) {
      std::fill(v.begin(), v.end(), 0);
      do check_point(v);
      while (next_point(v, st.observed, radix));
    }
    for (std::uint64_t s = 0; s < samples_per_state; ++s) {
      for (auto& x : v) x = static_cast<std::uint8_t>(rng() % radix);
      check_point(v);
    }
  }
  return report;
}

}  // namespace nfsm
