#include "nfsm/engine.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "nfsm/rng.hpp"

namespace nfsm {
namespace {

template <class P>
void check_inputs(const P& p, const NetworkGraph& g, std::span<const StateId> inputs) {
  if (g.num_nodes() == 0) throw InvalidInput("graph has no nodes");
  if (inputs.size() != g.num_nodes()) {
    throw InvalidInput("expected " + std::to_string(g.num_nodes()) + " input states, got " +
                       std::to_string(inputs.size()));
  }
  for (std::size_t v = 0; v < inputs.size(); ++v) {
    if (inputs[v] >= p.num_states() || !p.is_input(inputs[v])) {
      throw InvalidInput("node " + std::to_string(v) + " starts in a state outside Q_I");
    }
  }
}

/// Picks among `n` outcomes and keeps the per-node choice counters.
class Chooser {
 public:
  Chooser(std::uint64_t seed, const RunOptions& opts, std::size_t n)
      : seed_(seed), keying_(opts.keying), key_fn_(opts.key_fn), choices_(n, 0) {}

  std::size_t pick(NodeId v, std::uint64_t step, StateId q, std::size_t n) {
    if (key_fn_) {
      const DrawKey key = key_fn_(v, step, q);
      return n == 1 ? 0 : uniform_below(draw_word(seed_, key.stream, key.index), n);
    }
    if (n == 1) return 0;
    const std::uint64_t index = keying_ == ChoiceKeying::kPerStep ? step : choices_[v]++;
    return uniform_below(draw_word(seed_, v, index), n);
  }

 private:
  std::uint64_t seed_;
  ChoiceKeying keying_;
  const ChoiceKeyFn& key_fn_;
  std::vector<std::uint64_t> choices_;
};

class Recorder {
 public:
  Recorder(ExecutionTrace& trace) : trace_(trace) {}

  void add(const TraceEvent& e) {
    hasher_.update(e);
    ++trace_.num_events;
    if (trace_.mode == TraceMode::kFull) trace_.events.push_back(e);
  }
  void finish() { trace_.hash = hasher_.value(); }

 private:
  ExecutionTrace& trace_;
  TraceHasher hasher_;
};

template <class P>
ExecutionTrace make_trace(const P& p, const NetworkGraph& g, std::span<const StateId> inputs, const RunOptions& opts,
                          bool multi) {
  ExecutionTrace t;
  t.mode = opts.trace;
  t.multi_letter = multi;
  t.num_nodes = g.num_nodes();
  t.num_letters = p.num_letters();
  t.bound = p.bound();
  t.initial_letter = p.initial_letter();
  t.initial_states.assign(inputs.begin(), inputs.end());
  return t;
}

struct Delivery {
  double time;
  NodeId node;
  std::uint64_t seq;
  std::uint32_t arc;  // receiving port
  NodeId sender;
  LetterId letter;
  std::uint64_t step;  // sender's step
  double value;

  bool operator>(const Delivery& o) const {
    if (time != o.time) return time > o.time;
    if (node != o.node) return node > o.node;
    return seq > o.seq;
  }
};

/// Binary min-heap over the next step end of every node, ordered by (time, node). Every
/// node always has exactly one pending step, so the top is only ever replaced.
class StepHeap {
 public:
  struct Entry {
    double time;
    NodeId node;
  };

  explicit StepHeap(std::vector<Entry> entries) : heap_(std::move(entries)) {
    for (std::size_t i = heap_.size() / 2; i-- > 0;) sift_down(i);
  }
  const Entry& top() const { return heap_[0]; }
  void replace_top(double time) {
    heap_[0].time = time;
    sift_down(0);
  }

 private:
  static bool less(const Entry& a, const Entry& b) { return a.time < b.time || (a.time == b.time && a.node < b.node); }

  void sift_down(std::size_t i) {
    const std::size_t n = heap_.size();
    const Entry e = heap_[i];
    while (true) {
      std::size_t child = 2 * i + 1;
      if (child >= n) break;
      if (child + 1 < n && less(heap_[child + 1], heap_[child])) ++child;
      if (!less(heap_[child], e)) break;
      heap_[i] = heap_[child];
      i = child;
    }
    heap_[i] = e;
  }

  std::vector<Entry> heap_;
};

}  // namespace

std::uint64_t RunTimeReport::max_steps() const {
  return steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end());
}

RunResult run_async(const Protocol& p, const NetworkGraph& g, std::span<const StateId> inputs,
                    const AdversaryPolicy& adv, std::uint64_t rng_seed, const RunOptions& opts) {
  check_inputs(p, g, inputs);
  const std::size_t n = g.num_nodes();
  const std::size_t num_letters = p.num_letters();
  const std::uint32_t b = p.bound();

  RunResult result;
  result.trace = make_trace(p, g, inputs, opts, false);
  Recorder rec(result.trace);
  Chooser chooser(rng_seed, opts, n);

  std::vector<StateId> state(inputs.begin(), inputs.end());
  std::vector<std::uint64_t> steps(n, 0);
  std::vector<LetterId> port(g.num_arcs(), p.initial_letter());
  std::vector<double> last_arrival(g.num_arcs(), 0.0);
  std::vector<std::uint32_t> count(n * num_letters, 0);
  for (NodeId v = 0; v < n; ++v) count[v * num_letters + p.initial_letter()] = g.degree(v);

  std::size_t in_output = 0;
  for (StateId q : state) in_output += p.is_output(q) ? 1 : 0;

  std::priority_queue<Delivery, std::vector<Delivery>, std::greater<>> deliveries;
  std::uint64_t seq = 0;
  std::vector<double> step_length(n);
  std::vector<StepHeap::Entry> first_steps(n);
  for (NodeId v = 0; v < n; ++v) {
    step_length[v] = adv.step_length(v, 1);
    first_steps[v] = {step_length[v], v};
  }
  StepHeap step_ends(std::move(first_steps));

  auto& report = result.report;
  double realized_max = 0;
  double now = 0;
  auto mark_output = [&](double time) {
    report.reached_output = true;
    report.output_time = time;
    report.time_unit = realized_max;
    report.run_time = realized_max > 0 ? time / realized_max : 0;
    report.steps = steps;
    report.events = result.trace.num_events;
    result.output_states = state;
    TraceEvent e;
    e.kind = EventKind::kOutputConfig;
    e.time = time;
    rec.add(e);
  };
  if (in_output == n) mark_output(0);

  std::uint64_t processed = 0;
  while (processed < opts.max_events) {
    if (report.reached_output && !opts.continue_after_output) break;
    ++processed;
    const StepHeap::Entry next_step = step_ends.top();
    if (!deliveries.empty() && (deliveries.top().time < next_step.time ||
                                (deliveries.top().time == next_step.time && deliveries.top().node <= next_step.node))) {
      const Delivery d = deliveries.top();
      deliveries.pop();
      now = d.time;
      if (!report.reached_output) realized_max = std::max(realized_max, d.value);
      const NodeId u = d.node;
      LetterId& slot = port[d.arc];
      --count[u * num_letters + slot];
      slot = d.letter;
      ++count[u * num_letters + slot];
      TraceEvent e;
      e.kind = EventKind::kDelivery;
      e.time = d.time;
      e.node = u;
      e.peer = d.sender;
      e.step = d.step;
      e.letter = d.letter;
      e.value = d.value;
      rec.add(e);
      continue;
    }

    const NodeId v = next_step.node;
    const std::uint64_t t = steps[v] + 1;
    now = next_step.time;
    if (!report.reached_output) realized_max = std::max(realized_max, step_length[v]);
    const StateId q = state[v];
    const std::uint32_t raw = count[v * num_letters + p.query(q)];
    const std::uint32_t c = raw >= b ? b : raw;
    const auto outs = p.transition_at(q, c);
    const Outcome o = outs[chooser.pick(v, t, q, outs.size())];
    state[v] = o.next;
    steps[v] = t;
    in_output += (p.is_output(o.next) ? 1 : 0) - (p.is_output(q) ? 1 : 0);

    TraceEvent e;
    e.kind = EventKind::kStepEnd;
    e.time = now;
    e.node = v;
    e.step = t;
    e.before = q;
    e.after = o.next;
    e.letter = o.letter;
    e.observed = c;
    e.value = step_length[v];
    rec.add(e);

    if (o.letter != kEpsilon) {
      const std::uint32_t first = g.arc_begin(v);
      const std::uint32_t last = first + g.degree(v);
      for (std::uint32_t a = first; a < last; ++a) {
        const NodeId u = g.arc_target(a);
        const double d = adv.delay(v, t, u);
        const double arrival = std::max(now + d, last_arrival[a]);
        last_arrival[a] = arrival;
        deliveries.push({arrival, u, seq++, g.reverse_arc(a), v, o.letter, t, d});
      }
    }
    step_length[v] = adv.step_length(v, t + 1);
    step_ends.replace_top(now + step_length[v]);

    if (!report.reached_output && in_output == n) mark_output(now);
  }

  if (!report.reached_output) {
    if (opts.throw_on_cap) {
      throw CapExceeded("no output configuration within " + std::to_string(opts.max_events) + " events");
    }
    report.output_time = now;
    report.time_unit = realized_max;
    report.run_time = realized_max > 0 ? now / realized_max : 0;
    report.steps = steps;
    report.events = result.trace.num_events;
  }
  result.final_states = std::move(state);
  rec.finish();
  return result;
}

namespace {

/// Shared lock-step loop. `Decide(v, q, counts_row, out)` fills the outcome list and
/// returns the observed value recorded in StepEnd.
template <class P, class Decide>
RunResult run_rounds(const P& p, const NetworkGraph& g, std::span<const StateId> inputs, std::uint64_t rng_seed,
                     const RunOptions& opts, bool multi, Decide decide) {
  check_inputs(p, g, inputs);
  const std::size_t n = g.num_nodes();
  const std::size_t num_letters = p.num_letters();

  RunResult result;
  result.trace = make_trace(p, g, inputs, opts, multi);
  Recorder rec(result.trace);
  Chooser chooser(rng_seed, opts, n);

  std::vector<StateId> state(inputs.begin(), inputs.end());
  std::vector<LetterId> sent(n, kEpsilon);
  std::vector<LetterId> port(g.num_arcs(), p.initial_letter());
  std::vector<std::uint32_t> count(n * num_letters, 0);
  for (NodeId v = 0; v < n; ++v) count[v * num_letters + p.initial_letter()] = g.degree(v);
  std::vector<Outcome> outs;

  std::size_t in_output = 0;
  for (StateId q : state) in_output += p.is_output(q) ? 1 : 0;

  auto& report = result.report;
  std::uint64_t round = 0;
  auto mark_output = [&] {
    report.reached_output = true;
    report.output_time = static_cast<double>(round);
    report.time_unit = round > 0 ? 1.0 : 0.0;
    report.run_time = static_cast<double>(round);
    report.steps.assign(n, round);
    report.events = result.trace.num_events;
    result.output_states = state;
    TraceEvent e;
    e.kind = EventKind::kOutputConfig;
    e.time = static_cast<double>(round);
    rec.add(e);
  };
  if (in_output == n) mark_output();

  std::uint64_t processed = 0;
  while (processed < opts.max_events) {
    if (report.reached_output && !opts.continue_after_output) break;
    ++round;
    for (NodeId v = 0; v < n; ++v) {
      const StateId q = state[v];
      const std::uint32_t observed = decide(v, q, std::span<const std::uint32_t>(&count[v * num_letters], num_letters),
                                            outs, result.trace);
      const Outcome o = outs[chooser.pick(v, round, q, outs.size())];
      state[v] = o.next;
      sent[v] = o.letter;
      in_output += (p.is_output(o.next) ? 1 : 0) - (p.is_output(q) ? 1 : 0);
      TraceEvent e;
      e.kind = EventKind::kStepEnd;
      e.time = static_cast<double>(round);
      e.node = v;
      e.step = round;
      e.before = q;
      e.after = o.next;
      e.letter = o.letter;
      e.observed = observed;
      e.value = 1.0;
      rec.add(e);
      ++processed;
    }
    for (NodeId v = 0; v < n; ++v) {
      if (sent[v] == kEpsilon) continue;
      const std::uint32_t first = g.arc_begin(v);
      const std::uint32_t last = first + g.degree(v);
      for (std::uint32_t a = first; a < last; ++a) {
        const NodeId u = g.arc_target(a);
        LetterId& slot = port[g.reverse_arc(a)];
        --count[u * num_letters + slot];
        slot = sent[v];
        ++count[u * num_letters + slot];
        TraceEvent e;
        e.kind = EventKind::kDelivery;
        e.time = static_cast<double>(round);
        e.node = u;
        e.peer = v;
        e.step = round;
        e.letter = sent[v];
        e.value = 1.0;
        rec.add(e);
      }
    }
    if (!report.reached_output && in_output == n) mark_output();
  }

  if (!report.reached_output) {
    if (opts.throw_on_cap) {
      throw CapExceeded("no output configuration within " + std::to_string(opts.max_events) + " node steps");
    }
    report.output_time = static_cast<double>(round);
    report.time_unit = round > 0 ? 1.0 : 0.0;
    report.run_time = static_cast<double>(round);
    report.steps.assign(n, round);
    report.events = result.trace.num_events;
  }
  result.final_states = std::move(state);
  rec.finish();
  return result;
}

}  // namespace

RunResult run_sync(const MultiLetterProtocol& p, const NetworkGraph& g, std::span<const StateId> inputs,
                   std::uint64_t rng_seed, const RunOptions& opts) {
  const std::uint32_t b = p.bound();
  const bool full = opts.trace == TraceMode::kFull;
  // Row ids are step ordinals in both trace modes, so the hash does not depend on the mode.
  std::uint32_t rows = 0;
  return run_rounds(p, g, inputs, rng_seed, opts, true,
                    [&](NodeId, StateId q, std::span<const std::uint32_t> row, std::vector<Outcome>& outs,
                        ExecutionTrace& trace) -> std::uint32_t {
                      outs.clear();
                      p.outcomes_into(q, CountView::from_raw(row, b), outs);
                      const std::uint32_t index = rows++;
                      if (!full) return index;
                      for (std::uint32_t c : row) trace.observed_vectors.push_back(static_cast<std::uint8_t>(c >= b ? b : c));
                      return index;
                    });
}

RunResult run_sync(const Protocol& p, const NetworkGraph& g, std::span<const StateId> inputs, std::uint64_t rng_seed,
                   const RunOptions& opts) {
  const std::uint32_t b = p.bound();
  return run_rounds(p, g, inputs, rng_seed, opts, false,
                    [&](NodeId, StateId q, std::span<const std::uint32_t> row, std::vector<Outcome>& outs,
                        ExecutionTrace&) -> std::uint32_t {
                      const std::uint32_t raw = row[p.query(q)];
                      const std::uint32_t c = raw >= b ? b : raw;
                      const auto span = p.transition_at(q, c);
                      outs.assign(span.begin(), span.end());
                      return c;
                    });
}

}  // namespace nfsm
