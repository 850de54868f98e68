#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "nfsm/lba.hpp"
#include "test_support.hpp"

namespace nfsm {
namespace {

using namespace nfsm::testing;

const TuringMachineSpec& machine(const std::string& name) {
  static std::map<std::string, TuringMachineSpec> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, load_tm(machine_path(name))).first;
  return it->second;
}

const RlbaCompilation& compiled(const std::string& name) {
  static std::map<std::string, RlbaCompilation> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, compile_rlba(machine(name))).first;
  return it->second;
}

std::vector<std::string> words(const std::string& alphabet, std::size_t max_len) {
  std::vector<std::string> out{""};
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() == max_len) continue;
    for (char c : alphabet) out.push_back(out[i] + c);
  }
  return out;
}

std::string increment_of(std::string w) {
  std::size_t i = w.size();
  while (i > 0 && w[i - 1] == '1') w[--i] = '0';
  if (i > 0) w[i - 1] = '1';
  return w;
}

TEST(Tm, ShippedMachinesValidate) {
  for (const char* name : {"increment", "palindrome", "coin_writer", "halt_at_once"})
    EXPECT_TRUE(validate_tm(machine(name)).ok()) << name;
}

TEST(Tm, TextRoundTrip) {
  for (const char* name : {"increment", "palindrome", "coin_writer", "halt_at_once"}) {
    std::ostringstream out;
    write_tm(out, machine(name));
    std::istringstream in(out.str());
    const auto back = read_tm(in);
    EXPECT_EQ(back.alphabet, machine(name).alphabet);
    EXPECT_EQ(back.states, machine(name).states);
    EXPECT_EQ(back.delta, machine(name).delta);
    EXPECT_EQ(back.left_marker, machine(name).left_marker);
    EXPECT_EQ(back.accept, machine(name).accept);
  }
}

TEST(Tm, ValidationFindsUnsafeAndPartialMachines) {
  auto tm = machine("increment");
  const SymbolId left = *tm.left_marker;
  tm.transitions(*tm.find_state("scan"), left) = {{*tm.find_state("scan"), left, Move::kLeft}};
  auto report = validate_tm(tm);
  EXPECT_FALSE(report.ok());

  tm = machine("increment");
  tm.transitions(*tm.find_state("carry"), *tm.find_symbol("0")).clear();
  EXPECT_FALSE(validate_tm(tm).ok());

  tm = machine("increment");
  tm.transitions(*tm.find_state("scan"), *tm.find_symbol("0")) = {{*tm.find_state("scan"), left, Move::kRight}};
  EXPECT_FALSE(validate_tm(tm).ok());

  // Without markers every move could leave the tape.
  tm = machine("halt_at_once");
  tm.accept[0] = false;
  tm.states.push_back("end");
  tm.accept.push_back(true);
  tm.reject.push_back(false);
  tm.delta.resize(tm.num_states() * tm.num_symbols());
  for (SymbolId g = 0; g < tm.num_symbols(); ++g) tm.transitions(0, g) = {{1, g, Move::kRight}};
  EXPECT_FALSE(validate_tm(tm).ok());
}

TEST(Tm, ParseErrors) {
  std::istringstream bad("alphabet 0 1\nstates a\ninitial b\n");
  EXPECT_THROW(read_tm(bad), Error);
  std::istringstream arrow("alphabet 0\nstates a\ninitial a\ndelta a 0 a 0 R\n");
  EXPECT_THROW(read_tm(arrow), Error);
}

TEST(Oracle, IncrementMatchesArithmetic) {
  const auto& tm = machine("increment");
  for (const auto& w : words("01", 7)) {
    if (w.empty()) continue;
    const auto r = run_tm_oracle(tm, tm.tape_for(w), 0);
    const bool overflow = w.find('0') == std::string::npos;
    EXPECT_EQ(r.verdict, overflow ? TmVerdict::kReject : TmVerdict::kAccept) << w;
    EXPECT_EQ(tm.word_of(r.tape), increment_of(w)) << w;
  }
  EXPECT_EQ(tm.word_of(run_tm_oracle(tm, tm.tape_for("1011"), 0).tape), "1100");
  EXPECT_EQ(tm.word_of(run_tm_oracle(tm, tm.tape_for("0"), 0).tape), "1");
}

TEST(Oracle, PalindromeMatchesReversal) {
  const auto& tm = machine("palindrome");
  for (const auto& w : words("ab", 8)) {
    const bool pal = std::equal(w.begin(), w.end(), w.rbegin());
    EXPECT_EQ(run_tm_oracle(tm, tm.tape_for(w), 0).verdict, pal ? TmVerdict::kAccept : TmVerdict::kReject) << w;
  }
}

TEST(Oracle, StepCap) {
  const auto& tm = machine("palindrome");
  EXPECT_THROW(run_tm_oracle(tm, tm.tape_for("abbaabba"), 0, 5), StepCapExceeded);
}

TEST(Rlba, CompiledIncrement) {
  const auto& c = compiled("increment");
  EXPECT_TRUE(validate_protocol(c.protocol).ok());
  EXPECT_EQ(c.protocol.bound(), 1u);
  const auto& tm = c.tm;
  auto r = run_compiled_rlba(c, tm.tape_for("1011"), 0);
  EXPECT_EQ(r.verdict, TmVerdict::kAccept);
  EXPECT_EQ(tm.word_of(r.tape), "1100");
  r = run_compiled_rlba(c, tm.tape_for("0"), 0);
  EXPECT_EQ(r.verdict, TmVerdict::kAccept);
  EXPECT_EQ(tm.word_of(r.tape), "1");
  r = run_compiled_rlba(c, tm.tape_for("111"), 0);
  EXPECT_EQ(r.verdict, TmVerdict::kReject);
  EXPECT_EQ(tm.word_of(r.tape), "000");
}

TEST(Rlba, CompiledPalindrome) {
  const auto& c = compiled("palindrome");
  EXPECT_EQ(run_compiled_rlba(c, c.tm.tape_for("abba"), 0).verdict, TmVerdict::kAccept);
  EXPECT_EQ(run_compiled_rlba(c, c.tm.tape_for("abab"), 0).verdict, TmVerdict::kReject);
  EXPECT_EQ(run_compiled_rlba(c, c.tm.tape_for(""), 0).verdict, TmVerdict::kAccept);
}

TEST(Rlba, AgreesWithOracleOnAllShortWords) {
  for (const char* name : {"increment", "palindrome"}) {
    const auto& c = compiled(name);
    const std::string alpha = std::string(name) == "increment" ? "01" : "ab";
    for (const auto& w : words(alpha, 6)) {
      if (w.empty() && alpha == "01") continue;
      const auto cmp = run_both(c, c.tm.tape_for(w), 3);
      EXPECT_TRUE(cmp.equal) << name << " " << w << ": " << cmp.difference;
    }
  }
}

TEST(Rlba, HaltAtOnceSingleCell) {
  const auto& c = compiled("halt_at_once");
  const auto tape = c.tm.tape_for("1");
  ASSERT_EQ(tape.size(), 1u);
  const auto r = run_compiled_rlba(c, tape, 0);
  EXPECT_EQ(r.verdict, TmVerdict::kAccept);
  EXPECT_LE(r.result.report.max_steps(), 2u);
  const auto longer = run_compiled_rlba(c, c.tm.tape_for("0101"), 0);
  EXPECT_EQ(longer.verdict, TmVerdict::kAccept);
  EXPECT_EQ(c.tm.word_of(longer.tape), "0101");
}

TEST(Rlba, CoinWriterFollowsOracleSeeds) {
  const auto& c = compiled("coin_writer");
  std::size_t accepted = 0;
  std::set<std::string> tapes;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto cmp = run_both(c, c.tm.tape_for("0000"), seed);
    ASSERT_TRUE(cmp.equal) << seed << ": " << cmp.difference;
    accepted += cmp.oracle.verdict == TmVerdict::kAccept;
    tapes.insert(c.tm.word_of(cmp.oracle.tape));
  }
  // Randomness is real: both verdicts and all 16 tapes occur.
  EXPECT_GT(accepted, 50u);
  EXPECT_LT(accepted, 150u);
  EXPECT_EQ(tapes.size(), 16u);
}

TEST(Rlba, Deterministic) {
  const auto& c = compiled("coin_writer");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = run_compiled_rlba(c, c.tm.tape_for("0110"), seed);
    const auto b = run_compiled_rlba(c, c.tm.tape_for("0110"), seed);
    EXPECT_EQ(a.result.trace.hash, b.result.trace.hash);
    EXPECT_EQ(a.tape, b.tape);
  }
}

TEST(Rlba, InvariantsHold) {
  for (const char* name : {"increment", "palindrome", "coin_writer"}) {
    const auto& c = compiled(name);
    const std::string w = std::string(name) == "palindrome" ? "abaaba" : "01101";
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto oracle = run_tm_oracle(c.tm, c.tm.tape_for(w), seed);
      const auto run = run_compiled_rlba(c, c.tm.tape_for(w), seed, TraceMode::kFull);
      EXPECT_EQ(check_rlba_invariants(c, run.result.trace, oracle), std::vector<std::string>{}) << name << seed;
    }
  }
}

TEST(Rlba, InvariantCheckerCatchesMismatch) {
  const auto& c = compiled("increment");
  const auto run = run_compiled_rlba(c, c.tm.tape_for("0110"), 0, TraceMode::kFull);
  const auto other = run_tm_oracle(c.tm, c.tm.tape_for("0101"), 0);
  EXPECT_FALSE(check_rlba_invariants(c, run.result.trace, other).empty());
}

TEST(Rlba, StateEncoding) {
  const auto& c = compiled("increment");
  const SymbolId one = *c.tm.find_symbol("1");
  const auto& h = c.state_info[c.head(one, 2)];
  EXPECT_EQ(h.kind, RlbaNodeKind::kHead);
  EXPECT_EQ(h.symbol, one);
  EXPECT_EQ(h.p, 2u);
  const auto& i = c.state_info[c.idle(one, Move::kRight)];
  EXPECT_EQ(i.kind, RlbaNodeKind::kIdle);
  EXPECT_EQ(i.dir, Move::kRight);
  EXPECT_EQ(c.state_info[c.halted(one, TmVerdict::kReject)].kind, RlbaNodeKind::kHalted);
  EXPECT_EQ(c.protocol.initial_letter(), c.move_letter(Move::kLeft, c.tm.initial));
  const auto inputs = c.input_states(c.tm.tape_for("01"));
  ASSERT_EQ(inputs.size(), 4u);
  EXPECT_EQ(inputs[0], c.head(*c.tm.left_marker, c.tm.initial));
  EXPECT_EQ(c.state_info[inputs[1]].dir, Move::kLeft);
  EXPECT_EQ(c.tape_of(inputs), c.tm.tape_for("01"));
  EXPECT_FALSE(c.verdict_of(inputs).has_value());
}

}  // namespace
}  // namespace nfsm
