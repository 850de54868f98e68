#pragma once

#include <filesystem>
#include <iosfwd>
#include <variant>

#include "nfsm/multi_letter.hpp"
#include "nfsm/protocol.hpp"

namespace nfsm {

// Text format, one declaration per line, '#' starts a comment:
//
//   bound <b>
//   letter <name>...
//   state <name>...
//   input <state>...
//   output <state>...
//   initial <letter>
//   query <state> <letter>
//   delta <state> <count> -> (<state>, <letter|eps>) ...
//
// <count> is 0..b-1 or `sat`. A file whose first declaration is `multi` describes a
// multi-letter protocol instead; `query`/`delta` are replaced by
//
//   observe <state> <letter>...
//   rule <state> <letter>=<count>|<letter>>=<count> ... -> (<state>, <letter|eps>) ...
//
// where the conditions are a conjunction (an empty list always holds). Names may not
// contain whitespace, '(', ')' or ','.

class ParseError : public Error {
 public:
  using Error::Error;
};

void write_protocol(std::ostream& out, const Protocol& p);
Protocol read_protocol(std::istream& in);

/// Writes the rules as an exact table over each state's observed letters.
void write_multi_letter(std::ostream& out, const MultiLetterProtocol& p);
MultiLetterProtocol read_multi_letter(std::istream& in);

using AnyProtocol = std::variant<Protocol, MultiLetterProtocol>;

AnyProtocol read_any_protocol(std::istream& in);
AnyProtocol load_protocol_file(const std::filesystem::path& path);
void save_protocol_file(const std::filesystem::path& path, const AnyProtocol& p);

}  // namespace nfsm
