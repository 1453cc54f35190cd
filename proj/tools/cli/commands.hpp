#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli/params.hpp"

namespace sparsenorm::cli {

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

/// One subcommand: declares its options, then runs with them resolved.
class Command {
 public:
  virtual ~Command() = default;
  virtual std::string name() const = 0;
  virtual std::string description() const = 0;
  virtual void declare(Params& p) = 0;
  // Returns the exit code and appends written files to `outputs`.
  virtual int execute(const std::string& out_dir, Streams io, std::vector<std::string>& outputs) = 0;
  virtual std::uint64_t seed() const { return 0; }
};

std::vector<std::unique_ptr<Command>> make_commands();

}  // namespace sparsenorm::cli
