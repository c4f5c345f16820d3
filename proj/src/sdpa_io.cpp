#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "seqnpa/sdpcore.hpp"

namespace seqnpa::sdp {

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Key = std::tuple<int, int, int, int>;  // matno, block, i, j (0-based block and indices)

void collect(std::map<Key, double>& out, int matno, const std::vector<Entry>& es) {
  for (const Entry& e : es) out[{matno, e.block, std::min(e.i, e.j), std::max(e.i, e.j)}] += e.value;
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw SdpError("SDPA line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string write_sdpa(const SdpProblem& problem) {
  std::ostringstream os;
  os << "\"sense=" << (problem.sense == Sense::kMax ? "max" : "min") << "\n";
  os << problem.constraints.size() << "\n" << problem.blocks.size() << "\n";
  for (std::size_t b = 0; b < problem.blocks.size(); ++b) os << (b ? " " : "") << problem.blocks[b];
  os << "\n";
  for (std::size_t k = 0; k < problem.constraints.size(); ++k)
    os << (k ? " " : "") << format_value(problem.constraints[k].rhs);
  os << "\n";
  std::map<Key, double> all;
  collect(all, 0, problem.objective);
  for (std::size_t k = 0; k < problem.constraints.size(); ++k)
    collect(all, static_cast<int>(k + 1), problem.constraints[k].entries);
  for (auto& [key, v] : all) {
    if (v == 0.0) continue;
    auto [m, b, i, j] = key;
    os << m << " " << b + 1 << " " << i + 1 << " " << j + 1 << " " << format_value(v) << "\n";
  }
  return os.str();
}

SdpProblem read_sdpa(const std::string& text) {
  SdpProblem p;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  int stage = 0;  // 0 m, 1 nblocks, 2 sizes, 3 rhs, 4 entries
  int m = 0, nblocks = 0;
  auto numbers = [](std::string s) {
    for (char& c : s)
      if (c == ',' || c == '{' || c == '}' || c == '(' || c == ')') c = ' ';
    return s;
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (raw[first] == '"' || raw[first] == '*') {
      if (stage == 0) {
        const auto pos = raw.find("sense=");
        if (pos != std::string::npos) {
          const std::string s = raw.substr(pos + 6, 3);
          if (s == "max")
            p.sense = Sense::kMax;
          else if (s == "min")
            p.sense = Sense::kMin;
          else
            fail(line_no, "unknown sense");
        }
      }
      continue;
    }
    std::istringstream ls(numbers(raw));
    switch (stage) {
      case 0:
        if (!(ls >> m) || m < 0) fail(line_no, "expected constraint count");
        p.constraints.resize(m);
        stage = 1;
        break;
      case 1:
        if (!(ls >> nblocks) || nblocks < 1) fail(line_no, "expected block count");
        stage = 2;
        break;
      case 2: {
        int s;
        while (ls >> s) {
          if (s == 0) fail(line_no, "block size 0");
          p.blocks.push_back(s);
        }
        if (static_cast<int>(p.blocks.size()) != nblocks) fail(line_no, "expected " + std::to_string(nblocks) + " block sizes");
        stage = m == 0 ? 4 : 3;
        break;
      }
      case 3: {
        double v;
        int k = 0;
        while (k < m && ls >> v) p.constraints[k++].rhs = v;
        if (k != m) fail(line_no, "expected " + std::to_string(m) + " right-hand sides");
        stage = 4;
        break;
      }
      default: {
        int matno, block, i, j;
        double v;
        std::string extra;
        if (!(ls >> matno >> block >> i >> j >> v) || (ls >> extra)) fail(line_no, "expected 'matno block i j value'");
        if (matno < 0 || matno > m) fail(line_no, "matrix number " + std::to_string(matno) + " out of range");
        if (block < 1 || block > nblocks) fail(line_no, "block index " + std::to_string(block) + " out of range");
        const int n = p.block_dim(block - 1);
        if (i < 1 || j < 1 || i > n || j > n) fail(line_no, "entry index out of range");
        if (p.is_diagonal(block - 1) && i != j) fail(line_no, "off-diagonal entry in diagonal block");
        if (!std::isfinite(v)) fail(line_no, "non-finite value");
        Entry e{block - 1, i - 1, j - 1, v};
        (matno == 0 ? p.objective : p.constraints[matno - 1].entries).push_back(e);
      }
    }
  }
  if (stage < 4) fail(line_no, "truncated header");
  return p;
}

}  // namespace seqnpa::sdp
