#include "esg/gridfmt/constraint.hpp"

#include <cctype>
#include <limits>
#include <set>

#include "esg/common/error.hpp"

namespace esg::gridfmt {
namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Constraint parse() {
    if (text_.empty()) throw ParseError(0, "empty constraint");
    Constraint c;
    std::set<std::string> seen;
    while (true) {
      skip_space();
      auto at = pos_;
      auto proj = projection();
      if (!seen.insert(proj.variable).second) {
        throw ParseError(at, "duplicate projection of " + proj.variable);
      }
      c.projections.push_back(std::move(proj));
      skip_space();
      if (pos_ == text_.size()) break;
      expect(',');
      skip_space();
      if (pos_ == text_.size()) break;  // single trailing comma
    }
    return c;
  }

 private:
  Projection projection() {
    Projection p;
    p.variable = name();
    skip_space();
    while (pos_ < text_.size() && text_[pos_] == '[') {
      p.slabs.push_back(slab());
      skip_space();
    }
    return p;
  }

  Hyperslab slab() {
    expect('[');
    Hyperslab s;
    s.start = integer();
    expect(':');
    auto stride_at = pos_;
    s.stride = integer();
    expect(':');
    auto stop_at = pos_;
    s.stop = integer();
    expect(']');
    if (s.stride == 0) throw ParseError(stride_at, "stride must be >= 1");
    if (s.start > s.stop) throw ParseError(stop_at, "start exceeds stop");
    return s;
  }

  std::string name() {
    auto begin = pos_;
    if (pos_ >= text_.size() ||
        !(std::isalpha(static_cast<unsigned char>(text_[pos_])) ||
          text_[pos_] == '_')) {
      throw ParseError(pos_, "expected variable name");
    }
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
            c == '.' || c == '-')) {
        break;
      }
      ++pos_;
    }
    return std::string(text_.substr(begin, pos_ - begin));
  }

  std::uint64_t integer() {
    skip_space();
    auto begin = pos_;
    std::uint64_t value = 0;
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      auto digit = static_cast<std::uint64_t>(text_[pos_] - '0');
      if (value > (kMax - digit) / 10) throw ParseError(begin, "integer overflow");
      value = value * 10 + digit;
      ++pos_;
    }
    if (pos_ == begin) throw ParseError(pos_, "expected integer");
    skip_space();
    return value;
  }

  void expect(char c) {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != c) {
      throw ParseError(pos_, std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Constraint parse_constraint(std::string_view text) { return Parser(text).parse(); }

std::string render(const Constraint& c) {
  std::string out;
  for (std::size_t i = 0; i < c.projections.size(); ++i) {
    if (i > 0) out += ',';
    const auto& p = c.projections[i];
    out += p.variable;
    for (const auto& s : p.slabs) {
      out += '[' + std::to_string(s.start) + ':' + std::to_string(s.stride) +
             ':' + std::to_string(s.stop) + ']';
    }
  }
  return out;
}

}  // namespace esg::gridfmt
