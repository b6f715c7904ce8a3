#pragma once

#include <cctype>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ukgen/ir.hpp"

namespace ukgen {

// Parser for the textual IR form emitted by pretty_print. Instruction calls
// need the target's parameter lists to recover operand roles, and memory
// space names need their definitions, so both are injected as lookups.

struct InstrCallSig {
  struct Param {
    std::string name;
    bool is_write = false;
    bool is_reduce = false;
    bool is_lane = false;
  };
  std::vector<Param> params;
};

struct ParseOptions {
  std::function<std::optional<MemSpace>(const std::string&)> memspace;
  std::function<std::optional<InstrCallSig>(const std::string&)> instr;
};

namespace parsing {

[[noreturn]] inline void err(int line, const std::string& msg) {
  fail(ErrKind::ParseError, "line " + std::to_string(line) + ": " + msg);
}

struct LineLexer {
  std::string_view s;
  size_t pos = 0;
  int line_no = 0;

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) err(line_no, std::string("expected '") + c + "'");
  }
  bool eat_word(std::string_view w) {
    skip_ws();
    size_t end = pos + w.size();
    if (end > s.size() || s.substr(pos, w.size()) != w) return false;
    if (end < s.size() && (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_'))
      return false;
    pos = end;
    return true;
  }
  bool peek_ident() {
    skip_ws();
    return pos < s.size() &&
           (std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_');
  }
  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    if (pos == start) err(line_no, "expected identifier");
    return std::string(s.substr(start, pos - start));
  }
  bool peek_number() {
    skip_ws();
    if (pos >= s.size()) return false;
    if (std::isdigit(static_cast<unsigned char>(s[pos]))) return true;
    return s[pos] == '-' && pos + 1 < s.size() &&
           std::isdigit(static_cast<unsigned char>(s[pos + 1]));
  }
  long long integer() {
    skip_ws();
    size_t start = pos;
    if (pos < s.size() && s[pos] == '-') ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == start || (pos == start + 1 && s[start] == '-'))
      err(line_no, "expected integer");
    return std::stoll(std::string(s.substr(start, pos - start)));
  }
};

// affine := ['-'] term (('+'|'-') term)* ; term := INT ['*' IDENT] | IDENT ['*' INT]
inline AffineExpr parse_affine(LineLexer& lx) {
  AffineExpr out;
  bool first = true;
  for (;;) {
    long long sign = 1;
    if (first) {
      if (lx.peek() == '-' && !lx.peek_number()) {
        lx.eat('-');
        sign = -1;
      }
    } else {
      char c = lx.peek();
      if (c == '+') {
        lx.eat('+');
      } else if (c == '-') {
        lx.eat('-');
        sign = -1;
      } else {
        break;
      }
    }
    if (lx.peek_number()) {
      long long v = lx.integer();
      if (lx.eat('*')) {
        out += AffineExpr::sym(lx.ident(), sign * v);
      } else {
        out += AffineExpr::cst(sign * v);
      }
    } else if (lx.peek_ident()) {
      std::string sym = lx.ident();
      long long c = 1;
      if (lx.eat('*')) c = lx.integer();
      out += AffineExpr::sym(sym, sign * c);
    } else {
      err(lx.line_no, "expected affine term");
    }
    first = false;
  }
  return out;
}

inline std::vector<AffineExpr> parse_index_list(LineLexer& lx) {
  std::vector<AffineExpr> idx;
  lx.expect('[');
  if (!lx.eat(']')) {
    for (;;) {
      idx.push_back(parse_affine(lx));
      if (lx.eat(']')) break;
      lx.expect(',');
    }
  }
  return idx;
}

// expr := mul (('+'|'-') mul)* ; mul := atom ('*' atom)*
inline Expr::Ptr parse_expr(LineLexer& lx);

inline Expr::Ptr parse_atom(LineLexer& lx) {
  if (lx.eat('(')) {
    Expr::Ptr e = parse_expr(lx);
    lx.expect(')');
    return e;
  }
  if (lx.peek_number()) {
    long long num = lx.integer();
    long long den = 1;
    if (lx.eat('/')) den = lx.integer();
    return Expr::cst(Rational(num, den));
  }
  std::string name = lx.ident();
  std::vector<AffineExpr> idx;
  if (lx.peek() == '[') idx = parse_index_list(lx);
  return Expr::read(std::move(name), std::move(idx));
}

inline Expr::Ptr parse_mul(LineLexer& lx) {
  Expr::Ptr e = parse_atom(lx);
  while (lx.peek() == '*') {
    lx.eat('*');
    e = Expr::binary('*', e, parse_atom(lx));
  }
  return e;
}

inline Expr::Ptr parse_expr(LineLexer& lx) {
  Expr::Ptr e = parse_mul(lx);
  for (;;) {
    char c = lx.peek();
    if (c == '+') {
      lx.eat('+');
      e = Expr::binary('+', e, parse_mul(lx));
    } else if (c == '-') {
      lx.eat('-');
      e = Expr::binary('-', e, parse_mul(lx));
    } else {
      break;
    }
  }
  return e;
}

inline Window parse_window(LineLexer& lx, std::string buffer) {
  Window w;
  w.buffer = std::move(buffer);
  if (lx.peek() != '[') return w;  // rank-0
  lx.expect('[');
  for (;;) {
    WindowDim d;
    d.base = parse_affine(lx);
    if (lx.eat(':')) {
      AffineExpr hi = parse_affine(lx);
      AffineExpr extent = hi - d.base;
      if (!extent.is_constant()) err(lx.line_no, "window extent must be constant");
      d.extent = extent.constant;
      d.is_point = false;
    }
    w.dims.push_back(std::move(d));
    if (lx.eat(']')) break;
    lx.expect(',');
  }
  return w;
}

}  // namespace parsing

class IrParser {
 public:
  explicit IrParser(ParseOptions opts = {}) : opts_(std::move(opts)) {}

  Proc parse_proc(const std::string& text) const {
    std::vector<Line> lines = split(text);
    size_t i = 0;
    if (i >= lines.size()) parsing::err(0, "empty input");
    parsing::LineLexer lx{lines[i].text, 0, lines[i].no};
    if (!lx.eat_word("proc")) parsing::err(lines[i].no, "expected 'proc'");
    Proc p;
    p.name = lx.ident();
    lx.expect('(');
    if (!lx.eat(')')) {
      for (;;) {
        parse_param(lx, p);
        if (lx.eat(')')) break;
        lx.expect(',');
      }
    }
    lx.expect(':');
    ++i;
    p.body = parse_block(lines, i, 1);
    if (i != lines.size()) parsing::err(lines[i].no, "unexpected trailing content");
    return p;
  }

  // Parses a single statement (possibly a one-line nested loop chain), as
  // used by instruction bodies in target libraries.
  Stmt::Ptr parse_stmt_line(const std::string& text) const {
    parsing::LineLexer lx{text, 0, 1};
    Stmt::Ptr s = parse_inline_stmt(lx);
    if (!lx.eof()) parsing::err(1, "unexpected trailing content");
    return s;
  }

 private:
  struct Line {
    std::string text;
    int indent = 0;
    int no = 0;
  };

  static std::vector<Line> split(const std::string& text) {
    std::vector<Line> out;
    size_t start = 0;
    int no = 0;
    while (start <= text.size()) {
      size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      std::string raw = text.substr(start, end - start);
      ++no;
      start = end + 1;
      size_t indent = 0;
      while (indent < raw.size() && raw[indent] == ' ') ++indent;
      std::string body = raw.substr(indent);
      while (!body.empty() && (body.back() == ' ' || body.back() == '\r')) body.pop_back();
      if (body.empty() || body[0] == '#') {
        if (end == text.size()) break;
        continue;
      }
      if (indent % 2 != 0) parsing::err(no, "indentation must be a multiple of two spaces");
      out.push_back(Line{std::move(body), static_cast<int>(indent / 2), no});
      if (end == text.size()) break;
    }
    return out;
  }

  MemSpace lookup_space(const std::string& name, int line) const {
    if (name == "DRAM") return MemSpace::dram();
    if (opts_.memspace) {
      if (auto m = opts_.memspace(name)) return *m;
    }
    parsing::err(line, "unknown memory space '" + name + "'");
  }

  static Precision parse_precision(parsing::LineLexer& lx) {
    if (lx.eat_word("f32")) return Precision::f32;
    if (lx.eat_word("f16")) return Precision::f16;
    parsing::err(lx.line_no, "expected precision (f32 or f16)");
  }

  void parse_param(parsing::LineLexer& lx, Proc& p) const {
    std::string name = lx.ident();
    lx.expect(':');
    if (lx.eat_word("size")) {
      p.size_params.push_back(std::move(name));
      return;
    }
    BufferDecl d;
    d.name = std::move(name);
    d.read_only = lx.eat_word("const");
    d.precision = parse_precision(lx);
    if (lx.peek() == '[') d.dims = parsing::parse_index_list(lx);
    lx.expect('@');
    d.memspace = lookup_space(lx.ident(), lx.line_no);
    p.args.push_back(std::move(d));
  }

  std::vector<Stmt::Ptr> parse_block(const std::vector<Line>& lines, size_t& i, int depth) const {
    std::vector<Stmt::Ptr> out;
    while (i < lines.size() && lines[i].indent >= depth) {
      if (lines[i].indent > depth) parsing::err(lines[i].no, "unexpected indentation");
      parsing::LineLexer lx{lines[i].text, 0, lines[i].no};
      out.push_back(parse_stmt(lx, lines, i, depth));
    }
    return out;
  }

  // Consumes the current line (and, for loops, any indented block below it).
  Stmt::Ptr parse_stmt(parsing::LineLexer& lx, const std::vector<Line>& lines, size_t& i,
                       int depth) const {
    if (lx.eat_word("for")) {
      std::string var = lx.ident();
      if (!lx.eat_word("in")) parsing::err(lx.line_no, "expected 'in'");
      if (!lx.eat_word("seq")) parsing::err(lx.line_no, "expected 'seq'");
      lx.expect('(');
      if (lx.integer() != 0) parsing::err(lx.line_no, "loop lower bound must be 0");
      lx.expect(',');
      AffineExpr bound = parsing::parse_affine(lx);
      lx.expect(')');
      lx.expect(':');
      if (!lx.eof()) {  // single-line body
        std::vector<Stmt::Ptr> body{parse_stmt(lx, lines, i, depth)};
        return Stmt::loop(std::move(var), std::move(bound), std::move(body));
      }
      ++i;
      std::vector<Stmt::Ptr> body = parse_block(lines, i, depth + 1);
      return Stmt::loop(std::move(var), std::move(bound), std::move(body));
    }
    Stmt::Ptr s = parse_simple(lx);
    if (!lx.eof()) parsing::err(lx.line_no, "unexpected trailing content");
    ++i;
    return s;
  }

  // One-line statement chains for instruction bodies.
  Stmt::Ptr parse_inline_stmt(parsing::LineLexer& lx) const {
    if (lx.eat_word("for")) {
      std::string var = lx.ident();
      if (!lx.eat_word("in")) parsing::err(lx.line_no, "expected 'in'");
      if (!lx.eat_word("seq")) parsing::err(lx.line_no, "expected 'seq'");
      lx.expect('(');
      if (lx.integer() != 0) parsing::err(lx.line_no, "loop lower bound must be 0");
      lx.expect(',');
      AffineExpr bound = parsing::parse_affine(lx);
      lx.expect(')');
      lx.expect(':');
      std::vector<Stmt::Ptr> body{parse_inline_stmt(lx)};
      return Stmt::loop(std::move(var), std::move(bound), std::move(body));
    }
    return parse_simple(lx);
  }

  // assign / reduce / alloc / instruction call
  Stmt::Ptr parse_simple(parsing::LineLexer& lx) const {
    std::string name = lx.ident();
    if (lx.peek() == '(') return parse_call(lx, name);
    if (lx.peek() == ':') {
      lx.expect(':');
      BufferDecl d;
      d.name = std::move(name);
      d.precision = parse_precision(lx);
      if (lx.peek() == '[') d.dims = parsing::parse_index_list(lx);
      lx.expect('@');
      d.memspace = lookup_space(lx.ident(), lx.line_no);
      return Stmt::alloc(std::move(d));
    }
    std::vector<AffineExpr> idx;
    if (lx.peek() == '[') idx = parsing::parse_index_list(lx);
    if (lx.eat('+')) {
      lx.expect('=');
      return Stmt::reduce(std::move(name), std::move(idx), parsing::parse_expr(lx));
    }
    lx.expect('=');
    return Stmt::assign(std::move(name), std::move(idx), parsing::parse_expr(lx));
  }

  Stmt::Ptr parse_call(parsing::LineLexer& lx, const std::string& instr) const {
    std::optional<InstrCallSig> sig;
    if (opts_.instr) sig = opts_.instr(instr);
    if (!sig) parsing::err(lx.line_no, "unknown instruction '" + instr + "'");
    Stmt::InstrCall call;
    call.instr = instr;
    lx.expect('(');
    size_t window_slot = 0;
    if (!lx.eat(')')) {
      for (;;) {
        std::string head = lx.ident();
        if (lx.peek() == '=') {  // lane argument, by name
          lx.eat('=');
          call.lane_args.emplace_back(head, parsing::parse_affine(lx));
        } else {
          while (window_slot < sig->params.size() && sig->params[window_slot].is_lane)
            ++window_slot;
          if (window_slot >= sig->params.size())
            parsing::err(lx.line_no, "too many operands for '" + instr + "'");
          const auto& param = sig->params[window_slot];
          Stmt::Operand op;
          op.param = param.name;
          op.is_write = param.is_write;
          op.is_reduce = param.is_reduce;
          op.window = parsing::parse_window(lx, head);
          call.operands.push_back(std::move(op));
          ++window_slot;
        }
        if (lx.eat(')')) break;
        lx.expect(',');
      }
    }
    return Stmt::instr_call(std::move(call));
  }

  ParseOptions opts_;
};

}  // namespace ukgen
