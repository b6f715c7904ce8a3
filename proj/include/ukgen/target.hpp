#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ukgen/ir.hpp"
#include "ukgen/parser.hpp"
#include "ukgen/printer.hpp"
#include "ukgen/wellformed.hpp"

namespace ukgen {

// Hardware targets are plain data: memory spaces plus instructions, each
// instruction carrying a semantic loop-nest body (the pattern replace()
// matches against and the interpreter executes) and a C emission template.

enum class InstrKind { load, store, fma_lane, fma_broadcast, dup, zero, other };

inline const char* instr_kind_name(InstrKind k) {
  switch (k) {
    case InstrKind::load: return "load";
    case InstrKind::store: return "store";
    case InstrKind::fma_lane: return "fma_lane";
    case InstrKind::fma_broadcast: return "fma_broadcast";
    case InstrKind::dup: return "dup";
    case InstrKind::zero: return "zero";
    case InstrKind::other: return "other";
  }
  return "?";
}

struct InstrParam {
  std::string name;
  enum Role { dst, src, lane } role = src;
  std::vector<long long> shape;  // empty = scalar
  std::string memspace;          // space name; "DRAM" = any addressable space
  Precision precision = Precision::f32;

  friend bool operator==(const InstrParam& a, const InstrParam& b) {
    return a.name == b.name && a.role == b.role && a.shape == b.shape &&
           a.memspace == b.memspace && a.precision == b.precision;
  }
};

struct InstrDef {
  std::string name;
  std::vector<InstrParam> params;
  Stmt::Ptr body;  // semantic body over the params
  std::string c_template;
  std::vector<std::string> headers;
  InstrKind kind = InstrKind::other;

  const InstrParam* find_param(const std::string& pname) const {
    for (const auto& p : params)
      if (p.name == pname) return &p;
    return nullptr;
  }
  bool has_lane_param() const {
    for (const auto& p : params)
      if (p.role == InstrParam::lane) return true;
    return false;
  }
  // Whether the semantic body accumulates into this parameter.
  bool writes_by_reduce(const std::string& pname) const {
    std::vector<Access> accs;
    SymEnv env;
    int synth = 0;
    collect_accesses(body, accs, env, synth);
    for (const auto& a : accs)
      if (a.buffer == pname && a.is_write && a.is_reduce) return true;
    return false;
  }
};

struct TargetLibrary {
  std::string name;
  std::vector<MemSpace> memspaces;  // register spaces; DRAM is implicit
  std::vector<InstrDef> instrs;
  std::vector<Precision> precisions;

  const MemSpace* find_space(const std::string& sname) const {
    static const MemSpace kDram = MemSpace::dram();
    if (sname == "DRAM") return &kDram;
    for (const auto& m : memspaces)
      if (m.name == sname) return &m;
    return nullptr;
  }
  const InstrDef* find_instr(const std::string& iname) const {
    for (const auto& i : instrs)
      if (i.name == iname) return &i;
    return nullptr;
  }
  const InstrDef* find_kind(InstrKind kind, Precision prec) const {
    for (const auto& i : instrs) {
      if (i.kind != kind) continue;
      bool ok = true;
      for (const auto& p : i.params)
        if (p.role != InstrParam::lane && p.precision != prec) ok = false;
      if (ok) return &i;
    }
    return nullptr;
  }
  // The register space used by an instruction's vector operands.
  const MemSpace* register_space_of(const InstrDef& i) const {
    for (const auto& p : i.params)
      if (p.role != InstrParam::lane && p.memspace != "DRAM") return find_space(p.memspace);
    return nullptr;
  }

  ParseOptions parse_options() const {
    ParseOptions opts;
    opts.memspace = [this](const std::string& n) -> std::optional<MemSpace> {
      const MemSpace* m = find_space(n);
      if (!m) return std::nullopt;
      return *m;
    };
    opts.instr = [this](const std::string& n) -> std::optional<InstrCallSig> {
      const InstrDef* i = find_instr(n);
      if (!i) return std::nullopt;
      InstrCallSig sig;
      for (const auto& p : i->params)
        sig.params.push_back({p.name, p.role == InstrParam::dst,
                              p.role == InstrParam::dst && i->writes_by_reduce(p.name),
                              p.role == InstrParam::lane});
      return sig;
    };
    return opts;
  }
};

// ---------------------------------------------------------------------------
// Validation and classification

namespace targets {

inline void validate_instr(const TargetLibrary& lib, const InstrDef& instr) {
  auto bad = [&](const std::string& msg) {
    fail(ErrKind::ValidationError, "instruction '" + instr.name + "': " + msg);
  };
  if (!instr.body) bad("missing semantic body");

  // Lane parameters range over the lanes of the instruction's register space.
  int lane_range = 0;
  for (const auto& p : instr.params) {
    if (p.role == InstrParam::lane) continue;
    if (p.memspace != "DRAM") {
      const MemSpace* m = lib.find_space(p.memspace);
      if (!m) bad("parameter '" + p.name + "' uses undeclared space '" + p.memspace + "'");
      if (m->kind != MemSpace::vector_register) bad("parameter space must be a register space");
      lane_range = m->lanes;
      if (p.shape != std::vector<long long>{m->lanes})
        bad("register parameter '" + p.name + "' shape must be [lanes]");
      if (p.precision != m->lane_precision)
        bad("register parameter '" + p.name + "' precision differs from its space");
    }
  }

  // Check the body as if params were buffers in a tiny proc.
  Proc shell;
  shell.name = instr.name;
  std::map<std::string, BufferDecl> scope;
  SymEnv env;
  std::set<std::string> names;
  for (const auto& p : instr.params) {
    if (p.role == InstrParam::lane) {
      env[p.name] = SymRange{SymRange::lane, AffineExpr::cst(lane_range ? lane_range : 1)};
      continue;
    }
    BufferDecl d;
    d.name = p.name;
    for (long long s : p.shape) d.dims.push_back(AffineExpr::cst(s));
    d.precision = p.precision;
    d.memspace = p.memspace == "DRAM" ? MemSpace::dram() : *lib.find_space(p.memspace);
    d.read_only = p.role == InstrParam::src;
    scope[p.name] = d;
    names.insert(p.name);
  }
  std::vector<Diagnostic> ds;
  wf::Checker checker{shell, ds};
  checker.check_block({instr.body}, scope, env, names);
  if (!ds.empty()) bad(diagnostics_to_string(ds));  // includes writes to src params

  // dst params must actually be written
  std::vector<Access> accesses;
  SymEnv aenv = env;
  int synth = 0;
  collect_accesses(instr.body, accesses, aenv, synth);
  for (const auto& p : instr.params) {
    if (p.role != InstrParam::dst) continue;
    bool written = false;
    for (const auto& a : accesses)
      if (a.is_write && a.buffer == p.name) written = true;
    if (!written) bad("dst parameter '" + p.name + "' is never written");
  }

  // Template placeholders: every {x} must name a parameter, and every
  // parameter must be referenced.
  std::set<std::string> seen;
  const std::string& t = instr.c_template;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] != '{') continue;
    size_t j = t.find('}', i);
    if (j == std::string::npos) bad("unbalanced '{' in c_template");
    std::string token = t.substr(i + 1, j - i - 1);
    std::string pname = token;
    if (token.size() > 5 && token.substr(token.size() - 5) == "_data")
      pname = token.substr(0, token.size() - 5);
    const InstrParam* p = instr.find_param(pname);
    if (!p) bad("unknown placeholder {" + token + "} in c_template");
    bool wants_data = p->role != InstrParam::lane;
    if (wants_data != (token != pname)) bad("placeholder {" + token + "} has the wrong form");
    seen.insert(pname);
    i = j;
  }
  for (const auto& p : instr.params)
    if (!seen.count(p.name)) bad("parameter '" + p.name + "' missing from c_template");
}

inline InstrKind classify(const TargetLibrary& lib, const InstrDef& instr) {
  auto* loop = std::get_if<Stmt::Loop>(&instr.body->node);
  if (!loop || loop->body.size() != 1) return InstrKind::other;
  const std::string& l = loop->var;
  auto is_reg = [&](const std::string& pname) {
    const InstrParam* p = instr.find_param(pname);
    return p && p->memspace != "DRAM";
  };
  auto is_lane_sym = [&](const AffineExpr& e) {
    if (e.terms.size() != 1 || e.constant != 0) return false;
    const auto& [sym, c] = *e.terms.begin();
    const InstrParam* p = instr.find_param(sym);
    return c == 1 && p && p->role == InstrParam::lane;
  };
  auto is_l = [&](const AffineExpr& e) { return e == AffineExpr::sym(l); };

  if (auto* a = std::get_if<Stmt::Assign>(&loop->body[0]->node)) {
    if (a->index.size() != 1 || !is_l(a->index[0])) return InstrKind::other;
    if (auto* c = std::get_if<Expr::Const>(&a->value->node)) {
      return c->value == Rational(0) ? InstrKind::zero : InstrKind::other;
    }
    auto* r = std::get_if<Expr::Read>(&a->value->node);
    if (!r) return InstrKind::other;
    if (r->index.empty()) return InstrKind::dup;  // dst[l] = scalar
    if (r->index.size() == 1 && is_l(r->index[0])) {
      bool dst_reg = is_reg(a->buffer), src_reg = is_reg(r->buffer);
      if (dst_reg && !src_reg) return InstrKind::load;
      if (!dst_reg && src_reg) return InstrKind::store;
    }
    return InstrKind::other;
  }
  if (auto* red = std::get_if<Stmt::Reduce>(&loop->body[0]->node)) {
    if (red->index.size() != 1 || !is_l(red->index[0])) return InstrKind::other;
    auto* mul = std::get_if<Expr::Binary>(&red->value->node);
    if (!mul || mul->op != '*') return InstrKind::other;
    auto* ra = std::get_if<Expr::Read>(&mul->lhs->node);
    auto* rb = std::get_if<Expr::Read>(&mul->rhs->node);
    if (!ra || !rb || ra->index.size() != 1 || rb->index.size() != 1) return InstrKind::other;
    if (!is_l(ra->index[0])) return InstrKind::other;
    if (is_l(rb->index[0])) return InstrKind::fma_broadcast;
    if (is_lane_sym(rb->index[0])) return InstrKind::fma_lane;
  }
  (void)lib;
  return InstrKind::other;
}

inline void finalize(TargetLibrary& lib) {
  std::set<std::string> inames;
  for (auto& i : lib.instrs) {
    if (!inames.insert(i.name).second)
      fail(ErrKind::ValidationError, "duplicate instruction name '" + i.name + "'");
    validate_instr(lib, i);
    i.kind = classify(lib, i);
  }
}

// Builds one instruction from compact pieces; body text is parsed with the
// library's spaces in scope.
inline InstrDef make_instr(const TargetLibrary& lib, std::string name,
                           std::vector<InstrParam> params, const std::string& body_text,
                           std::string c_template, std::vector<std::string> headers) {
  InstrDef def;
  def.name = std::move(name);
  def.params = std::move(params);
  def.c_template = std::move(c_template);
  def.headers = std::move(headers);
  def.body = IrParser(lib.parse_options()).parse_stmt_line(body_text);
  return def;
}

}  // namespace targets

// ---------------------------------------------------------------------------
// Builtin libraries

namespace targets {

inline TargetLibrary build_neon(Precision prec) {
  bool half = prec == Precision::f16;
  TargetLibrary lib;
  lib.name = half ? "neon_f16" : "neon_f32";
  lib.precisions = {prec};
  int lanes = half ? 8 : 4;
  std::string space = half ? "Neon8f" : "Neon";
  lib.memspaces = {MemSpace{space, MemSpace::vector_register, lanes, prec,
                            half ? "float16x8_t" : "float32x4_t"}};
  std::string v = std::to_string(lanes);
  std::string sfx = (half ? std::string("8xf16") : std::string("4xf32"));
  std::string csfx = half ? "f16" : "f32";
  auto vecp = [&](const char* n, InstrParam::Role r) {
    return InstrParam{n, r, {lanes}, space, prec};
  };
  auto dramp = [&](const char* n, InstrParam::Role r, bool scalar) {
    return InstrParam{n, r, scalar ? std::vector<long long>{} : std::vector<long long>{lanes},
                      "DRAM", prec};
  };
  std::vector<std::string> hdrs = {"arm_neon.h"};
  std::string lane_loop = "for l in seq(0, " + v + "): ";

  lib.instrs.push_back(make_instr(lib, "neon_vld_" + sfx,
                                  {vecp("dst", InstrParam::dst), dramp("src", InstrParam::src, false)},
                                  lane_loop + "dst[l] = src[l]",
                                  "{dst_data} = vld1q_" + csfx + "(&{src_data});", hdrs));
  lib.instrs.push_back(make_instr(lib, "neon_vst_" + sfx,
                                  {dramp("dst", InstrParam::dst, false), vecp("src", InstrParam::src)},
                                  lane_loop + "dst[l] = src[l]",
                                  "vst1q_" + csfx + "(&{dst_data}, {src_data});", hdrs));
  lib.instrs.push_back(make_instr(
      lib, "neon_vfmla_" + sfx + "_" + sfx,
      {vecp("dst", InstrParam::dst), vecp("a", InstrParam::src), vecp("b", InstrParam::src),
       InstrParam{"lane", InstrParam::lane, {}, "", Precision::f32}},
      lane_loop + "dst[l] += a[l] * b[lane]",
      "{dst_data} = vfmaq_laneq_" + csfx + "({dst_data}, {a_data}, {b_data}, {lane});", hdrs));
  lib.instrs.push_back(make_instr(
      lib, "neon_vfmadd_" + sfx + "_" + sfx,
      {vecp("dst", InstrParam::dst), vecp("a", InstrParam::src), vecp("b", InstrParam::src)},
      lane_loop + "dst[l] += a[l] * b[l]",
      "{dst_data} = vfmaq_" + csfx + "({dst_data}, {a_data}, {b_data});", hdrs));
  lib.instrs.push_back(make_instr(lib, "neon_vdup_" + sfx,
                                  {vecp("dst", InstrParam::dst), dramp("src", InstrParam::src, true)},
                                  lane_loop + "dst[l] = src",
                                  "{dst_data} = vld1q_dup_" + csfx + "(&{src_data});", hdrs));
  lib.instrs.push_back(make_instr(
      lib, "neon_vzero_" + sfx, {vecp("dst", InstrParam::dst)}, lane_loop + "dst[l] = 0",
      half ? "{dst_data} = vdupq_n_f16((float16_t)0.0f);" : "{dst_data} = vdupq_n_f32(0.0f);",
      hdrs));
  finalize(lib);
  return lib;
}

inline TargetLibrary build_avx512() {
  TargetLibrary lib;
  lib.name = "avx512_f32";
  lib.precisions = {Precision::f32};
  lib.memspaces = {MemSpace{"Avx512", MemSpace::vector_register, 16, Precision::f32, "__m512"}};
  auto vecp = [&](const char* n, InstrParam::Role r) {
    return InstrParam{n, r, {16}, "Avx512", Precision::f32};
  };
  auto dramp = [&](const char* n, InstrParam::Role r, bool scalar) {
    return InstrParam{n, r, scalar ? std::vector<long long>{} : std::vector<long long>{16},
                      "DRAM", Precision::f32};
  };
  std::vector<std::string> hdrs = {"immintrin.h"};
  const std::string lane_loop = "for l in seq(0, 16): ";

  lib.instrs.push_back(make_instr(lib, "_mm512_loadu_ps",
                                  {vecp("dst", InstrParam::dst), dramp("src", InstrParam::src, false)},
                                  lane_loop + "dst[l] = src[l]",
                                  "{dst_data} = _mm512_loadu_ps(&{src_data});", hdrs));
  lib.instrs.push_back(make_instr(lib, "_mm512_storeu_ps",
                                  {dramp("dst", InstrParam::dst, false), vecp("src", InstrParam::src)},
                                  lane_loop + "dst[l] = src[l]",
                                  "_mm512_storeu_ps(&{dst_data}, {src_data});", hdrs));
  lib.instrs.push_back(make_instr(
      lib, "_mm512_fmadd_ps",
      {vecp("dst", InstrParam::dst), vecp("a", InstrParam::src), vecp("b", InstrParam::src)},
      lane_loop + "dst[l] += a[l] * b[l]",
      "{dst_data} = _mm512_fmadd_ps({a_data}, {b_data}, {dst_data});", hdrs));
  lib.instrs.push_back(make_instr(lib, "_mm512_set1_ps",
                                  {vecp("dst", InstrParam::dst), dramp("src", InstrParam::src, true)},
                                  lane_loop + "dst[l] = src",
                                  "{dst_data} = _mm512_set1_ps({src_data});", hdrs));
  lib.instrs.push_back(make_instr(lib, "_mm512_setzero_ps", {vecp("dst", InstrParam::dst)},
                                  lane_loop + "dst[l] = 0",
                                  "{dst_data} = _mm512_setzero_ps();", hdrs));
  finalize(lib);
  return lib;
}

}  // namespace targets

inline const std::vector<TargetLibrary>& builtin_targets() {
  static const std::vector<TargetLibrary> libs = {
      targets::build_neon(Precision::f32),
      targets::build_neon(Precision::f16),
      targets::build_avx512(),
  };
  return libs;
}

inline const TargetLibrary& get_target(const std::string& name) {
  for (const auto& t : builtin_targets())
    if (t.name == name) return t;
  fail(ErrKind::ValidationError, "unknown target '" + name + "'");
}

// ---------------------------------------------------------------------------
// Target document serialization (schema in docs/target_format.md)

inline std::string serialize_target(const TargetLibrary& lib) {
  std::ostringstream os;
  os << "target " << lib.name << "\n";
  os << "precisions =";
  for (auto p : lib.precisions) os << " " << precision_name(p);
  os << "\n";
  for (const auto& m : lib.memspaces) {
    os << "\n[memspace]\n";
    os << "name = " << m.name << "\n";
    os << "kind = " << (m.kind == MemSpace::vector_register ? "vector_register" : "addressable")
       << "\n";
    if (m.kind == MemSpace::vector_register) {
      os << "lanes = " << m.lanes << "\n";
      os << "precision = " << precision_name(m.lane_precision) << "\n";
      os << "c_type = " << m.c_type << "\n";
    }
  }
  for (const auto& i : lib.instrs) {
    os << "\n[instr]\n";
    os << "name = " << i.name << "\n";
    os << "params =";
    bool first = true;
    for (const auto& p : i.params) {
      os << (first ? " " : ", ");
      first = false;
      if (p.role == InstrParam::lane) {
        os << p.name << ":lane";
        continue;
      }
      os << p.name << ":" << (p.role == InstrParam::dst ? "dst" : "src") << ":[";
      for (size_t d = 0; d < p.shape.size(); ++d) os << (d ? ", " : "") << p.shape[d];
      os << "]:" << p.memspace << ":" << precision_name(p.precision);
    }
    os << "\n";
    std::string body = stmt_to_string(i.body);
    // single-line chain form
    std::string flat;
    for (size_t c = 0; c < body.size(); ++c) {
      if (body[c] == '\n') {
        while (c + 1 < body.size() && body[c + 1] == ' ') ++c;
        if (c + 1 < body.size()) flat += ' ';
      } else {
        flat += body[c];
      }
    }
    os << "body = " << flat << "\n";
    os << "c_template = " << i.c_template << "\n";
    os << "headers =";
    for (const auto& h : i.headers) os << " " << h;
    os << "\n";
  }
  return os.str();
}

inline TargetLibrary load_target(const std::string& text) {
  TargetLibrary lib;
  struct Pending {
    bool is_instr = false;
    std::map<std::string, std::string> kv;
    int line = 0;
  };
  std::vector<Pending> sections;
  Pending* cur = nullptr;

  int line_no = 0;
  size_t pos = 0;
  bool saw_header = false;
  auto perr = [&](const std::string& msg) {
    fail(ErrKind::ParseError, "target document line " + std::to_string(line_no) + ": " + msg);
  };
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.pop_back();
    size_t start = line.find_first_not_of(' ');
    if (start == std::string::npos || line[start] == '#') {
      if (end == text.size()) break;
      continue;
    }
    line = line.substr(start);
    if (!saw_header) {
      if (line.rfind("target ", 0) != 0) perr("expected 'target <name>'");
      lib.name = line.substr(7);
      saw_header = true;
    } else if (line == "[memspace]" || line == "[instr]") {
      sections.push_back(Pending{line == "[instr]", {}, line_no});
      cur = &sections.back();
    } else {
      size_t eq = line.find('=');
      if (eq == std::string::npos) perr("expected 'key = value'");
      std::string key = line.substr(0, eq);
      std::string value = line.substr(eq + 1);
      auto trim = [](std::string& s) {
        size_t a = s.find_first_not_of(' ');
        size_t b = s.find_last_not_of(' ');
        s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
      };
      trim(key);
      trim(value);
      if (!cur) {
        if (key != "precisions") perr("key outside of a section");
        std::istringstream is(value);
        std::string tok;
        while (is >> tok)
          lib.precisions.push_back(tok == "f16" ? Precision::f16 : Precision::f32);
      } else {
        cur->kv[key] = value;
      }
    }
    if (end == text.size()) break;
  }
  if (!saw_header) fail(ErrKind::ParseError, "target document line 1: missing 'target <name>'");

  auto need = [&](Pending& s, const char* key) -> std::string {
    auto it = s.kv.find(key);
    if (it == s.kv.end())
      fail(ErrKind::ParseError, "target document line " + std::to_string(s.line) +
                                    ": section is missing '" + std::string(key) + "'");
    return it->second;
  };

  // memspaces first; instruction bodies need them in scope
  for (auto& s : sections) {
    if (s.is_instr) continue;
    MemSpace m;
    m.name = need(s, "name");
    std::string kind = need(s, "kind");
    if (kind == "vector_register") {
      m.kind = MemSpace::vector_register;
      m.lanes = std::stoi(need(s, "lanes"));
      m.lane_precision = need(s, "precision") == "f16" ? Precision::f16 : Precision::f32;
      m.c_type = need(s, "c_type");
      if (m.lanes < 1)
        fail(ErrKind::ValidationError, "memspace '" + m.name + "' must have positive lanes");
    } else if (kind != "addressable") {
      fail(ErrKind::ParseError, "target document line " + std::to_string(s.line) +
                                    ": unknown memspace kind '" + kind + "'");
    }
    lib.memspaces.push_back(std::move(m));
  }
  for (auto& s : sections) {
    if (!s.is_instr) continue;
    InstrDef def;
    def.name = need(s, "name");
    std::string params = need(s, "params");
    std::istringstream ps(params);
    std::string item;
    while (std::getline(ps, item, ',')) {
      size_t a = item.find_first_not_of(' ');
      if (a == std::string::npos) continue;
      item = item.substr(a);
      // name:role[:shape:space:precision]
      std::vector<std::string> fields;
      size_t depth = 0, last = 0;
      for (size_t c = 0; c <= item.size(); ++c) {
        if (c == item.size() || (item[c] == ':' && depth == 0)) {
          fields.push_back(item.substr(last, c - last));
          last = c + 1;
        } else if (item[c] == '[') {
          ++depth;
        } else if (item[c] == ']') {
          --depth;
        }
      }
      InstrParam p;
      p.name = fields[0];
      if (fields.size() == 2 && fields[1] == "lane") {
        p.role = InstrParam::lane;
      } else if (fields.size() == 5) {
        p.role = fields[1] == "dst" ? InstrParam::dst : InstrParam::src;
        std::string shape = fields[2];
        for (size_t c = 0; c < shape.size(); ++c)
          if (std::isdigit(static_cast<unsigned char>(shape[c]))) {
            size_t len = 0;
            p.shape.push_back(std::stoll(shape.substr(c), &len));
            c += len - 1;
          }
        p.memspace = fields[3];
        p.precision = fields[4] == "f16" ? Precision::f16 : Precision::f32;
      } else {
        fail(ErrKind::ParseError, "target document line " + std::to_string(s.line) +
                                      ": malformed parameter '" + item + "'");
      }
      def.params.push_back(std::move(p));
    }
    def.c_template = need(s, "c_template");
    std::istringstream hs(need(s, "headers"));
    std::string h;
    while (hs >> h) def.headers.push_back(h);
    def.body = IrParser(lib.parse_options()).parse_stmt_line(need(s, "body"));
    lib.instrs.push_back(std::move(def));
  }
  targets::finalize(lib);
  return lib;
}

// Structural equality for round-trip tests.
inline bool target_equal(const TargetLibrary& a, const TargetLibrary& b) {
  if (a.name != b.name || a.memspaces != b.memspaces || a.precisions != b.precisions ||
      a.instrs.size() != b.instrs.size())
    return false;
  for (size_t i = 0; i < a.instrs.size(); ++i) {
    const InstrDef& x = a.instrs[i];
    const InstrDef& y = b.instrs[i];
    if (x.name != y.name || x.params != y.params || x.c_template != y.c_template ||
        x.headers != y.headers || x.kind != y.kind || !stmt_equal(x.body, y.body))
      return false;
  }
  return true;
}

}  // namespace ukgen
