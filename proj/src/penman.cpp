#include "conceptrag/penman.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>

#include <json.hpp>

namespace conceptrag {

PenmanError::PenmanError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

const Literal* AmrNode::attribute(std::string_view role) const {
  for (const auto& [r, value] : attributes)
    if (r == role) return &value;
  return nullptr;
}

void AmrGraph::add_node(std::string variable, std::string instance) {
  if (nodes_.count(variable)) throw std::invalid_argument("duplicate variable " + variable);
  if (root_.empty()) root_ = variable;
  AmrNode node{variable, std::move(instance), {}};
  nodes_.emplace(std::move(variable), std::move(node));
}

void AmrGraph::add_relation(const std::string& source, std::string role, std::string target,
                            bool reentrant) {
  out_index_[source].push_back(edges_.size());
  edges_.push_back(AmrEdge{source, std::move(role), NodeRef{std::move(target), reentrant}});
}

void AmrGraph::add_attribute(const std::string& source, std::string role, Literal value) {
  auto it = nodes_.find(source);
  if (it == nodes_.end()) throw std::invalid_argument("attribute on unknown variable " + source);
  it->second.attributes.emplace_back(role, value);
  out_index_[source].push_back(edges_.size());
  edges_.push_back(AmrEdge{source, std::move(role), std::move(value)});
}

const AmrNode& AmrGraph::node(const std::string& variable) const {
  auto it = nodes_.find(variable);
  if (it == nodes_.end()) throw std::out_of_range("no node " + variable);
  return it->second;
}

std::vector<const AmrEdge*> AmrGraph::outgoing(const std::string& variable) const {
  std::vector<const AmrEdge*> out;
  auto it = out_index_.find(variable);
  if (it == out_index_.end()) return out;
  out.reserve(it->second.size());
  for (std::size_t i : it->second) out.push_back(&edges_[i]);
  return out;
}

std::size_t AmrGraph::attribute_count() const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [](const AmrEdge& e) { return e.is_literal(); }));
}

void AmrGraph::validate() const {
  if (nodes_.empty()) return;
  if (!contains(root_)) throw std::invalid_argument("root " + root_ + " is not a node");
  std::map<std::string, int> owners;
  for (const auto& e : edges_) {
    if (!contains(e.source)) throw std::invalid_argument("edge from unknown variable " + e.source);
    const NodeRef* ref = e.node();
    if (!ref) continue;
    if (!contains(ref->variable))
      throw std::invalid_argument("reference to undefined variable " + ref->variable);
    if (!ref->reentrant) ++owners[ref->variable];
  }
  if (owners.count(root_)) throw std::invalid_argument("root has an owning parent");
  for (const auto& [var, node] : nodes_) {
    if (var == root_) continue;
    auto it = owners.find(var);
    if (it == owners.end()) throw std::invalid_argument("node " + var + " is unreachable");
    if (it->second != 1) throw std::invalid_argument("node " + var + " has several owners");
  }
  // Owning edges form a tree only if a walk from the root sees every node.
  std::set<std::string> seen;
  std::function<void(const std::string&)> walk = [&](const std::string& v) {
    if (!seen.insert(v).second) throw std::invalid_argument("cycle through " + v);
    for (const AmrEdge* e : outgoing(v))
      if (const NodeRef* r = e->node(); r && !r->reentrant) walk(r->variable);
  };
  walk(root_);
  if (seen.size() != nodes_.size()) throw std::invalid_argument("owning edges do not form a tree");
}

namespace {

enum class Tok { LParen, RParen, Slash, Role, String, Symbol, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

bool is_delim(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"' ||
         c == '~';
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_trivia();
    if (pos_ >= src_.size()) return {Tok::End, "", pos_};
    const std::size_t start = pos_;
    const char c = src_[pos_];
    if (c == '(') return ++pos_, Token{Tok::LParen, "(", start};
    if (c == ')') return ++pos_, Token{Tok::RParen, ")", start};
    if (c == '/') return ++pos_, Token{Tok::Slash, "/", start};
    if (c == '"') return lex_string();
    while (pos_ < src_.size() && !is_delim(src_[pos_])) ++pos_;
    std::string text(src_.substr(start, pos_ - start));
    skip_alignment();
    return {c == ':' ? Tok::Role : Tok::Symbol, std::move(text), start};
  }

  Token peek() {
    const std::size_t saved = pos_;
    Token t = next();
    pos_ = saved;
    return t;
  }

 private:
  void skip_trivia() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  // `~e.12` or `~12,13` directly after a token.
  void skip_alignment() {
    if (pos_ < src_.size() && src_[pos_] == '~') {
      ++pos_;
      while (pos_ < src_.size() && !is_delim(src_[pos_])) ++pos_;
    }
  }

  Token lex_string() {
    const std::size_t start = pos_++;
    std::string out;
    while (pos_ < src_.size()) {
      const char c = src_[pos_++];
      if (c == '\\' && pos_ < src_.size()) {
        out.push_back(src_[pos_++]);
      } else if (c == '"') {
        skip_alignment();
        return {Tok::String, std::move(out), start};
      } else {
        out.push_back(c);
      }
    }
    throw PenmanError("unterminated string literal", start);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

bool valid_variable(std::string_view v) {
  if (v.empty() || !(v[0] >= 'a' && v[0] <= 'z')) return false;
  return std::all_of(v.begin() + 1, v.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'';
  });
}

bool valid_role(std::string_view r) {
  if (r.size() < 2 || r[0] != ':') return false;
  return std::all_of(r.begin() + 1, r.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-';
  });
}

// Bare symbols of this shape are taken to be variable names, so an
// undefined one is an error rather than a constant.
bool variable_shaped(std::string_view v) {
  if (v.empty() || !(v[0] >= 'a' && v[0] <= 'z')) return false;
  return std::all_of(v.begin() + 1, v.end(), [](char c) { return c >= '0' && c <= '9'; });
}

struct PendingRole {
  std::string source;
  std::string role;
  enum Kind { Child, String, Symbol } kind;
  std::string value;
  std::size_t offset;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  bool at_end() { return lex_.peek().kind == Tok::End; }
  std::size_t next_offset() { return lex_.peek().offset; }

  AmrGraph parse_graph() {
    nodes_.clear();
    roles_.clear();
    defined_.clear();
    const Token open = lex_.peek();
    if (open.kind != Tok::LParen) throw PenmanError("expected '('", open.offset);
    const std::string root = parse_node();

    AmrGraph g;
    // Nodes are added first so attributes can attach; edge order follows text.
    for (const auto& [var, label] : nodes_) g.add_node(var, label);
    g.set_root(root);
    for (const auto& p : roles_) {
      switch (p.kind) {
        case PendingRole::Child:
          g.add_relation(p.source, p.role, p.value, false);
          break;
        case PendingRole::String:
          g.add_attribute(p.source, p.role, Literal{p.value, true});
          break;
        case PendingRole::Symbol:
          if (defined_.count(p.value)) {
            g.add_relation(p.source, p.role, p.value, true);
          } else if (variable_shaped(p.value)) {
            throw PenmanError("reference to undefined variable '" + p.value + "'", p.offset);
          } else {
            g.add_attribute(p.source, p.role, Literal{p.value, false});
          }
          break;
      }
    }
    return g;
  }

 private:
  Token expect(Tok kind, const char* what) {
    Token t = lex_.next();
    if (t.kind == Tok::End) throw PenmanError(std::string("unbalanced parentheses: expected ") + what, t.offset);
    if (t.kind != kind) throw PenmanError(std::string("expected ") + what + ", found '" + t.text + "'", t.offset);
    return t;
  }

  std::string parse_node() {
    expect(Tok::LParen, "'('");
    Token var = expect(Tok::Symbol, "variable");
    if (!valid_variable(var.text)) throw PenmanError("invalid variable '" + var.text + "'", var.offset);
    if (!defined_.insert(var.text).second)
      throw PenmanError("duplicate variable '" + var.text + "'", var.offset);
    expect(Tok::Slash, "'/'");
    Token concept_tok = lex_.next();
    if (concept_tok.kind != Tok::Symbol && concept_tok.kind != Tok::String)
      throw PenmanError("expected concept", concept_tok.offset);
    nodes_.emplace_back(var.text, concept_tok.text);

    for (;;) {
      Token t = lex_.next();
      if (t.kind == Tok::RParen) return var.text;
      if (t.kind == Tok::End) throw PenmanError("unbalanced parentheses: missing ')'", t.offset);
      if (t.kind != Tok::Role) throw PenmanError("expected role or ')', found '" + t.text + "'", t.offset);
      if (!valid_role(t.text)) throw PenmanError("invalid role '" + t.text + "'", t.offset);
      Token v = lex_.peek();
      switch (v.kind) {
        case Tok::LParen: {
          // Reserve the slot so the edge keeps its textual position.
          const std::size_t slot = roles_.size();
          roles_.push_back({var.text, t.text, PendingRole::Child, "", v.offset});
          roles_[slot].value = parse_node();
          break;
        }
        case Tok::String:
          lex_.next();
          roles_.push_back({var.text, t.text, PendingRole::String, v.text, v.offset});
          break;
        case Tok::Symbol:
          lex_.next();
          roles_.push_back({var.text, t.text, PendingRole::Symbol, v.text, v.offset});
          break;
        case Tok::End:
          throw PenmanError("unbalanced parentheses: missing ')'", v.offset);
        default:
          throw PenmanError("expected value after role " + t.text, v.offset);
      }
    }
  }

  Lexer lex_;
  std::vector<std::pair<std::string, std::string>> nodes_;
  std::vector<PendingRole> roles_;
  std::set<std::string> defined_;
};

void write_literal(std::string& out, const Literal& l) {
  if (!l.quoted) {
    out += l.text;
    return;
  }
  out.push_back('"');
  for (char c : l.text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
}

void write_node(const AmrGraph& g, const std::string& var, int depth, std::string& out) {
  const AmrNode& node = g.node(var);
  out += "(" + var + " / " + node.instance;
  for (const AmrEdge* e : g.outgoing(var)) {
    out += "\n";
    out.append(static_cast<std::size_t>(depth + 1) * 4, ' ');
    out += e->role;
    out.push_back(' ');
    if (const Literal* l = e->literal()) {
      write_literal(out, *l);
    } else if (const NodeRef* r = e->node(); r->reentrant) {
      out += r->variable;
    } else {
      write_node(g, r->variable, depth + 1, out);
    }
  }
  out.push_back(')');
}

void collect_dfs(const AmrGraph& g, const std::string& var, std::vector<std::string>& out) {
  out.push_back(var);
  for (const AmrEdge* e : g.outgoing(var)) {
    const NodeRef* r = e->node();
    if (r && !r->reentrant) collect_dfs(g, r->variable, out);
  }
}

}  // namespace

AmrGraph parse_amr(std::string_view text) {
  Parser parser(text);
  AmrGraph g = parser.parse_graph();
  if (!parser.at_end()) throw PenmanError("unexpected content after graph", parser.next_offset());
  return g;
}

std::vector<AmrGraph> parse_amr_corpus(std::string_view text) {
  std::vector<AmrGraph> graphs;
  Parser parser(text);
  while (!parser.at_end()) graphs.push_back(parser.parse_graph());
  return graphs;
}

std::string serialize_amr(const AmrGraph& graph) {
  std::string out;
  if (graph.empty()) return out;
  write_node(graph, graph.root(), 0, out);
  return out;
}

std::vector<SentenceSubgraph> split_sentences(const AmrGraph& graph) {
  std::vector<SentenceSubgraph> out;
  if (graph.empty()) return out;
  const AmrNode& root = graph.node(graph.root());
  if (root.instance != "multi-sentence") {
    SentenceSubgraph s{1, graph.root(), {}};
    collect_dfs(graph, graph.root(), s.members);
    out.push_back(std::move(s));
    return out;
  }
  std::map<int, std::string> by_number;
  for (const AmrEdge* e : graph.outgoing(graph.root())) {
    if (e->role.rfind(":snt", 0) != 0) continue;
    const std::string digits = e->role.substr(4);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) {
          return std::isdigit(static_cast<unsigned char>(c));
        }))
      throw PenmanError("non-numeric sentence role " + e->role, 0);
    const NodeRef* ref = e->node();
    if (!ref || ref->reentrant) throw PenmanError("sentence role " + e->role + " does not own a node", 0);
    const int n = std::stoi(digits);
    if (!by_number.emplace(n, ref->variable).second)
      throw PenmanError("duplicate sentence role " + e->role, 0);
  }
  int index = 1;
  for (const auto& [n, var] : by_number) {
    SentenceSubgraph s{index++, var, {}};
    collect_dfs(graph, var, s.members);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> dfs_nodes(const AmrGraph& graph, const SentenceSubgraph& sentence) {
  std::vector<std::string> out;
  if (!graph.contains(sentence.root)) return out;
  collect_dfs(graph, sentence.root, out);
  return out;
}

std::string graph_to_json(const AmrGraph& graph, int indent) {
  using nlohmann::json;
  json nodes = json::array();
  json edges = json::array();
  // Nodes in depth-first order read more naturally than map order.
  std::vector<std::string> order;
  if (!graph.empty()) collect_dfs(graph, graph.root(), order);
  for (const auto& var : order) {
    const AmrNode& n = graph.node(var);
    json attrs = json::array();
    for (const auto& [role, lit] : n.attributes)
      attrs.push_back({{"role", role}, {"value", lit.text}, {"quoted", lit.quoted}});
    nodes.push_back({{"variable", n.variable}, {"instance", n.instance}, {"attributes", attrs}});
  }
  for (const auto& e : graph.edges()) {
    json j{{"source", e.source}, {"role", e.role}};
    if (const Literal* l = e.literal()) {
      j["literal"] = l->text;
      j["quoted"] = l->quoted;
    } else {
      j["target"] = e.node()->variable;
      j["reentrant"] = e.node()->reentrant;
    }
    edges.push_back(std::move(j));
  }
  json doc{{"root", graph.root()}, {"nodes", nodes}, {"edges", edges}};
  return doc.dump(indent);
}

}  // namespace conceptrag
