#pragma once

// PENMAN reading and writing for AMR graphs, plus the sentence split and
// depth-first node order that concept distillation walks.

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace conceptrag {

/// Error raised for malformed PENMAN text. `offset()` is a byte offset into
/// the text that was handed to the parser.
class PenmanError : public std::runtime_error {
 public:
  PenmanError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A constant value: either a quoted string or a bare symbol (numbers,
/// polarity "-"/"+", and constants such as `imperative`).
struct Literal {
  std::string text;
  bool quoted = false;

  bool operator==(const Literal&) const = default;
};

/// Reference to another node. A reentrant reference is a second (or later)
/// mention of a variable; traversal never expands it.
struct NodeRef {
  std::string variable;
  bool reentrant = false;

  bool operator==(const NodeRef&) const = default;
};

struct AmrEdge {
  std::string source;
  std::string role;  // including the leading ':'
  std::variant<NodeRef, Literal> target;

  bool is_literal() const { return std::holds_alternative<Literal>(target); }
  const Literal* literal() const { return std::get_if<Literal>(&target); }
  const NodeRef* node() const { return std::get_if<NodeRef>(&target); }

  bool operator==(const AmrEdge&) const = default;
};

struct AmrNode {
  std::string variable;
  std::string instance;
  /// (role, literal) pairs in textual order. Mirrors the literal edges of
  /// this node in `AmrGraph::edges()`.
  std::vector<std::pair<std::string, Literal>> attributes;

  /// First attribute value for `role`, if any.
  const Literal* attribute(std::string_view role) const;

  bool operator==(const AmrNode&) const = default;
};

/// Rooted, directed, labelled graph. Edges are kept in the order the roles
/// appear in the PENMAN source; node attributes are kept in sync.
class AmrGraph {
 public:
  AmrGraph() = default;

  // Builder API. The parser uses it too, so hand-built graphs and parsed
  // graphs compare equal when they describe the same structure.
  void add_node(std::string variable, std::string instance);
  void add_relation(const std::string& source, std::string role,
                    std::string target, bool reentrant = false);
  void add_attribute(const std::string& source, std::string role, Literal value);
  void set_root(std::string variable) { root_ = std::move(variable); }

  /// Checks the structural invariants: a root exists, every node is reached
  /// exactly once through a non-reentrant edge, and every reference resolves.
  /// Throws std::invalid_argument.
  void validate() const;

  bool empty() const { return nodes_.empty(); }
  const std::string& root() const { return root_; }
  const std::map<std::string, AmrNode>& nodes() const { return nodes_; }
  const std::vector<AmrEdge>& edges() const { return edges_; }

  const AmrNode& node(const std::string& variable) const;
  bool contains(const std::string& variable) const { return nodes_.count(variable) != 0; }

  /// Outgoing edges of `variable`, in textual order.
  std::vector<const AmrEdge*> outgoing(const std::string& variable) const;

  /// Number of (role, literal) pairs in the whole graph.
  std::size_t attribute_count() const;

  bool operator==(const AmrGraph& other) const {
    return root_ == other.root_ && nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  std::string root_;
  std::map<std::string, AmrNode> nodes_;
  std::vector<AmrEdge> edges_;
  std::map<std::string, std::vector<std::size_t>> out_index_;
};

/// A `:sntN` constituent of a multi-sentence graph, or the whole graph.
struct SentenceSubgraph {
  int index = 1;
  std::string root;
  /// Variables owned by this sentence, in depth-first order.
  std::vector<std::string> members;
};

/// Parses exactly one PENMAN graph. Alignment markers (`~e.N`) and `#`
/// comments are dropped. Throws PenmanError.
AmrGraph parse_amr(std::string_view text);

/// Parses a file-like sequence of graphs (standard corpus layout: one graph
/// per blank-line separated block, `#` metadata lines allowed).
std::vector<AmrGraph> parse_amr_corpus(std::string_view text);

/// Indented PENMAN. A node without roles is written on one line.
std::string serialize_amr(const AmrGraph& graph);

/// Splits a `multi-sentence` graph into its `:sntN` parts ordered by N.
/// Any other graph yields a single subgraph with index 1. Throws PenmanError
/// (offset 0) on duplicate or non-numeric sentence roles.
std::vector<SentenceSubgraph> split_sentences(const AmrGraph& graph);

/// Pre-order over instance nodes below `sentence.root`, children in textual
/// order, reentrant references skipped.
std::vector<std::string> dfs_nodes(const AmrGraph& graph, const SentenceSubgraph& sentence);

/// JSON rendering used by the `parse` command.
std::string graph_to_json(const AmrGraph& graph, int indent = 2);

}  // namespace conceptrag
