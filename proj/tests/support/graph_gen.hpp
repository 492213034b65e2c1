#pragma once

// Random AMR graphs for property tests. Nodes are created in pre-order and
// reentrant references only point at nodes created earlier, so the PENMAN
// text always defines a variable before any bare mention of it.

#include <random>
#include <string>
#include <vector>

#include "conceptrag/penman.hpp"

namespace testgen {

struct GraphGenerator {
  explicit GraphGenerator(std::uint64_t seed) : rng(seed) {}

  conceptrag::AmrGraph make() {
    graph = conceptrag::AmrGraph{};
    created.clear();
    counter = 0;
    if (chance(0.4)) {
      const std::string root = fresh();
      graph.add_node(root, "multi-sentence");
      graph.set_root(root);
      const int sentences = uniform(1, 4);
      for (int s = 1; s <= sentences; ++s) build(0, root, ":snt" + std::to_string(s));
    } else {
      graph.set_root(build(0, "", ""));
    }
    return graph;
  }

  std::mt19937_64 rng;
  conceptrag::AmrGraph graph;
  std::vector<std::string> created;
  int counter = 0;

 private:
  static constexpr const char* kLabels[] = {
      "work-01", "say-01",  "river",    "teacher", "mathematics", "begin-01", "small",
      "book",    "write-01", "country", "see-01",  "music",       "house",    "long-03",
      "person",  "city",    "he",       "thing",   "and",         "red-02",   "prize"};
  static constexpr const char* kRoles[] = {":ARG0", ":ARG1", ":ARG2", ":mod", ":location",
                                           ":time", ":op1",  ":poss", ":manner", ":ARG1-of"};
  static constexpr const char* kWords[] = {"Alder", "Brook", "Cedar", "Dune",  "Elm",
                                           "Fjord", "Grove", "Heath", "Isle",  "Juniper"};

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng); }
  template <typename T, std::size_t N>
  const T& pick(const T (&arr)[N]) {
    return arr[static_cast<std::size_t>(uniform(0, static_cast<int>(N) - 1))];
  }

  std::string fresh() {
    const std::string v = std::string(1, static_cast<char>('a' + counter % 26)) + std::to_string(counter);
    ++counter;
    return v;
  }

  // The edge from the parent goes in before the child's own edges, matching
  // the textual order the parser records.
  std::string add(const std::string& label, const std::string& parent = "", const std::string& role = "") {
    const std::string v = fresh();
    graph.add_node(v, label);
    if (!parent.empty()) graph.add_relation(parent, role, v);
    created.push_back(v);
    return v;
  }

  void add_name(const std::string& owner) {
    const std::string n = add("name", owner, ":name");
    const int parts = uniform(1, 3);
    for (int i = 1; i <= parts; ++i)
      graph.add_attribute(n, ":op" + std::to_string(i), {pick(kWords), true});
  }

  std::string build(int depth, const std::string& parent, const std::string& role) {
    const int kind = uniform(0, 9);
    if (kind == 0) {
      const std::string d = add("date-entity", parent, role);
      if (chance(0.7)) graph.add_attribute(d, ":year", {std::to_string(uniform(1900, 2030)), false});
      if (chance(0.5)) graph.add_attribute(d, ":month", {std::to_string(uniform(1, 12)), false});
      if (chance(0.5)) graph.add_attribute(d, ":day", {std::to_string(uniform(1, 28)), false});
      return d;
    }
    if (kind == 1) {
      const std::string e = add(chance(0.5) ? "city" : "person", parent, role);
      if (chance(0.6)) {
        std::string wiki = pick(kWords);
        if (chance(0.4)) wiki += std::string("_") + pick(kWords);
        graph.add_attribute(e, ":wiki", {wiki, true});
      } else if (chance(0.3)) {
        graph.add_attribute(e, ":wiki", {"-", false});
      }
      add_name(e);
      return e;
    }
    const std::string v = add(pick(kLabels), parent, role);
    if (depth >= 4) return v;
    const int children = uniform(0, 3);
    for (int c = 0; c < children; ++c) {
      const int what = uniform(0, 9);
      if (what == 0) {
        graph.add_attribute(v, ":polarity", {"-", false});
      } else if (what == 1) {
        graph.add_attribute(v, ":quant", {std::to_string(uniform(1, 500)), false});
      } else if (what == 2 && created.size() > 1) {
        const auto& target = created[static_cast<std::size_t>(uniform(0, static_cast<int>(created.size()) - 2))];
        if (target != v) graph.add_relation(v, pick(kRoles), target, true);
      } else {
        build(depth + 1, v, pick(kRoles));
      }
    }
    return v;
  }
};

}  // namespace testgen
