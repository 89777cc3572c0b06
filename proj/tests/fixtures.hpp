#pragma once

#include <vector>

#include "netclear/network.hpp"

namespace fixture {

using netclear::Matrix;
using netclear::Vector;

/// Three nodes; node 0 owes 1 to each of nodes 1 and 2, every node owes 1
/// outside, and only node 0 holds external assets (1).
inline netclear::ShockRealization three_node_shock(int round) {
  Matrix l(3, 3);
  l(0, 1) = 1.0;
  l(0, 2) = 1.0;
  return {round, {1.0, 1.0, 1.0}, {1.0, 0.0, 0.0}, l};
}

inline netclear::SamplePath three_node_path(int rounds = 2) {
  std::vector<netclear::ShockRealization> s;
  for (int t = 1; t <= rounds; ++t) s.push_back(three_node_shock(t));
  return netclear::SamplePath(std::move(s));
}

inline netclear::ShockRealization zero_shock(int round, std::size_t n) {
  return {round, Vector(n, 1.0), Vector(n, 0.0), Matrix(n, n)};
}

} // namespace fixture
