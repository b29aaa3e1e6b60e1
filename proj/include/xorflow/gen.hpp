#pragma once

#include <cstdint>
#include <string>

#include "xorflow/netmodel.hpp"

namespace xorflow {

// Bundled example topologies.
//   line:               N nodes in a path, one end-to-end session
//   two-unicast-poison: the wired 6-node crossed-unicast fixture where the
//                       shared middle link forces XOR coding
//   reverse-carpool:    3-node wireless relay with opposite sessions and
//                       singleton-transmitter rate sets
//   random:             seeded wired/wireless instance for fuzz suites
ProblemInstance gen_line(int n_nodes, double rate, double cap);
ProblemInstance gen_two_unicast_poison(double rate);
ProblemInstance gen_reverse_carpool(double rate);
ProblemInstance gen_random(std::uint64_t seed, int n_nodes, int n_sessions, Mode mode);

// name in {line, two-unicast-poison, reverse-carpool, random}; unknown names
// raise ConfigError.
ProblemInstance gen_by_name(const std::string& name, double rate, int n_nodes, int n_sessions,
                            std::uint64_t seed, Mode mode);

}  // namespace xorflow
