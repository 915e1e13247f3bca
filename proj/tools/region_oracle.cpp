// Counts activation regions and boundary patterns of a network over a box by
// walking the region adjacency graph.
//
//   region_oracle <network.json | builtin-name> lo1 hi1 [lo2 hi2 ...]

#include <iostream>
#include <string>

#include "ncbf/network/builtin.hpp"
#include "ncbf/network/io.hpp"
#include "region_oracle.hpp"

int main(int argc, char** argv)
{
    if (argc < 4 || (argc - 2) % 2 != 0) {
        std::cerr << "usage: region_oracle <network.json|builtin> lo1 hi1 [lo2 hi2 ...]\n";
        return 64;
    }
    try {
        const std::string source = argv[1];
        const auto builtin = ncbf::builtin_network(source);
        const ncbf::ReluNetwork net = builtin ? *builtin : ncbf::load_network_file(source);
        const int n = (argc - 2) / 2;
        ncbf::Vector lo(n);
        ncbf::Vector hi(n);
        for (int k = 0; k < n; ++k) {
            lo[k] = std::stod(argv[2 + 2 * k]);
            hi[k] = std::stod(argv[3 + 2 * k]);
        }
        const auto census = ncbf::oracle::region_walk(net, ncbf::HyperCube(lo, hi));
        std::cout << "regions " << census.regions.size() << "\n";
        std::cout << "boundary_patterns " << census.boundary.size() << "\n";
        for (const auto& p : census.boundary) {
            std::cout << p.to_string() << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "region_oracle: " << e.what() << "\n";
        return 65;
    }
}
