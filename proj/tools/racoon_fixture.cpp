// Writes a deterministic fixture bundle plus its oracle-computed expected
// report.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "racoon/oracle.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate a fixture bundle"};
    std::uint32_t seed = 7;
    std::size_t n_tables = 10;
    std::string dir;
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--tables", n_tables, "number of tables")->check(CLI::PositiveNumber);
    app.add_option("--dir", dir, "output directory")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        const auto bundle = racoon::fixtures::generate_fixture(seed, n_tables, dir);
        std::cout << "wrote " << bundle.expected_report.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
