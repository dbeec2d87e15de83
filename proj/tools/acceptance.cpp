// Acceptance suite: one PASS/FAIL line per criterion, exit 3 if any fails.
//
//   hottbandit_accept [--only 1,2,8] [--threads N] [--out DIR]

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include "hottbandit/acceptance.hpp"

int main(int argc, char** argv) {
    hottbandit::AcceptanceOptions opt;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        auto value = [&]() -> std::string {
            if (i + 1 >= argc) {
                std::cerr << arg << " needs a value\n";
                std::exit(2);
            }
            return argv[++i];
        };
        if (arg == "--only") {
            std::stringstream ss(value());
            for (std::string part; std::getline(ss, part, ',');) opt.only.insert(std::stoi(part));
        } else if (arg == "--threads") {
            opt.threads = std::stoi(value());
        } else if (arg == "--out") {
            opt.out_dir = value();
        } else {
            std::cerr << "usage: hottbandit_accept [--only LIST] [--threads N] [--out DIR]\n";
            return 2;
        }
    }
    int failed = 0;
    hottbandit::run_acceptance(opt, [&](const hottbandit::CriterionResult& r) {
        std::cout << hottbandit::format_result(r) << std::endl;
        failed += !r.pass;
    });
    std::cout << (failed ? "FAILED " : "ALL PASSED ") << failed << " failing criteria" << std::endl;
    return failed ? 3 : 0;
}
