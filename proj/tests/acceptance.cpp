// Acceptance suite runner: one pass/fail line per criterion, nonzero exit on
// any failure. The same criteria back the `ovfree verify` subcommand.

#include <cstdio>

#include "ovfree/verify.hpp"

int main() {
    const std::uint64_t seed = 20260808;
    std::printf("acceptance suite, seed %llu\n", static_cast<unsigned long long>(seed));
    std::vector<ovfree::CriterionResult> results = ovfree::run_acceptance(seed);
    bool all_pass = true;
    for (const ovfree::CriterionResult& r : results) {
        std::printf("%s  [%2d] %-38s value=%-12.3e threshold=%-9.0e (%.1fs)  %s\n",
                    r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.value, r.threshold,
                    r.seconds, r.detail.c_str());
        all_pass = all_pass && r.pass;
    }
    std::printf("%s\n", all_pass ? "ALL CRITERIA PASS" : "CRITERIA FAILED");
    return all_pass ? 0 : 1;
}
