// Acceptance gate: every criterion at its stated size and tolerance, one
// PASS/FAIL line each. Exit status 1 if any fails.
#include <cstdio>

#include "qhskew/acceptance.hpp"

int main() {
    using namespace qhskew;
    Context ctx(acceptance_config());
    int failed = 0;
    const auto results = run_acceptance(ctx, [](const Criterion& c) {
        std::printf("%s  criterion %2d  %s: %s\n", c.passed ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    c.detail.c_str());
        std::fflush(stdout);
    });
    for (const auto& c : results) failed += c.passed ? 0 : 1;
    std::printf("%zu/%zu criteria passed\n", results.size() - failed, results.size());
    return failed == 0 ? 0 : 1;
}
