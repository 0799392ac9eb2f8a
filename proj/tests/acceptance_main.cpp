// Runs the acceptance criteria and prints one PASS/FAIL line each.
// Usage: coms_acceptance [id,id,...]
#include <algorithm>
#include <iostream>
#include <sstream>
#include <string>

#include "coms/acceptance.hpp"

int main(int argc, char** argv) {
  coms::acceptance::Options options;
  if (argc > 1) {
    std::stringstream ss(argv[1]);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) options.only.insert(std::stoi(item));
    }
  }
  options.out = &std::cout;
  const auto results = coms::acceptance::run(options);
  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  std::cout << passed << "/" << results.size() << " criteria passed\n";
  return passed == static_cast<long>(results.size()) ? 0 : 1;
}
