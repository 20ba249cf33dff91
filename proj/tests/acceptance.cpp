#include <iostream>

#include "ctpc/verify.hpp"

int main() {
  const int failures = ctpc::verify::run_report(ctpc::verify::acceptance_suite(), std::cout);
  std::cout << (failures == 0 ? "acceptance: all criteria passed" : "acceptance: failures present") << '\n';
  return failures == 0 ? 0 : 1;
}
