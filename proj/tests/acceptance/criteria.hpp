#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace wgeo::acceptance {

namespace fs = std::filesystem;

struct Context {
  fs::path work_dir;
  fs::path config_dir;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  Outcome (*run)(const Context&);
};

const std::vector<Criterion>& all_criteria();

}  // namespace wgeo::acceptance
