// Copyright 2026 The QLR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qlr/driver.hpp"

namespace {

struct Options {
  std::string config;
  std::string out_dir = "qlr_out";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> shots;
  bool trace = false;
};

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("--config", opt.config, "experiment config file")->required();
  sub->add_option("--seed", opt.seed, "override the master seed");
  sub->add_option("--shots", opt.shots, "override shots per coefficient");
  sub->add_option("--out-dir", opt.out_dir, "artifact directory");
  sub->add_flag("--trace", opt.trace, "write per-shot trace.csv");
}

int run(qlr::Mode mode, const Options& opt) {
  qlr::ExperimentConfig cfg = qlr::ExperimentConfig::load(opt.config);
  cfg.mode = mode;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.shots) cfg.shots = *opt.shots;
  if (opt.trace) cfg.trace = true;
  cfg.validate();

  int code = 0;
  std::string report;
  if (mode == qlr::Mode::GroundState) {
    const auto r = qlr::run_groundstate(cfg, opt.out_dir);
    code = r.exit_code;
    report = r.report.render();
  } else {
    const auto r = qlr::run_greens(cfg, opt.out_dir);
    code = r.exit_code;
    report = r.report.render();
  }
  std::cout << report << "status = " << (code == 0 ? "pass" : "fail") << " (exit " << code
            << ")\nartifacts in " << opt.out_dir << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lanczos recursion with state-preserving quantum counting"};
  app.require_subcommand(1);
  Options opt;
  auto* greens = app.add_subcommand("greens", "counted Green's function");
  auto* ground = app.add_subcommand("groundstate", "ground state along a lambda schedule");
  auto* oracle = app.add_subcommand("oracle", "Green's function from exact coefficients");
  for (auto* sub : {greens, ground, oracle}) add_common(sub, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  qlr::Mode mode = qlr::Mode::Greens;
  if (ground->parsed()) mode = qlr::Mode::GroundState;
  if (oracle->parsed()) mode = qlr::Mode::Oracle;
  try {
    return run(mode, opt);
  } catch (const qlr::InvalidArgument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const qlr::Unsupported& e) {
    std::cerr << "unsupported: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
