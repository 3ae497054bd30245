// bperc: manifest-driven runner for the percolation laboratory.

#include <cstdint>
#include <iostream>
#include <string>

#include <boost/program_options.hpp>

#include "manifest.hpp"
#include "runner.hpp"

namespace po = boost::program_options;

int main(int argc, char** argv) {
  po::options_description desc("Usage: bperc --manifest PATH [--seed U64] [--workers INT] [--out DIR]");
  desc.add_options()("help,h", "show this message")("manifest", po::value<std::string>(), "experiment manifest")(
      "seed", po::value<std::uint64_t>(), "override the manifest seed")(
      "workers", po::value<unsigned>(), "worker threads (results do not depend on it)")(
      "out", po::value<std::string>(), "output directory");
  try {
    po::variables_map vm;
    po::store(po::parse_command_line(argc, argv, desc), vm);
    po::notify(vm);
    if (vm.count("help")) {
      std::cout << desc;
      return 0;
    }
    if (!vm.count("manifest")) throw bperc::cli::UsageError("--manifest is required");
    bperc::cli::Overrides ov;
    if (vm.count("seed")) ov.seed = vm["seed"].as<std::uint64_t>();
    if (vm.count("workers")) ov.workers = vm["workers"].as<unsigned>();
    if (vm.count("out")) ov.out = vm["out"].as<std::string>();
    const auto m = bperc::cli::load_manifest(vm["manifest"].as<std::string>(), ov);
    return bperc::cli::run(m, std::cerr);
  } catch (const po::error& e) {
    std::cerr << "usage error: " << e.what() << "\n" << desc;
    return bperc::cli::kExitUsage;
  } catch (const bperc::cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return bperc::cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 70;
  }
}
