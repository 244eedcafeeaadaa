// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the tofsim authors
//
// tofsim command line: scene generation and depth reconstruction.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tof/tof.hpp"

namespace {

constexpr int exit_config_error = 2;
constexpr int exit_io_error = 3;
constexpr int exit_numerical_error = 4;

int run(int argc, char** argv) {
    CLI::App app{"tofsim: time-of-flight camera simulation and depth reconstruction"};
    app.require_subcommand(1);

    std::string gen_config, gen_out;
    std::optional<std::uint64_t> gen_seed;
    int gen_threads = 0;
    CLI::App* gen = app.add_subcommand("generate", "simulate raw frames from a scene config");
    gen->add_option("--config", gen_config, "run config JSON")->required();
    gen->add_option("--out", gen_out, "output directory (overrides the config)");
    gen->add_option("--seed", gen_seed, "base RNG seed (overrides the config)");
    gen->add_option("--threads", gen_threads, "worker threads (0 = hardware)");

    std::string rec_config, rec_out;
    int rec_threads = 0;
    CLI::App* rec = app.add_subcommand("reconstruct-eval",
                                       "reconstruct depth from raw frames and evaluate");
    rec->add_option("--config", rec_config, "run config JSON")->required();
    rec->add_option("--out", rec_out, "output directory (overrides the config)");
    rec->add_option("--threads", rec_threads, "worker threads (0 = hardware)");

    std::string info_file;
    CLI::App* info = app.add_subcommand("info", "describe a TOFT tensor file");
    info->add_option("--file", info_file, "TOFT file")->required();

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        tof::set_thread_count(gen_threads);
        tof::CommandResult res = tof::cmd_generate(gen_config, gen_out, gen_seed);
        for (const std::string& f : res.outputs)
            std::cout << res.out_dir << "/" << f << "\n";
        return 0;
    }
    if (rec->parsed()) {
        tof::set_thread_count(rec_threads);
        tof::CommandResult res = tof::cmd_reconstruct_eval(rec_config, rec_out);
        for (const std::string& f : res.outputs)
            std::cout << res.out_dir << "/" << f << "\n";
        return 0;
    }

    tof::TensorFile t = tof::read_tensor(info_file);
    std::cout << "kind: " << static_cast<int>(t.kind) << "\n";
    std::cout << "dims:";
    for (std::uint32_t d : t.dims) std::cout << " " << d;
    std::cout << "\n";
    if (!t.ext.is_null()) std::cout << "ext: " << t.ext.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const tof::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const tof::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io_error;
    } catch (const tof::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numerical_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical_error;
    }
}
