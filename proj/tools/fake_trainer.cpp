// Stand-in for a fine-tuning job. Prints deterministic pseudo-scores derived
// from the run key, optionally failing the first attempt of selected keys.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "ptkit/hash.hpp"

namespace {

// Appends `key` to the invocation log and returns how many times it was there before.
int log_invocation(const std::string& path, const std::string& key) {
    const int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND, 0644);
    if (fd < 0) {
        std::perror(path.c_str());
        std::exit(70);
    }
    ::flock(fd, LOCK_EX);
    int seen = 0;
    {
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line)) {
            seen += line == key ? 1 : 0;
        }
    }
    const std::string line = key + "\n";
    if (::write(fd, line.data(), line.size()) != static_cast<ssize_t>(line.size())) {
        std::perror(path.c_str());
        std::exit(70);
    }
    ::fsync(fd);
    ::flock(fd, LOCK_UN);
    ::close(fd);
    return seen;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fake trainer"};
    std::string model, task, lr, dropout, bf16, seed, split_seed, run_key;
    std::string log_path, fail_keys_path;
    double fail_fraction = 0.0;
    int sleep_ms = 0;
    app.add_option("--model", model)->required();
    app.add_option("--task", task)->required();
    app.add_option("--lr", lr)->required();
    app.add_option("--dropout", dropout)->required();
    app.add_option("--bf16", bf16)->required();
    app.add_option("--seed", seed)->required();
    app.add_option("--split-seed", split_seed)->required();
    app.add_option("--run-key", run_key)->required();
    app.add_option("--log", log_path, "Invocation log (one run key per line)");
    app.add_option("--fail-keys", fail_keys_path, "File of run keys whose first attempt fails");
    app.add_option("--fail-fraction", fail_fraction, "Fraction of keys whose first attempt fails");
    app.add_option("--sleep-ms", sleep_ms, "Simulated training time");
    CLI11_PARSE(app, argc, argv);

    const int previous = log_path.empty() ? 0 : log_invocation(log_path, run_key);
    if (sleep_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
    }

    bool fail = fail_fraction > 0.0 && ptkit::unit_interval("fail:" + run_key) < fail_fraction;
    if (!fail_keys_path.empty()) {
        std::ifstream in(fail_keys_path);
        std::string k;
        while (in >> k) {
            fail = fail || k == run_key;
        }
    }
    if (fail && previous == 0) {
        std::cerr << "injected failure for " << run_key << "\n";
        return 3;
    }

    const double dev = 0.5 + 0.45 * ptkit::unit_interval("dev:" + run_key);
    const double test = 0.5 + 0.45 * ptkit::unit_interval("test:" + run_key);
    std::printf("training %s on %s (lr=%s dropout=%s bf16=%s seed=%s)\n", model.c_str(), task.c_str(), lr.c_str(),
                dropout.c_str(), bf16.c_str(), seed.c_str());
    std::printf("dev=%.6f test=%.6f\n", dev, test);
    return 0;
}
