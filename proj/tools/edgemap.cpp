#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <iostream>
#include <stop_token>
#include <thread>

#include "edgemap/cli/cli.hpp"

int main(int argc, char** argv) {
    // SIGINT/SIGTERM are taken by a waiter thread and turned into a stop
    // request, so probes and sleeps wind down instead of dying mid-write.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    std::stop_source stop;
    std::atomic<bool> done{false};
    std::thread waiter([&] {
        timespec tick{0, 200'000'000};
        while (!done.load()) {
            if (sigtimedwait(&set, nullptr, &tick) > 0) stop.request_stop();
        }
    });

    std::vector<std::string> args(argv, argv + argc);
    int rc = edgemap::cli::run(args, std::cout, std::cerr, stop.get_token());
    done.store(true);
    waiter.join();
    return rc;
}
