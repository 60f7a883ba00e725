// esg-portal: runs one portal deployment described by a profile file.
#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>

#include "esg/common/error.hpp"
#include "esg/portal/http.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ESG portal server"};
  std::string profile_path = std::getenv("ESG_PROFILE") ? std::getenv("ESG_PROFILE") : "";
  std::string host;
  int port = -1;
  app.add_option("--profile", profile_path, "Deployment profile (ESG_PROFILE)");
  app.add_option("--host", host, "Override the listen host");
  app.add_option("--port", port, "Override the listen port (0 picks a free one)");
  CLI11_PARSE(app, argc, argv);
  if (profile_path.empty()) {
    std::cerr << "no profile: pass --profile or set ESG_PROFILE\n";
    return 2;
  }

  // Signals are taken synchronously so shutdown runs on a normal thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  try {
    auto profile = esg::portal::load_profile(profile_path);
    if (!host.empty()) profile.listen_host = host;
    if (port >= 0) profile.listen_port = port;
    esg::portal::Portal portal(profile);
    esg::portal::HttpServer server(portal);
    int bound = server.start(profile.listen_host, profile.listen_port);
    std::cout << "esg-portal " << profile.name << " serving " << profile.served_prefix << " on http://"
              << profile.listen_host << ":" << bound << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    std::cout << "shutting down" << std::endl;
    server.stop();
    portal.stop_workers();
  } catch (const esg::Error& e) {
    std::cerr << "esg-portal: " << esg::to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
