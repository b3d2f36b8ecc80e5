#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "drylab/config.hpp"

namespace drylab::prog {

/// One sandboxed execution request. The command runs with `workdir` as its
/// working directory; stdout/stderr are captured to the given files.
struct SandboxSpec {
  std::vector<std::string> argv;
  std::filesystem::path workdir;
  std::filesystem::path mount_root;  // subtree visible inside a container
  std::filesystem::path stdout_file;
  std::filesystem::path stderr_file;
  std::chrono::milliseconds timeout{0};
  long memory_mb = 0;   // 0 = unlimited
  bool network = true;
  std::optional<int> run_as_uid;  // process backend: drop privileges
};

struct SandboxWait {
  int exit_status = 0;
  bool timed_out = false;
  double duration_seconds = 0.0;
};

/// Container-style execution contract: create, start, wait, logs, remove.
/// Implementations must kill the workload at the timeout and report it.
class SandboxRuntime {
 public:
  virtual ~SandboxRuntime() = default;

  virtual std::string create(const SandboxSpec& spec) = 0;
  virtual void start(const std::string& id) = 0;
  virtual SandboxWait wait(const std::string& id) = 0;
  virtual std::pair<std::string, std::string> logs(const std::string& id) = 0;
  virtual void remove(const std::string& id) = 0;

  /// Identifier recorded in telemetry ("process", or the image reference).
  virtual std::string describe() const = 0;

  /// Convenience wrapper running the full lifecycle.
  SandboxWait run(const SandboxSpec& spec, std::string* stdout_text = nullptr,
                  std::string* stderr_text = nullptr);
};

/// Local subprocess backend. When running as root it drops the child to an
/// unprivileged uid (default 65534), so writes outside the workspace are
/// denied by ordinary file permissions; the workload is killed (whole
/// process group) at the timeout. The network flag is not enforceable here.
class ProcessSandbox : public SandboxRuntime {
 public:
  ProcessSandbox() = default;

  std::string create(const SandboxSpec& spec) override;
  void start(const std::string& id) override;
  SandboxWait wait(const std::string& id) override;
  std::pair<std::string, std::string> logs(const std::string& id) override;
  void remove(const std::string& id) override;
  std::string describe() const override { return "process"; }

 private:
  struct Job;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  int next_id_ = 1;
};

/// Docker Engine API backend (HTTP over a unix socket or TCP): containers
/// are created from the configured image with the task tree bind-mounted,
/// optional memory cap and network isolation. Unreachable daemons raise
/// InfrastructureError.
class DockerSandbox : public SandboxRuntime {
 public:
  DockerSandbox(std::string endpoint, std::string image);
  ~DockerSandbox() override;

  std::string create(const SandboxSpec& spec) override;
  void start(const std::string& id) override;
  SandboxWait wait(const std::string& id) override;
  std::pair<std::string, std::string> logs(const std::string& id) override;
  void remove(const std::string& id) override;
  std::string describe() const override;

  /// Split a docker multiplexed log stream into stdout and stderr.
  static std::pair<std::string, std::string> demux_log_stream(const std::string& raw);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Build the runtime selected by the configuration.
std::unique_ptr<SandboxRuntime> make_sandbox_runtime(const SandboxSettings& settings);

}  // namespace drylab::prog
