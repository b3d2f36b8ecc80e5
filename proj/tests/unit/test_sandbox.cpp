#include <doctest.h>

#include <unistd.h>

#include <fstream>
#include <thread>

#include <httplib.h>

#include "drylab/errors.hpp"
#include "drylab/prog/sandbox.hpp"
#include "drylab/util/json_io.hpp"

using namespace drylab;
using namespace drylab::prog;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("drylab_sbx_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

SandboxSpec sh_spec(const std::filesystem::path& dir, const std::string& script,
                    int timeout_ms = 30000) {
  auto code = dir / "code";
  util::write_text_file(code, script);
  SandboxSpec spec;
  spec.argv = {"/bin/sh", code.string()};
  spec.workdir = dir / "work";
  std::filesystem::create_directories(spec.workdir);
  spec.stdout_file = dir / "stdout";
  spec.stderr_file = dir / "stderr";
  spec.timeout = std::chrono::milliseconds(timeout_ms);
  return spec;
}

}  // namespace

TEST_CASE("process sandbox captures stdout and exit status") {
  auto dir = fresh_dir("ok");
  ProcessSandbox runtime;
  std::string out, err;
  auto result = runtime.run(sh_spec(dir, "echo ok\n"), &out, &err);
  CHECK(result.exit_status == 0);
  CHECK_FALSE(result.timed_out);
  CHECK(out == "ok\n");
  CHECK(err.empty());
}

TEST_CASE("process sandbox reports failures with stderr") {
  auto dir = fresh_dir("fail");
  ProcessSandbox runtime;
  std::string out, err;
  auto result = runtime.run(sh_spec(dir, "echo boom >&2\nexit 3\n"), &out, &err);
  CHECK(result.exit_status == 3);
  CHECK(err == "boom\n");
}

TEST_CASE("an infinite loop is killed at the timeout") {
  auto dir = fresh_dir("spin");
  ProcessSandbox runtime;
  std::string out, err;
  auto t0 = std::chrono::steady_clock::now();
  auto result =
      runtime.run(sh_spec(dir, "while true; do :; done\n", 5000), &out, &err);
  auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(result.timed_out);
  CHECK(result.exit_status == 124);
  CHECK(result.duration_seconds >= 4.5);
  CHECK(elapsed < 20.0);
}

TEST_CASE("writes outside the workspace are denied under the dropped uid") {
  if (::geteuid() != 0) {
    MESSAGE("not running as root; uid-drop isolation not exercised");
    return;
  }
  auto dir = fresh_dir("iso");
  auto external = fresh_dir("iso_external");
  util::write_text_file(external / "precious.txt", "original contents\n");
  std::filesystem::permissions(external, std::filesystem::perms::owner_all |
                                             std::filesystem::perms::group_read |
                                             std::filesystem::perms::others_read);

  ProcessSandbox runtime;
  std::string out, err;
  std::string script = "echo hacked > " + (external / "precious.txt").string() +
                       " || echo denied\necho hacked > " +
                       (external / "new_file.txt").string() + " || echo denied\necho in-workspace > local.txt\n";
  auto result = runtime.run(sh_spec(dir, script), &out, &err);

  CHECK(result.exit_status == 0);
  CHECK(util::read_text_file(external / "precious.txt") == "original contents\n");
  CHECK_FALSE(std::filesystem::exists(external / "new_file.txt"));
  // The workspace itself stays writable for the workload.
  CHECK(std::filesystem::exists(dir / "work" / "local.txt"));
  CHECK(out.find("denied") != std::string::npos);
}

TEST_CASE("sandbox lifecycle bookkeeping") {
  ProcessSandbox runtime;
  CHECK_THROWS_AS(runtime.start("nope"), InfrastructureError);
  CHECK_THROWS_AS(runtime.wait("nope"), InfrastructureError);
  SandboxSpec empty;
  CHECK_THROWS_AS(runtime.create(empty), ValidationError);
}

// ---------------------------------------------------------------------------
// Docker Engine API client against a canned protocol stub
// ---------------------------------------------------------------------------

namespace {

/// Minimal fake of the Docker Engine HTTP API: one container lifecycle.
class FakeDockerDaemon {
 public:
  FakeDockerDaemon() {
    server_.Post("/containers/create",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   create_body = nlohmann::json::parse(req.body);
                   res.status = 201;
                   res.set_content(R"({"Id": "cafe1234"})", "application/json");
                 });
    server_.Post("/containers/cafe1234/start",
                 [this](const httplib::Request&, httplib::Response& res) {
                   started = true;
                   res.status = 204;
                 });
    server_.Get("/containers/cafe1234/json",
                [this](const httplib::Request&, httplib::Response& res) {
                  nlohmann::json state = {
                      {"State", {{"Running", polls_left-- > 0}, {"ExitCode", 7}}}};
                  res.set_content(state.dump(), "application/json");
                });
    server_.Get("/containers/cafe1234/logs",
                [](const httplib::Request&, httplib::Response& res) {
                  std::string frame;
                  auto add = [&](unsigned char type, const std::string& payload) {
                    frame += static_cast<char>(type);
                    frame += std::string(3, '\0');
                    uint32_t n = static_cast<uint32_t>(payload.size());
                    frame += static_cast<char>((n >> 24) & 0xff);
                    frame += static_cast<char>((n >> 16) & 0xff);
                    frame += static_cast<char>((n >> 8) & 0xff);
                    frame += static_cast<char>(n & 0xff);
                    frame += payload;
                  };
                  add(1, "hello out\n");
                  add(2, "hello err\n");
                  res.set_content(frame, "application/octet-stream");
                });
    server_.Delete("/containers/cafe1234",
                   [this](const httplib::Request&, httplib::Response& res) {
                     removed = true;
                     res.status = 204;
                   });
    server_.Get("/images/r-base:4.3.2/json",
                [](const httplib::Request&, httplib::Response& res) {
                  res.set_content(R"({"Id": "sha256:feedface"})", "application/json");
                });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeDockerDaemon() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  nlohmann::json create_body;
  bool started = false;
  bool removed = false;
  int polls_left = 1;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST_CASE("docker client speaks the create/start/wait/logs/remove contract") {
  FakeDockerDaemon daemon;
  DockerSandbox runtime(daemon.endpoint(), "r-base:4.3.2");

  SandboxSpec spec;
  spec.argv = {"Rscript", "../code"};
  spec.workdir = "/work/1/rev1/outputs";
  spec.mount_root = "/work";
  spec.timeout = std::chrono::seconds(30);
  spec.memory_mb = 512;
  spec.network = false;

  std::string id = runtime.create(spec);
  CHECK(id == "cafe1234");
  CHECK(daemon.create_body["Image"] == "r-base:4.3.2");
  CHECK(daemon.create_body["Cmd"][1] == "../code");
  CHECK(daemon.create_body["WorkingDir"] == "/work/1/rev1/outputs");
  CHECK(daemon.create_body["HostConfig"]["NetworkMode"] == "none");
  CHECK(daemon.create_body["HostConfig"]["Memory"] == 512 * 1024 * 1024);
  std::string bind = daemon.create_body["HostConfig"]["Binds"][0];
  CHECK(bind == "/work:/work:rw");

  runtime.start(id);
  CHECK(daemon.started);

  auto waited = runtime.wait(id);
  CHECK(waited.exit_status == 7);
  CHECK_FALSE(waited.timed_out);

  auto [out, err] = runtime.logs(id);
  CHECK(out == "hello out\n");
  CHECK(err == "hello err\n");

  runtime.remove(id);
  CHECK(daemon.removed);

  // Telemetry identity resolves the image digest through the daemon.
  CHECK(runtime.describe() == "docker:r-base:4.3.2@sha256:feedface");
}

TEST_CASE("unreachable container runtime raises an infrastructure error") {
  DockerSandbox runtime("http://127.0.0.1:1", "r-base:4.3.2");
  SandboxSpec spec;
  spec.argv = {"true"};
  spec.workdir = "/w";
  CHECK_THROWS_AS(runtime.create(spec), InfrastructureError);
}

TEST_CASE("log stream demultiplexing handles split and unknown frames") {
  std::string raw;
  auto add = [&](unsigned char type, const std::string& payload) {
    raw += static_cast<char>(type);
    raw += std::string(3, '\0');
    uint32_t n = static_cast<uint32_t>(payload.size());
    raw += static_cast<char>((n >> 24) & 0xff);
    raw += static_cast<char>((n >> 16) & 0xff);
    raw += static_cast<char>((n >> 8) & 0xff);
    raw += static_cast<char>(n & 0xff);
    raw += payload;
  };
  add(1, "a");
  add(2, "b");
  add(1, "c");
  auto [out, err] = DockerSandbox::demux_log_stream(raw);
  CHECK(out == "ac");
  CHECK(err == "b");
  CHECK(DockerSandbox::demux_log_stream("").first.empty());
}

TEST_CASE("make_sandbox_runtime follows the configuration") {
  SandboxSettings process_settings;
  process_settings.backend = "process";
  CHECK(make_sandbox_runtime(process_settings)->describe() == "process");
  SandboxSettings docker_settings;
  docker_settings.backend = "docker";
  docker_settings.image = "img:1";
  CHECK(make_sandbox_runtime(docker_settings)->describe() == "docker:img:1");
}
