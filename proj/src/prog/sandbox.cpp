#include "drylab/prog/sandbox.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstring>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "drylab/errors.hpp"
#include "drylab/util/json_io.hpp"

namespace drylab::prog {

using nlohmann::json;

SandboxWait SandboxRuntime::run(const SandboxSpec& spec, std::string* stdout_text,
                                std::string* stderr_text) {
  std::string id = create(spec);
  SandboxWait result;
  try {
    start(id);
    result = wait(id);
    auto [out, err] = logs(id);
    if (stdout_text) *stdout_text = out;
    if (stderr_text) *stderr_text = err;
  } catch (...) {
    remove(id);
    throw;
  }
  remove(id);
  return result;
}

// ---------------------------------------------------------------------------
// ProcessSandbox
// ---------------------------------------------------------------------------

struct ProcessSandbox::Job {
  SandboxSpec spec;
  pid_t pid = -1;
  std::chrono::steady_clock::time_point started;
  bool finished = false;
  SandboxWait result;
};

std::string ProcessSandbox::create(const SandboxSpec& spec) {
  if (spec.argv.empty()) throw ValidationError("sandbox command must not be empty");
  std::lock_guard<std::mutex> lock(mutex_);
  std::string id = "p" + std::to_string(next_id_++);
  auto job = std::make_shared<Job>();
  job->spec = spec;
  jobs_[id] = std::move(job);
  return id;
}

namespace {

std::shared_ptr<void> open_or_throw(const std::filesystem::path& path, int& fd) {
  fd = ::open(path.c_str(), O_CREAT | O_TRUNC | O_WRONLY, 0644);
  if (fd < 0)
    throw InfrastructureError("cannot open capture file " + path.string() + ": " +
                              std::strerror(errno));
  return std::shared_ptr<void>(nullptr, [fd](void*) { ::close(fd); });
}

}  // namespace

void ProcessSandbox::start(const std::string& id) {
  std::shared_ptr<Job> job;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw InfrastructureError("unknown sandbox id " + id);
    job = it->second;
  }
  const SandboxSpec& spec = job->spec;

  std::error_code ec;
  std::filesystem::create_directories(spec.workdir, ec);
  if (spec.stdout_file.has_parent_path())
    std::filesystem::create_directories(spec.stdout_file.parent_path(), ec);

  // Capture files are opened by the parent: the child may run as an
  // unprivileged uid that could not create them.
  int out_fd = -1, err_fd = -1;
  auto out_guard = open_or_throw(spec.stdout_file, out_fd);
  auto err_guard = open_or_throw(spec.stderr_file, err_fd);

  std::optional<int> drop_uid = spec.run_as_uid;
  if (!drop_uid && ::geteuid() == 0) drop_uid = 65534;  // nobody
  if (drop_uid && ::geteuid() == 0) {
    // The workload writes into its working directory under the dropped uid.
    ::chmod(spec.workdir.c_str(), 0777);
  }

  std::vector<char*> argv;
  for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  pid_t pid = ::fork();
  if (pid < 0) throw InfrastructureError(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);  // own process group, so the whole tree can be killed
    ::dup2(out_fd, STDOUT_FILENO);
    ::dup2(err_fd, STDERR_FILENO);
    if (spec.memory_mb > 0) {
      struct rlimit lim;
      lim.rlim_cur = lim.rlim_max = static_cast<rlim_t>(spec.memory_mb) * 1024 * 1024;
      ::setrlimit(RLIMIT_AS, &lim);
    }
    if (::chdir(spec.workdir.c_str()) != 0) _exit(127);
    if (drop_uid && ::geteuid() == 0) {
      if (::setgid(static_cast<gid_t>(*drop_uid)) != 0 ||
          ::setuid(static_cast<uid_t>(*drop_uid)) != 0)
        _exit(126);
    }
    ::execvp(argv[0], argv.data());
    _exit(127);
  }

  job->pid = pid;
  job->started = std::chrono::steady_clock::now();
}

SandboxWait ProcessSandbox::wait(const std::string& id) {
  std::shared_ptr<Job> job;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw InfrastructureError("unknown sandbox id " + id);
    job = it->second;
  }
  if (job->finished) return job->result;
  if (job->pid < 0) throw InfrastructureError("sandbox " + id + " was never started");

  using clock = std::chrono::steady_clock;
  const bool bounded = job->spec.timeout.count() > 0;
  const auto deadline = job->started + job->spec.timeout;

  int status = 0;
  bool timed_out = false;
  for (;;) {
    pid_t r = ::waitpid(job->pid, &status, WNOHANG);
    if (r == job->pid) break;
    if (r < 0) throw InfrastructureError(std::string("waitpid failed: ") + std::strerror(errno));
    if (bounded && clock::now() >= deadline) {
      ::kill(-job->pid, SIGKILL);  // whole process group
      ::kill(job->pid, SIGKILL);
      ::waitpid(job->pid, &status, 0);
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }

  SandboxWait result;
  result.timed_out = timed_out;
  result.duration_seconds =
      std::chrono::duration<double>(clock::now() - job->started).count();
  if (timed_out)
    result.exit_status = 124;
  else if (WIFEXITED(status))
    result.exit_status = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    result.exit_status = 128 + WTERMSIG(status);
  else
    result.exit_status = -1;

  job->finished = true;
  job->result = result;
  return result;
}

std::pair<std::string, std::string> ProcessSandbox::logs(const std::string& id) {
  std::shared_ptr<Job> job;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw InfrastructureError("unknown sandbox id " + id);
    job = it->second;
  }
  auto read_file = [](const std::filesystem::path& p) -> std::string {
    if (!std::filesystem::exists(p)) return "";
    return util::read_text_file(p);
  };
  return {read_file(job->spec.stdout_file), read_file(job->spec.stderr_file)};
}

void ProcessSandbox::remove(const std::string& id) {
  std::lock_guard<std::mutex> lock(mutex_);
  jobs_.erase(id);
}

// ---------------------------------------------------------------------------
// DockerSandbox
// ---------------------------------------------------------------------------

struct DockerSandbox::Impl {
  std::string endpoint;
  std::string image;
  std::map<std::string, SandboxSpec> specs;
  std::mutex mutex;
  std::string image_digest;
  bool digest_checked = false;

  std::unique_ptr<httplib::Client> make_client() const {
    std::unique_ptr<httplib::Client> client;
    if (endpoint.rfind("unix://", 0) == 0) {
      client = std::make_unique<httplib::Client>(endpoint.substr(7), 80);
      client->set_address_family(AF_UNIX);
      client->set_default_headers({{"Host", "localhost"}});
    } else {
      client = std::make_unique<httplib::Client>(endpoint);
    }
    client->set_connection_timeout(10, 0);
    client->set_read_timeout(120, 0);
    return client;
  }

  json request(const std::string& method, const std::string& path, const json& body,
               int expect_status, bool parse_body = true) {
    auto client = make_client();
    httplib::Result res;
    if (method == "POST")
      res = client->Post(path, body.is_null() ? "" : body.dump(), "application/json");
    else if (method == "GET")
      res = client->Get(path);
    else
      res = client->Delete(path);
    if (!res)
      throw InfrastructureError("container runtime unreachable at " + endpoint + ": " +
                                httplib::to_string(res.error()));
    if (res->status != expect_status && !(method == "DELETE" && res->status == 404))
      throw InfrastructureError("container runtime returned HTTP " +
                                std::to_string(res->status) + " for " + path + ": " +
                                res->body);
    if (!parse_body || res->body.empty()) return json::object();
    json payload = json::parse(res->body, nullptr, false);
    return payload.is_discarded() ? json::object() : payload;
  }

  std::string raw_get(const std::string& path) {
    auto client = make_client();
    auto res = client->Get(path);
    if (!res)
      throw InfrastructureError("container runtime unreachable at " + endpoint + ": " +
                                httplib::to_string(res.error()));
    if (res->status != 200)
      throw InfrastructureError("container runtime returned HTTP " +
                                std::to_string(res->status) + " for " + path);
    return res->body;
  }
};

DockerSandbox::DockerSandbox(std::string endpoint, std::string image)
    : impl_(std::make_unique<Impl>()) {
  impl_->endpoint = std::move(endpoint);
  impl_->image = std::move(image);
}

DockerSandbox::~DockerSandbox() = default;

std::string DockerSandbox::describe() const {
  // Resolve the image digest once for telemetry; fall back to the bare
  // image reference when the daemon is unreachable.
  if (!impl_->digest_checked) {
    impl_->digest_checked = true;
    try {
      json info = impl_->request("GET", "/images/" + impl_->image + "/json", json(), 200);
      impl_->image_digest = info.value("Id", "");
    } catch (const InfrastructureError&) {
    }
  }
  if (!impl_->image_digest.empty())
    return "docker:" + impl_->image + "@" + impl_->image_digest;
  return "docker:" + impl_->image;
}

std::string DockerSandbox::create(const SandboxSpec& spec) {
  if (spec.argv.empty()) throw ValidationError("sandbox command must not be empty");

  std::string mount = spec.mount_root.empty() ? spec.workdir.string()
                                              : spec.mount_root.string();
  json body = {
      {"Image", impl_->image},
      {"Cmd", spec.argv},
      {"WorkingDir", spec.workdir.string()},
      {"HostConfig",
       {{"Binds", json::array({mount + ":" + mount + ":rw"})},
        {"NetworkMode", spec.network ? "bridge" : "none"}}}};
  if (spec.memory_mb > 0)
    body["HostConfig"]["Memory"] = spec.memory_mb * 1024 * 1024;

  json res = impl_->request("POST", "/containers/create", body, 201);
  std::string id = res.value("Id", "");
  if (id.empty()) throw InfrastructureError("container create returned no id");
  {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    impl_->specs[id] = spec;
  }
  return id;
}

void DockerSandbox::start(const std::string& id) {
  impl_->request("POST", "/containers/" + id + "/start", json(), 204, false);
}

SandboxWait DockerSandbox::wait(const std::string& id) {
  SandboxSpec spec;
  {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    spec = impl_->specs.at(id);
  }
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const bool bounded = spec.timeout.count() > 0;
  const auto deadline = start + spec.timeout;

  SandboxWait result;
  for (;;) {
    json state = impl_->request("GET", "/containers/" + id + "/json", json(), 200)
                     .value("State", json::object());
    if (!state.value("Running", false)) {
      result.exit_status = state.value("ExitCode", -1);
      break;
    }
    if (bounded && clock::now() >= deadline) {
      impl_->request("POST", "/containers/" + id + "/kill", json(), 204, false);
      result.timed_out = true;
      result.exit_status = 124;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(250));
  }
  result.duration_seconds = std::chrono::duration<double>(clock::now() - start).count();
  return result;
}

std::pair<std::string, std::string> DockerSandbox::demux_log_stream(const std::string& raw) {
  // Frames: 1 byte stream type, 3 bytes zero, 4 bytes big-endian length.
  std::string out, err;
  size_t pos = 0;
  while (pos + 8 <= raw.size()) {
    unsigned char type = static_cast<unsigned char>(raw[pos]);
    uint32_t len = (static_cast<uint32_t>(static_cast<unsigned char>(raw[pos + 4])) << 24) |
                   (static_cast<uint32_t>(static_cast<unsigned char>(raw[pos + 5])) << 16) |
                   (static_cast<uint32_t>(static_cast<unsigned char>(raw[pos + 6])) << 8) |
                   static_cast<uint32_t>(static_cast<unsigned char>(raw[pos + 7]));
    pos += 8;
    size_t take = std::min<size_t>(len, raw.size() - pos);
    if (type == 2)
      err.append(raw, pos, take);
    else
      out.append(raw, pos, take);
    pos += take;
  }
  return {out, err};
}

std::pair<std::string, std::string> DockerSandbox::logs(const std::string& id) {
  std::string raw = impl_->raw_get("/containers/" + id + "/logs?stdout=1&stderr=1");
  return demux_log_stream(raw);
}

void DockerSandbox::remove(const std::string& id) {
  impl_->request("DELETE", "/containers/" + id + "?force=1", json(), 204, false);
  std::lock_guard<std::mutex> lock(impl_->mutex);
  impl_->specs.erase(id);
}

std::unique_ptr<SandboxRuntime> make_sandbox_runtime(const SandboxSettings& settings) {
  if (settings.backend == "process") return std::make_unique<ProcessSandbox>();
  return std::make_unique<DockerSandbox>(settings.docker_endpoint, settings.image);
}

}  // namespace drylab::prog
