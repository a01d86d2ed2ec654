#include "tdvim/svs.hpp"

#include "tdvim/error.hpp"
#include "detail/csv.hpp"

#include <json.hpp>

#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <semaphore>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace tdvim {

namespace {

double mean_square(const AudioSignal& s) {
    double acc = 0.0;
    for (const float v : s.samples()) {
        acc += static_cast<double>(v) * v;
    }
    return s.empty() ? 0.0 : acc / static_cast<double>(s.size());
}

struct ProcessOutput {
    bool timed_out = false;
    bool spawn_failed = false;
    int exit_code = -1;
    std::string out;
    std::string err;
};

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    ~Fd() { reset(); }
    int get() const { return fd_; }
    void reset() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
};

ProcessOutput run_process(const std::vector<std::string>& argv, std::chrono::milliseconds timeout) {
    ProcessOutput result;
    int out_pipe[2];
    int err_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        result.spawn_failed = true;
        result.err = std::strerror(errno);
        return result;
    }
    if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        result.spawn_failed = true;
        result.err = std::strerror(errno);
        return result;
    }
    Fd out_read(out_pipe[0]), out_write(out_pipe[1]);
    Fd err_read(err_pipe[0]), err_write(err_pipe[1]);

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, out_write.get(), STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, err_write.get(), STDERR_FILENO);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);

    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const auto& a : argv) {
        args.push_back(const_cast<char*>(a.c_str()));
    }
    args.push_back(nullptr);

    pid_t pid = 0;
    const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    out_write.reset();
    err_write.reset();
    if (rc != 0) {
        result.spawn_failed = true;
        result.err = std::string("cannot spawn ") + argv[0] + ": " + std::strerror(rc);
        return result;
    }

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    pollfd fds[2] = {{out_read.get(), POLLIN, 0}, {err_read.get(), POLLIN, 0}};
    int open_fds = 2;
    char buf[4096];
    while (open_fds > 0) {
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            result.timed_out = true;
            break;
        }
        const int ready = ::poll(fds, 2, static_cast<int>(remaining.count()));
        if (ready < 0) {
            if (errno == EINTR) {
                continue;
            }
            break;
        }
        for (int i = 0; i < 2; ++i) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) {
                continue;
            }
            const ssize_t n = ::read(fds[i].fd, buf, sizeof buf);
            if (n > 0) {
                (i == 0 ? result.out : result.err).append(buf, static_cast<std::size_t>(n));
            } else if (n == 0 || errno != EINTR) {
                fds[i].fd = -1;
                --open_fds;
            }
        }
    }

    int status = 0;
    // Output closed does not mean the child has exited.
    while (!result.timed_out) {
        const pid_t done = ::waitpid(pid, &status, WNOHANG);
        if (done == pid || (done < 0 && errno != EINTR)) {
            result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
            return result;
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            result.timed_out = true;
            break;
        }
        ::usleep(2000);
    }
    ::kill(pid, SIGKILL);
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    return result;
}

class ReferenceBackend final : public VerifierBackend {
public:
    explicit ReferenceBackend(VerifierDescriptor d) : VerifierBackend(std::move(d)) {}

    AcquireResult embed(const AudioSignal& signal, const std::filesystem::path&) const override {
        const auto& cfg = descriptor().reference;
        if (signal.empty() || mean_square(signal) < cfg.energy_floor) {
            return AcquireFailure{"below energy floor"};
        }
        try {
            return reference_embed(signal, cfg);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::TooShort) {
                return AcquireFailure{"too short"};
            }
            throw;
        }
    }
};

class PrecomputedBackend final : public VerifierBackend {
public:
    explicit PrecomputedBackend(VerifierDescriptor d) : VerifierBackend(std::move(d)) {}

    AcquireResult embed(const AudioSignal&, const std::filesystem::path& source) const override {
        if (source.empty()) {
            return AcquireFailure{"precomputed backend needs a source file"};
        }
        const auto file = descriptor().precomputed_dir / (source.stem().string() + ".json");
        std::error_code ec;
        if (!std::filesystem::is_regular_file(file, ec)) {
            return AcquireFailure{"no precomputed embedding at " + file.string()};
        }
        try {
            return parse_embedding_json(detail::read_text_file(file.string()));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::DimensionMismatch) {
                return AcquireFailure{"dim mismatch"};
            }
            return AcquireFailure{e.what()};
        }
    }
};

class SubprocessBackend final : public VerifierBackend {
public:
    explicit SubprocessBackend(VerifierDescriptor d)
        : VerifierBackend(std::move(d)), slots_(std::max(1, descriptor().max_concurrency)) {
        // Validate the template once up front so misconfiguration is loud.
        expand_command_template(descriptor().command, "probe.wav");
    }

    AcquireResult embed(const AudioSignal& signal, const std::filesystem::path& source) const override {
        std::filesystem::path wav = source;
        std::filesystem::path temp;
        if (wav.empty()) {
            static std::atomic<unsigned long> counter{0};
            temp = std::filesystem::temp_directory_path() /
                   ("tdvim_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".wav");
            try {
                write_wav(signal, temp);
            } catch (const Error& e) {
                return AcquireFailure{e.what()};
            }
            wav = temp;
        }
        AcquireResult result = AcquireFailure{};
        {
            slots_.acquire();
            struct Release {
                std::counting_semaphore<>& s;
                ~Release() { s.release(); }
            } release{slots_};
            result = external_embed(descriptor().command, wav, descriptor().timeout);
        }
        if (!temp.empty()) {
            std::error_code ec;
            std::filesystem::remove(temp, ec);
        }
        return result;
    }

private:
    mutable std::counting_semaphore<> slots_;
};

}  // namespace

std::string_view to_string(BackendKind k) noexcept {
    switch (k) {
        case BackendKind::Reference: return "reference";
        case BackendKind::Precomputed: return "precomputed";
        case BackendKind::Subprocess: return "subprocess";
    }
    return "reference";
}

Embedding parse_embedding_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("id") || !doc.contains("dim") || !doc.contains("values") ||
        !doc["id"].is_string() || !doc["dim"].is_number_integer() || !doc["values"].is_array()) {
        throw Error(ErrorKind::ParseError, "embedding document needs string id, integer dim, array values");
    }
    Embedding e;
    e.id = doc["id"].get<std::string>();
    const auto dim = doc["dim"].get<long long>();
    for (const auto& v : doc["values"]) {
        if (!v.is_number()) {
            throw Error(ErrorKind::ParseError, "embedding values must be numbers");
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            throw Error(ErrorKind::ParseError, "embedding values must be finite");
        }
        e.values.push_back(x);
    }
    if (dim <= 0) {
        throw Error(ErrorKind::ParseError, "embedding dim must be positive");
    }
    if (static_cast<std::size_t>(dim) != e.values.size()) {
        throw Error(ErrorKind::DimensionMismatch, "dim mismatch: declared " + std::to_string(dim) + ", got " +
                                                      std::to_string(e.values.size()) + " values");
    }
    return e;
}

std::string embedding_to_json(const Embedding& e) {
    nlohmann::json doc;
    doc["id"] = e.id;
    doc["dim"] = e.dim();
    doc["values"] = e.values;
    return doc.dump();
}

std::vector<VerifierDescriptor> parse_backend_config(std::string_view text, const std::filesystem::path& base_dir) {
    std::vector<VerifierDescriptor> out;
    std::size_t line_no = 0;
    for (const auto& raw : detail::split_lines(text)) {
        ++line_no;
        const std::string line = detail::trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const std::string where = "backend config line " + std::to_string(line_no);
        VerifierDescriptor d;
        bool have_kind = false;
        std::size_t pos = 0;
        while (pos < line.size()) {
            std::size_t end = line.find(';', pos);
            std::string item = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
            const auto eq = item.find('=');
            if (eq == std::string::npos) {
                if (detail::trim(item).empty()) {
                    pos = end == std::string::npos ? line.size() : end + 1;
                    continue;
                }
                throw Error(ErrorKind::ConfigError, where + ": expected key=value, got '" + item + "'");
            }
            const std::string key = detail::trim(item.substr(0, eq));
            if (key == "command") {
                d.command = detail::trim(line.substr(pos + item.find('=') + 1));
                break;
            }
            const std::string value = detail::trim(item.substr(eq + 1));
            auto number = [&] {
                try {
                    std::size_t used = 0;
                    const double v = std::stod(value, &used);
                    if (used != value.size()) {
                        throw std::invalid_argument(value);
                    }
                    return v;
                } catch (const std::exception&) {
                    throw Error(ErrorKind::ConfigError, where + ": " + key + " expects a number");
                }
            };
            if (key == "name") {
                d.name = value;
            } else if (key == "kind") {
                have_kind = true;
                if (value == "reference") {
                    d.kind = BackendKind::Reference;
                } else if (value == "precomputed") {
                    d.kind = BackendKind::Precomputed;
                } else if (value == "subprocess") {
                    d.kind = BackendKind::Subprocess;
                } else {
                    throw Error(ErrorKind::ConfigError, where + ": unknown kind '" + value + "'");
                }
            } else if (key == "threshold") {
                d.threshold = number();
            } else if (key == "fmr") {
                d.fmr_target = number();
            } else if (key == "dir") {
                std::filesystem::path p = value;
                d.precomputed_dir = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
            } else if (key == "timeout_s") {
                d.timeout = std::chrono::milliseconds(static_cast<long long>(number() * 1000.0));
            } else if (key == "jobs") {
                d.max_concurrency = static_cast<int>(number());
            } else {
                throw Error(ErrorKind::ConfigError, where + ": unknown key '" + key + "'");
            }
            pos = end == std::string::npos ? line.size() : end + 1;
        }
        if (d.name.empty() || !have_kind) {
            throw Error(ErrorKind::ConfigError, where + ": name and kind are required");
        }
        if (d.threshold && d.fmr_target) {
            throw Error(ErrorKind::ConfigError, where + ": threshold and fmr are mutually exclusive");
        }
        if (d.threshold && (*d.threshold < -1.0 || *d.threshold > 1.0)) {
            throw Error(ErrorKind::ConfigError, where + ": threshold must lie in [-1, 1]");
        }
        if (d.fmr_target && !(*d.fmr_target > 0.0 && *d.fmr_target < 1.0)) {
            throw Error(ErrorKind::ConfigError, where + ": fmr must lie in (0, 1)");
        }
        for (const auto& other : out) {
            if (other.name == d.name) {
                throw Error(ErrorKind::ConfigError, where + ": duplicate backend name '" + d.name + "'");
            }
        }
        out.push_back(std::move(d));
    }
    if (out.empty()) {
        throw Error(ErrorKind::ConfigError, "backend config declares no backends");
    }
    return out;
}

std::vector<VerifierDescriptor> load_backend_config(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw Error(ErrorKind::ConfigError, "backend config not found: " + path.string());
    }
    return parse_backend_config(detail::read_text_file(path.string()), path.parent_path());
}

std::unique_ptr<VerifierBackend> make_backend(const VerifierDescriptor& desc) {
    switch (desc.kind) {
        case BackendKind::Reference:
            return std::make_unique<ReferenceBackend>(desc);
        case BackendKind::Precomputed:
            if (desc.precomputed_dir.empty()) {
                throw Error(ErrorKind::ConfigError, desc.name + ": precomputed backend needs dir=");
            }
            return std::make_unique<PrecomputedBackend>(desc);
        case BackendKind::Subprocess:
            return std::make_unique<SubprocessBackend>(desc);
    }
    throw Error(ErrorKind::ConfigError, "unknown backend kind");
}

Embedding reference_embed(const AudioSignal& signal, const ReferenceConfig& cfg) {
    // Level normalisation so that input gain does not move the cepstra.
    double energy = 0.0;
    for (const float v : signal.samples()) {
        energy += static_cast<double>(v) * v;
    }
    const double rms = signal.empty() ? 0.0 : std::sqrt(energy / static_cast<double>(signal.size()));
    std::vector<float> scaled(signal.samples().begin(), signal.samples().end());
    if (rms > 0.0) {
        const double gain = 0.1 / rms;
        for (auto& v : scaled) {
            v = static_cast<float>(v * gain);
        }
    }
    const auto frames = cepstral_frames(AudioSignal(std::move(scaled), signal.sample_rate()), cfg);
    const auto n_ceps = static_cast<std::size_t>(cfg.n_ceps);
    const auto count = static_cast<double>(frames.size());
    std::vector<double> mean(n_ceps, 0.0);
    for (const auto& f : frames) {
        for (std::size_t k = 0; k < n_ceps; ++k) {
            mean[k] += f[k];
        }
    }
    for (auto& m : mean) {
        m /= count;
    }
    std::vector<double> var(n_ceps, 0.0);
    for (const auto& f : frames) {
        for (std::size_t k = 0; k < n_ceps; ++k) {
            const double d = f[k] - mean[k];
            var[k] += d * d;
        }
    }
    Embedding e;
    e.id = "reference";
    e.values = mean;
    for (const double v : var) {
        e.values.push_back(std::sqrt(v / count));
    }
    return e;
}

std::vector<std::string> expand_command_template(std::string_view command_template, std::string_view wav_path) {
    std::vector<std::string> args;
    std::string current;
    bool in_token = false;
    char quote = 0;
    for (const char c : command_template) {
        if (quote) {
            if (c == quote) {
                quote = 0;
            } else {
                current.push_back(c);
            }
        } else if (c == '\'' || c == '"') {
            quote = c;
            in_token = true;
        } else if (c == ' ' || c == '\t') {
            if (in_token) {
                args.push_back(std::move(current));
                current.clear();
                in_token = false;
            }
        } else {
            current.push_back(c);
            in_token = true;
        }
    }
    if (quote) {
        throw Error(ErrorKind::ConfigError, "unterminated quote in command template");
    }
    if (in_token) {
        args.push_back(std::move(current));
    }
    bool substituted = false;
    for (auto& a : args) {
        for (auto pos = a.find("{wav}"); pos != std::string::npos; pos = a.find("{wav}", pos + wav_path.size())) {
            a.replace(pos, 5, wav_path);
            substituted = true;
        }
    }
    if (args.empty() || !substituted) {
        throw Error(ErrorKind::ConfigError, "command template must contain a {wav} placeholder");
    }
    return args;
}

AcquireResult external_embed(std::string_view command_template, const std::filesystem::path& wav_path,
                             std::chrono::milliseconds timeout) {
    const auto argv = expand_command_template(command_template, wav_path.string());
    const auto proc = run_process(argv, timeout);
    if (proc.timed_out) {
        return AcquireFailure{"timeout"};
    }
    if (proc.spawn_failed) {
        return AcquireFailure{proc.err};
    }
    if (proc.exit_code != 0) {
        return AcquireFailure{"exit " + std::to_string(proc.exit_code) + ": " + detail::trim(proc.err)};
    }
    try {
        return parse_embedding_json(proc.out);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::DimensionMismatch) {
            return AcquireFailure{"dim mismatch"};
        }
        return AcquireFailure{e.what()};
    }
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorKind::DimensionMismatch,
                    std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error(ErrorKind::ZeroVector, "cosine similarity of a zero embedding");
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace tdvim
