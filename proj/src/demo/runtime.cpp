#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "argtree/demo/demo_domain.hpp"
#include "argtree/errors.hpp"
#include "network_modules.hpp"

namespace argtree::demo {

namespace fs = std::filesystem;

namespace {

std::string fmt_real(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

std::string metrics_text(const std::map<std::string, double>& metrics) {
    std::string out;
    for (const auto& [k, v] : metrics) out += (out.empty() ? "" : " ") + k + "=" + fmt_real(v);
    return out;
}

// ---------------------------------------------------------------------------
// run context
// ---------------------------------------------------------------------------

class RunContext {
public:
    RunContext(const RunOptions& options, std::string save_dir) : options_(options), save_dir_(std::move(save_dir)) {
        if (options_.write_files) {
            fs::create_directories(fs::path(save_dir_) / "checkpoints");
            log_file_.open(fs::path(save_dir_) / "log.txt", std::ios::out | std::ios::trunc);
            if (!log_file_) throw Error("cannot write " + (fs::path(save_dir_) / "log.txt").string());
        }
    }

    void log(const std::string& line) {
        std::string stamped = line;
        if (options_.timestamps) {
            auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
            std::tm tm{};
            localtime_r(&now, &tm);
            std::ostringstream os;
            os << "[" << std::put_time(&tm, "%H:%M:%S") << "] " << line;
            stamped = os.str();
        }
        lines_.push_back(stamped);
        if (log_file_) log_file_ << stamped << "\n" << std::flush;
        if (options_.on_log) options_.on_log(stamped);
    }

    bool write_files() const { return options_.write_files; }
    const std::string& save_dir() const { return save_dir_; }
    std::vector<std::string>& lines() { return lines_; }

    bool stop_requested = false;
    std::map<std::int64_t, std::string> checkpoint_files;
    std::string best_checkpoint;
    std::map<std::string, double> parameters;
    const Task* task = nullptr;

private:
    const RunOptions& options_;
    std::string save_dir_;
    std::ofstream log_file_;
    std::vector<std::string> lines_;
};

std::string overview(const BuildableModule& root) {
    std::ostringstream os;
    os << std::left << std::setw(48) << "path" << std::setw(26) << "module" << std::setw(8) << "kwargs"
       << "submodules\n";
    std::size_t count = 0;
    std::function<void(const BuildableModule&, const std::string&)> walk = [&](const BuildableModule& m,
                                                                                const std::string& path) {
        ++count;
        std::string shape;
        for (const auto& [slot, built] : m.submodules()) {
            if (!built.modules.empty()) shape += (shape.empty() ? "" : " ") + slot + ":" + std::to_string(built.modules.size());
        }
        os << std::setw(48) << path << std::setw(26) << m.type_name() << std::setw(8) << m.kwargs().size()
           << (shape.empty() ? "-" : shape) << "\n";
        for (const auto& [slot, built] : m.submodules()) {
            for (std::size_t i = 0; i < built.modules.size(); ++i)
                walk(*built.modules[i], path + "/" + slot + "#" + std::to_string(i));
        }
    };
    walk(root, "root");
    os << "complete structure: " << count << " modules\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// module interfaces
// ---------------------------------------------------------------------------

class Objective : public BuildableModule {
public:
    Objective(const ModuleDescriptor& d, ModuleArgs args, int power) : BuildableModule(d, std::move(args)), power_(power) {
        if (arg_real("scale") < 0) throw ConstructionError(type_name(), "scale must not be negative");
    }
    double value(double x) const { return arg_real("scale") * std::pow(x - arg_real("target"), power_); }
    double grad(double x) const {
        return arg_real("scale") * power_ * std::pow(x - arg_real("target"), power_ - 1);
    }
    double start() const { return arg_real("start"); }

private:
    int power_;
};

class Scheduler : public BuildableModule {
public:
    using BuildableModule::BuildableModule;
    /// Learning rate factor for the 0-based `epoch` of `total`.
    virtual double factor(std::int64_t epoch, std::int64_t total) const = 0;
};

class CosineScheduler : public Scheduler {
public:
    CosineScheduler(const ModuleDescriptor& d, ModuleArgs args) : Scheduler(d, std::move(args)) {
        if (arg_int("warmup_epochs") < 0) throw ConstructionError(type_name(), "warmup_epochs must not be negative");
    }
    double factor(std::int64_t epoch, std::int64_t total) const override {
        auto warmup = arg_int("warmup_epochs");
        if (epoch < warmup) return static_cast<double>(epoch + 1) / static_cast<double>(warmup + 1);
        double span = static_cast<double>(std::max<std::int64_t>(1, total - warmup));
        double progress = static_cast<double>(epoch - warmup) / span;
        double eta_min = arg_real("eta_min");
        return eta_min + (1.0 - eta_min) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    }
};

class StepScheduler : public Scheduler {
public:
    StepScheduler(const ModuleDescriptor& d, ModuleArgs args) : Scheduler(d, std::move(args)) {
        if (arg_int("step_size") < 1) throw ConstructionError(type_name(), "step_size must be at least 1");
    }
    double factor(std::int64_t epoch, std::int64_t) const override {
        return std::pow(arg_real("gamma"), static_cast<double>(epoch / arg_int("step_size")));
    }
};

class ConstantScheduler : public Scheduler {
public:
    using Scheduler::Scheduler;
    double factor(std::int64_t, std::int64_t) const override { return arg_real("factor"); }
};

class Optimizer : public BuildableModule {
public:
    Optimizer(const ModuleDescriptor& d, ModuleArgs args) : BuildableModule(d, std::move(args)) {
        if (arg_real("lr") < 0) throw ConstructionError(type_name(), "lr must not be negative");
    }
    double lr_for(std::int64_t epoch, std::int64_t total) const {
        const auto* scheduler = dynamic_cast<const Scheduler*>(first("cls_schedulers"));
        return arg_real("lr") * (scheduler ? scheduler->factor(epoch, total) : 1.0);
    }
    virtual void reset() {}
    virtual double step(double x, double grad, double lr) = 0;
};

class SGDOptimizer : public Optimizer {
public:
    using Optimizer::Optimizer;
    void reset() override { velocity_ = 0; }
    double step(double x, double grad, double lr) override {
        velocity_ = arg_real("momentum") * velocity_ + grad;
        return x - lr * velocity_;
    }

private:
    double velocity_ = 0;
};

class AdamOptimizer : public Optimizer {
public:
    using Optimizer::Optimizer;
    void reset() override { m_ = v_ = 0, t_ = 0; }
    double step(double x, double grad, double lr) override {
        const double b1 = arg_real("beta1");
        const double b2 = arg_real("beta2");
        ++t_;
        m_ = b1 * m_ + (1 - b1) * grad;
        v_ = b2 * v_ + (1 - b2) * second_moment(grad);
        double m_hat = m_ / (1 - std::pow(b1, t_));
        double v_hat = v_ / (1 - std::pow(b2, t_));
        return x - lr * m_hat / (std::sqrt(v_hat) + arg_real("eps"));
    }

protected:
    virtual double second_moment(double grad) const { return grad * grad; }
    double m_ = 0;

private:
    double v_ = 0;
    int t_ = 0;
};

class AdaBeliefOptimizer : public AdamOptimizer {
public:
    using AdamOptimizer::AdamOptimizer;

protected:
    double second_moment(double grad) const override {
        double b1 = arg_real("beta1");
        double predicted = b1 * m_ + (1 - b1) * grad;
        return (grad - predicted) * (grad - predicted) + arg_real("eps");
    }
};

class Method : public BuildableModule {
public:
    using BuildableModule::BuildableModule;
    virtual void prepare(const Objective& objective, std::uint64_t) { x_ = objective.start(); }
    /// Runs one epoch and returns the current parameter.
    virtual double train_epoch(std::int64_t epoch, std::int64_t total, const Objective& objective) = 0;
    double x() const { return x_; }

protected:
    double x_ = 0;
};

class GradientDescentMethod : public Method {
public:
    GradientDescentMethod(const ModuleDescriptor& d, ModuleArgs args) : Method(d, std::move(args)) {
        if (arg_int("steps_per_epoch") < 1) throw ConstructionError(type_name(), "steps_per_epoch must be at least 1");
        optimizer_ = dynamic_cast<Optimizer*>(first("cls_optimizers"));
        if (!optimizer_) throw ConstructionError(type_name(), "needs an optimizer");
    }
    void prepare(const Objective& objective, std::uint64_t seed) override {
        Method::prepare(objective, seed);
        optimizer_->reset();
    }
    double train_epoch(std::int64_t epoch, std::int64_t total, const Objective& objective) override {
        double lr = optimizer_->lr_for(epoch, total);
        for (std::int64_t s = 0; s < arg_int("steps_per_epoch"); ++s) x_ = optimizer_->step(x_, objective.grad(x_), lr);
        return x_;
    }

private:
    Optimizer* optimizer_ = nullptr;
};

class UniformRandomMethod : public Method {
public:
    UniformRandomMethod(const ModuleDescriptor& d, ModuleArgs args) : Method(d, std::move(args)) {
        if (arg_int("samples_per_epoch") < 1) throw ConstructionError(type_name(), "samples_per_epoch must be at least 1");
        if (!(arg_real("low") < arg_real("high"))) throw ConstructionError(type_name(), "low must be below high");
    }
    void prepare(const Objective& objective, std::uint64_t seed) override {
        Method::prepare(objective, seed);
        rng_.seed(seed);
    }
    double train_epoch(std::int64_t, std::int64_t, const Objective& objective) override {
        std::uniform_real_distribution<double> dist(arg_real("low"), arg_real("high"));
        for (std::int64_t s = 0; s < arg_int("samples_per_epoch"); ++s) {
            double candidate = dist(rng_);
            if (objective.value(candidate) < objective.value(x_)) x_ = candidate;
        }
        return x_;
    }

private:
    std::mt19937_64 rng_;
};

class FixedPointMethod : public Method {
public:
    using Method::Method;
    void prepare(const Objective&, std::uint64_t) override { x_ = arg_real("x"); }
    double train_epoch(std::int64_t, std::int64_t, const Objective&) override { return x_; }
};

class Device : public BuildableModule {
public:
    Device(const ModuleDescriptor& d, ModuleArgs args, bool simulated)
        : BuildableModule(d, std::move(args)), simulated_(simulated) {
        if (arg_int("num_devices") < 1) throw ConstructionError(type_name(), "num_devices must be at least 1");
    }
    std::string describe() const {
        return "device: " + type_name() + " with " + std::to_string(arg_int("num_devices")) + " device(s)" +
               (simulated_ ? " (simulated)" : "");
    }

private:
    bool simulated_;
};

struct EpochInfo {
    std::int64_t epoch = 0;
    std::int64_t total = 0;
    const std::map<std::string, double>& metrics;
};

class Callback : public BuildableModule {
public:
    using BuildableModule::BuildableModule;
    virtual void on_epoch_end(const EpochInfo&, RunContext&) {}
    virtual void on_train_end(RunContext&) {}
};

class CheckpointCallback : public Callback {
public:
    CheckpointCallback(const ModuleDescriptor& d, ModuleArgs args)
        : Callback(d, std::move(args)), tracker_(check_top_n(), arg_bool("minimize_key")) {}

    void on_epoch_end(const EpochInfo& info, RunContext& ctx) override {
        auto it = info.metrics.find(arg_string("key"));
        if (it == info.metrics.end()) return;
        auto decision = tracker_.offer(info.epoch, it->second);
        if (decision.evicted_epoch) {
            auto old = files_.find(*decision.evicted_epoch);
            if (old != files_.end()) {
                if (ctx.write_files()) fs::remove(old->second);
                ctx.checkpoint_files.erase(old->first);
                files_.erase(old);
            }
        }
        if (!decision.keep) return;
        std::ostringstream name;
        name << "epoch-" << std::setw(4) << std::setfill('0') << info.epoch << ".state.json";
        std::string path = (fs::path(ctx.save_dir()) / "checkpoints" / name.str()).string();
        if (ctx.write_files()) {
            Checkpoint c{info.epoch, info.metrics, ctx.parameters, export_state(*ctx.task, false)};
            std::ofstream out(path, std::ios::binary);
            out << serialize_checkpoint(c);
        }
        files_[info.epoch] = path;
        ctx.checkpoint_files[info.epoch] = path;
        ctx.log("checkpoint: kept epoch " + std::to_string(info.epoch) + " (" + it->first + "=" +
                fmt_real(it->second) + ")");
    }

    void on_train_end(RunContext& ctx) override {
        if (auto best = tracker_.best()) ctx.best_checkpoint = files_[*best];
    }

private:
    std::size_t check_top_n() const {
        if (arg_int("top_n") < 1) throw ConstructionError(type_name(), "top_n must be at least 1");
        return static_cast<std::size_t>(arg_int("top_n"));
    }

    CheckpointTracker tracker_;
    std::map<std::int64_t, std::string> files_;
};

class EarlyStoppingCallback : public Callback {
public:
    EarlyStoppingCallback(const ModuleDescriptor& d, ModuleArgs args) : Callback(d, std::move(args)) {
        if (arg_int("patience") < 1) throw ConstructionError(type_name(), "patience must be at least 1");
    }
    void on_epoch_end(const EpochInfo& info, RunContext& ctx) override {
        auto it = info.metrics.find(arg_string("key"));
        if (it == info.metrics.end()) return;
        double sign = arg_bool("minimize_key") ? 1.0 : -1.0;
        double v = sign * it->second;
        if (!best_ || v < *best_ - arg_real("min_delta")) {
            best_ = v;
            stale_ = 0;
            return;
        }
        if (++stale_ >= arg_int("patience")) {
            ctx.stop_requested = true;
            ctx.log("early stopping: " + it->first + " did not improve for " + std::to_string(stale_) + " epochs");
        }
    }

private:
    std::optional<double> best_;
    std::int64_t stale_ = 0;
};

class PrintCallback : public Callback {
public:
    PrintCallback(const ModuleDescriptor& d, ModuleArgs args) : Callback(d, std::move(args)) {
        if (arg_int("every_n") < 1) throw ConstructionError(type_name(), "every_n must be at least 1");
    }
    void on_epoch_end(const EpochInfo& info, RunContext& ctx) override {
        if (info.epoch % arg_int("every_n") == 0) ctx.log("metrics: " + metrics_text(info.metrics));
    }
};

class ExpLogger : public BuildableModule {
public:
    using BuildableModule::BuildableModule;
    virtual void on_start(RunContext& ctx, const BuildableModule& root) {
        if (descriptor().find_argument("log_graph") && arg_bool("log_graph")) {
            std::istringstream lines(overview(root));
            for (std::string line; std::getline(lines, line);) ctx.log("graph: " + line);
        }
    }
    virtual void log_metrics(std::int64_t epoch, const std::map<std::string, double>& metrics, RunContext& ctx) = 0;
};

class FileExpLogger : public ExpLogger {
public:
    using ExpLogger::ExpLogger;
    void log_metrics(std::int64_t epoch, const std::map<std::string, double>& metrics, RunContext& ctx) override {
        ctx.log("[file] epoch " + std::to_string(epoch) + ": " + metrics_text(metrics));
    }
};

class TensorBoardExpLogger : public ExpLogger {
public:
    using ExpLogger::ExpLogger;
    void log_metrics(std::int64_t epoch, const std::map<std::string, double>& metrics, RunContext& ctx) override {
        for (const auto& [k, v] : metrics)
            ctx.log("[tensorboard] scalar " + k + " step=" + std::to_string(epoch) + " value=" + fmt_real(v));
    }
};

class CsvExpLogger : public ExpLogger {
public:
    CsvExpLogger(const ModuleDescriptor& d, ModuleArgs args) : ExpLogger(d, std::move(args)) {
        auto name = arg_string("file_name");
        if (name.empty() || name.find('/') != std::string::npos)
            throw ConstructionError(type_name(), "file_name must be a plain file name");
    }
    void log_metrics(std::int64_t epoch, const std::map<std::string, double>& metrics, RunContext& ctx) override {
        if (!ctx.write_files()) return;
        auto path = fs::path(ctx.save_dir()) / arg_string("file_name");
        bool header = !header_written_;
        std::ofstream out(path, header ? std::ios::trunc : std::ios::app);
        if (header) {
            out << "epoch";
            for (const auto& [k, v] : metrics) out << "," << k;
            out << "\n";
            header_written_ = true;
        }
        out << epoch;
        for (const auto& [k, v] : metrics) out << "," << fmt_real(v);
        out << "\n";
    }

private:
    bool header_written_ = false;
};

class SimpleTrainer : public BuildableModule {
public:
    SimpleTrainer(const ModuleDescriptor& d, ModuleArgs args) : BuildableModule(d, std::move(args)) {
        if (arg_int("max_epochs") < 0) throw ConstructionError(type_name(), "max_epochs must not be negative");
        double decay = arg_real("ema_decay");
        if (decay < 0 || decay >= 1) throw ConstructionError(type_name(), "ema_decay must be in [0, 1)");
    }

    void fit(RunContext& ctx, const BuildableModule& root, bool test_run, Method* method, const Objective& objective,
             std::uint64_t seed, RunReport& report) {
        std::int64_t epochs = arg_int("max_epochs");
        if (arg_int("stop_epoch") > 0) epochs = std::min(epochs, arg_int("stop_epoch"));
        if (test_run) epochs = std::min<std::int64_t>(epochs, 1);

        auto callbacks = slot("cls_callbacks");
        auto loggers = slot("cls_exp_loggers");
        for (auto* l : loggers) static_cast<ExpLogger*>(l)->on_start(ctx, root);

        double x = objective.start();
        if (method) {
            method->prepare(objective, seed);
            x = method->x();
        }
        const double decay = arg_real("ema_decay");
        double ema = x;
        ctx.log("trainer: " + std::to_string(epochs) + " epoch(s), moving average " +
                (decay > 0 ? "decay " + fmt_real(decay) + " on " + arg_string("ema_device") : "disabled"));

        for (std::int64_t e = 1; e <= epochs; ++e) {
            if (method) x = method->train_epoch(e - 1, epochs, objective);
            double loss = objective.value(x);
            if (!std::isfinite(loss)) {
                throw RuntimeFailure(method ? "cls_method#0 (" + method->type_name() + ")" : "cls_data#0",
                                     "loss is not finite in epoch " + std::to_string(e));
            }
            std::map<std::string, double> metrics{{"train/loss", loss}, {"train/x", x}};
            ctx.parameters = {{"x", x}};
            if (decay > 0) {
                ema = decay * ema + (1 - decay) * x;
                metrics["train/ema_loss"] = objective.value(ema);
                ctx.parameters["ema_x"] = ema;
            }
            report.losses.push_back(loss);
            report.epochs_run = e;
            ctx.log("epoch " + std::to_string(e) + "/" + std::to_string(epochs) + " train/loss=" + fmt_real(loss));
            for (auto* l : loggers) static_cast<ExpLogger*>(l)->log_metrics(e, metrics, ctx);
            EpochInfo info{e, epochs, metrics};
            for (auto* c : callbacks) static_cast<Callback*>(c)->on_epoch_end(info, ctx);
            if (ctx.stop_requested) break;
        }
        for (auto* c : callbacks) static_cast<Callback*>(c)->on_train_end(ctx);
        report.final_loss = report.losses.empty() ? objective.value(x) : report.losses.back();
    }
};

class ExperimentTask : public Task {
public:
    ExperimentTask(const ModuleDescriptor& d, ModuleArgs args) : Task(d, std::move(args)) {
        trainer_ = dynamic_cast<SimpleTrainer*>(first("cls_trainer"));
        device_ = dynamic_cast<Device*>(first("cls_device"));
        if (!trainer_ || !device_) throw ConstructionError(type_name(), "needs a device and a trainer");
        method_ = dynamic_cast<Method*>(first("cls_method"));
        objective_ = dynamic_cast<Objective*>(first("cls_data"));
    }

    RunReport run(const RunOptions& options) override {
        RunContext ctx(options, options.save_dir ? *options.save_dir : arg_string("save_dir"));
        ctx.task = this;
        RunReport report;
        report.structure_overview = overview(*this);

        std::unique_ptr<Objective> fallback;
        const Objective* objective = objective_;
        if (!objective) {
            fallback = std::make_unique<Objective>(default_objective_descriptor(), ModuleArgs{}, 2);
            objective = fallback.get();
        }

        ctx.log("task: " + type_name() + " seed=" + std::to_string(arg_int("seed")) +
                (arg_bool("is_test_run") ? " (test run)" : "") + (arg_string("note").empty() ? "" : " note: " + arg_string("note")));
        ctx.log(device_->describe());
        ctx.log("objective: " + objective->type_name() + " " + objective->descriptor().help);
        ctx.log("method: " + (method_ ? method_->type_name() : std::string("none, evaluating the start point")));
        trainer_->fit(ctx, *this, arg_bool("is_test_run"), method_, *objective,
                      static_cast<std::uint64_t>(arg_int("seed")), report);
        ctx.log("finished after " + std::to_string(report.epochs_run) + " epoch(s), final train/loss=" +
                fmt_real(report.final_loss));

        report.checkpoint_path = ctx.best_checkpoint;
        for (const auto& [epoch, path] : ctx.checkpoint_files) report.checkpoints.push_back(path);
        report.log_lines = std::move(ctx.lines());
        return report;
    }

private:
    static const ModuleDescriptor& default_objective_descriptor() {
        static const ModuleDescriptor d = [] {
            for (auto& candidate : demo_descriptors(false)) {
                if (candidate.name == "QuadraticObjective") return candidate;
            }
            throw Error("QuadraticObjective is not part of the demo set");
        }();
        return d;
    }

    SimpleTrainer* trainer_ = nullptr;
    Device* device_ = nullptr;
    Method* method_ = nullptr;
    Objective* objective_ = nullptr;
};

template <class T>
ModuleMaker maker() {
    return [](const ModuleDescriptor& d, ModuleArgs args) -> ModulePtr { return std::make_unique<T>(d, std::move(args)); };
}

ModuleFactory make_factory() {
    ModuleFactory factory;
    std::map<std::string, ModuleMaker> makers = {
        {"SingleSearchTask", maker<ExperimentTask>()},
        {"SingleRetrainTask", maker<ExperimentTask>()},
        {"CpuDevicesManager",
         [](const ModuleDescriptor& d, ModuleArgs a) -> ModulePtr { return std::make_unique<Device>(d, std::move(a), false); }},
        {"CudaDevicesManager",
         [](const ModuleDescriptor& d, ModuleArgs a) -> ModulePtr { return std::make_unique<Device>(d, std::move(a), true); }},
        {"SimpleTrainer", maker<SimpleTrainer>()},
        {"UniformRandomMethod", maker<UniformRandomMethod>()},
        {"GradientDescentMethod", maker<GradientDescentMethod>()},
        {"FixedPointMethod", maker<FixedPointMethod>()},
        {"SGDOptimizer", maker<SGDOptimizer>()},
        {"AdamOptimizer", maker<AdamOptimizer>()},
        {"AdaBeliefOptimizer", maker<AdaBeliefOptimizer>()},
        {"CosineScheduler", maker<CosineScheduler>()},
        {"StepScheduler", maker<StepScheduler>()},
        {"ConstantScheduler", maker<ConstantScheduler>()},
        {"CheckpointCallback", maker<CheckpointCallback>()},
        {"EarlyStoppingCallback", maker<EarlyStoppingCallback>()},
        {"PrintCallback", maker<PrintCallback>()},
        {"FileExpLogger", maker<FileExpLogger>()},
        {"TensorBoardExpLogger", maker<TensorBoardExpLogger>()},
        {"CsvExpLogger", maker<CsvExpLogger>()},
        {"QuadraticObjective",
         [](const ModuleDescriptor& d, ModuleArgs a) -> ModulePtr { return std::make_unique<Objective>(d, std::move(a), 2); }},
        {"QuarticObjective",
         [](const ModuleDescriptor& d, ModuleArgs a) -> ModulePtr { return std::make_unique<Objective>(d, std::move(a), 4); }},
    };
    for (const auto& d : demo_descriptors(true)) {
        auto it = makers.find(d.name);
        if (it != makers.end()) factory.add(d.name, {requirement_slots(d), it->second});
    }
    add_network_builders(factory);
    return factory;
}

ModulePtr build_node(const ArgumentTreeNode& node, const NodePath& path) {
    const BuilderEntry* entry = demo_factory().find(node.name());
    std::string where = path_text(path) + " " + node.name();
    if (!entry) throw ConstructionError(where, "no constructor is registered for this module");

    ModuleArgs args;
    args.kwargs = node.values();
    for (const auto& req : node.descriptor().child_requirements) {
        BuiltSlot built;
        built.is_list = req.count_max > 1;
        const auto& kids = node.children(req.key);
        for (std::size_t i = 0; i < kids.size(); ++i) {
            NodePath child_path = path;
            child_path.push_back({req.key, i});
            built.modules.push_back(build_node(kids[i], child_path));
        }
        args.submodules.emplace(req.key, std::move(built));
    }
    try {
        return entry->make(node.descriptor(), std::move(args));
    } catch (const ConstructionError& e) {
        throw ConstructionError(where, e.detail());
    } catch (const std::exception& e) {
        throw ConstructionError(where, e.what());
    }
}

}  // namespace

const ModuleFactory& demo_factory() {
    static const ModuleFactory factory = make_factory();
    return factory;
}

std::unique_ptr<Task> instantiate(const ArgumentTreeNode& root) {
    auto violations = validate_tree(root);
    if (!violations.empty()) {
        std::string msg = "cannot instantiate a tree with violations:";
        for (const auto& v : violations) msg += "\n  " + format_violation(v);
        throw InvalidTree(msg);
    }
    ModulePtr built = build_node(root, {});
    if (!dynamic_cast<Task*>(built.get())) throw ConstructionError(path_text({}) + " " + root.name(), "not a runnable task");
    return std::unique_ptr<Task>(static_cast<Task*>(built.release()));
}

RunReport run(Task& task, const RunOptions& options) { return task.run(options); }

std::string resolved_save_dir(const Task& task, const RunOptions& options) {
    return options.save_dir ? *options.save_dir : task.arg_string("save_dir");
}

RunReport run_tree(const ArgumentTreeNode& root, const RunOptions& options) {
    auto task = instantiate(root);
    if (options.write_files) {
        fs::path dir = resolved_save_dir(*task, options);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
        std::ofstream out(dir / "config.json", std::ios::binary | std::ios::trunc);
        if (!out || !(out << generate_config(root).to_json_text() << "\n")) {
            throw Error("cannot write " + (dir / "config.json").string());
        }
    }
    return run(*task, options);
}

// ---------------------------------------------------------------------------

CheckpointTracker::CheckpointTracker(std::size_t top_n, bool minimize) : top_n_(top_n), minimize_(minimize) {}

CheckpointTracker::Decision CheckpointTracker::offer(std::int64_t epoch, double value) {
    Decision d;
    if (top_n_ == 0) return d;
    if (kept_.size() >= top_n_) {
        auto worst = kept_.back();
        if (!better(value, worst.first)) return d;
        d.evicted_epoch = worst.second;
        kept_.pop_back();
    }
    auto pos = std::find_if(kept_.begin(), kept_.end(), [&](const auto& k) { return better(value, k.first); });
    kept_.insert(pos, {value, epoch});
    d.keep = true;
    return d;
}

std::vector<std::int64_t> CheckpointTracker::retained() const {
    std::vector<std::int64_t> out;
    for (const auto& [value, epoch] : kept_) out.push_back(epoch);
    return out;
}

std::optional<std::int64_t> CheckpointTracker::best() const {
    if (kept_.empty()) return std::nullopt;
    return kept_.front().second;
}

std::string serialize_checkpoint(const Checkpoint& c) {
    nlohmann::json j;
    j["epoch"] = c.epoch;
    j["metrics"] = c.metrics;
    j["parameters"] = c.parameters;
    j["state"] = state_to_json(c.state);
    return j.dump();
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        Checkpoint c;
        c.epoch = j.at("epoch").get<std::int64_t>();
        c.metrics = j.at("metrics").get<std::map<std::string, double>>();
        c.parameters = j.at("parameters").get<std::map<std::string, double>>();
        c.state = state_from_json(j.at("state"));
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw SyntaxError("invalid checkpoint " + path + ": " + e.what());
    }
}

}  // namespace argtree::demo
