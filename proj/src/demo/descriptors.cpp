#include <cstdlib>
#include <string_view>

#include "argtree/demo/demo_domain.hpp"

namespace argtree::demo {

namespace {

ArgumentSpec str_arg(std::string name, std::string def, std::string help, std::vector<std::string> choices = {}) {
    return {std::move(name), ValueKind::String, std::move(def), std::move(help), std::move(choices)};
}
ArgumentSpec int_arg(std::string name, std::int64_t def, std::string help) {
    return {std::move(name), ValueKind::Integer, def, std::move(help), {}};
}
ArgumentSpec real_arg(std::string name, double def, std::string help) {
    return {std::move(name), ValueKind::Real, def, std::move(help), {}};
}
/// Boolean arguments keep their string defaults ("False"), as the original code base does.
ArgumentSpec bool_arg(std::string name, const char* def, std::string help) {
    return {std::move(name), ValueKind::Boolean, std::string(def), std::move(help), {}};
}
ArgumentSpec bool_arg(std::string name, bool def, std::string help) {
    return {std::move(name), ValueKind::Boolean, def, std::move(help), {}};
}

ChildRequirementSpec needs(std::string key, std::string kind, std::size_t min, std::size_t max, std::string help,
                              TagMap tags = {}) {
    return {std::move(key), std::move(kind), std::move(tags), min, max, std::move(help)};
}

std::vector<ArgumentSpec> task_args() {
    return {
        bool_arg("is_test_run", "False", "test runs stop epochs early"),
        int_arg("seed", 0, "random seed for the experiment"),
        bool_arg("is_deterministic", "False", "use deterministic operations"),
        str_arg("note", "", "just to take notes"),
        str_arg("save_dir", "{path_tmp}", "where to save"),
    };
}

std::vector<ModuleDescriptor> task_modules() {
    std::vector<ModuleDescriptor> out;
    out.push_back({"SingleSearchTask", "task", {{"search", true}}, task_args(),
                   {
                       needs("cls_device", "device", 1, 1, "device manager"),
                       needs("cls_trainer", "trainer", 1, 1, "trainer"),
                       needs("cls_method", "method", 0, 1, "search method", {{"search", true}}),
                       needs("cls_data", "data", 0, 1, "objective to minimize, a quadratic by default"),
                       needs("cls_benchmark", "benchmark", 0, 1,
                                "immediately look up the search result in this benchmark set (optional)"),
                   },
                   "tasks/search.cpp", "run a search method on an objective"});
    out.push_back({"SingleRetrainTask", "task", {{"search", false}}, task_args(),
                   {
                       needs("cls_device", "device", 1, 1, "device manager"),
                       needs("cls_trainer", "trainer", 1, 1, "trainer"),
                       needs("cls_method", "method", 1, 1, "training method"),
                       needs("cls_data", "data", 0, 1, "objective to minimize, a quadratic by default"),
                   },
                   "tasks/retrain.cpp", "train a fixed method on an objective"});
    return out;
}

std::vector<ModuleDescriptor> device_modules() {
    return {
        {"CpuDevicesManager", "device", {}, {int_arg("num_devices", 1, "number of available devices")}, {},
         "devices/cpu.cpp", "run on the cpu"},
        {"CudaDevicesManager",
         "device",
         {},
         {int_arg("num_devices", 1, "number of available devices"), bool_arg("use_cudnn", "True", "try using cudnn"),
          bool_arg("use_cudnn_benchmark", "True", "use cudnn benchmark")},
         {},
         "devices/cuda.cpp",
         "simulated gpu device manager"},
    };
}

std::vector<ModuleDescriptor> trainer_modules() {
    return {{"SimpleTrainer",
             "trainer",
             {},
             {
                 int_arg("max_epochs", 10, "max training epochs, affects schedulers + regularizers"),
                 int_arg("stop_epoch", -1, "stop after training n epochs anyway, if > 0"),
                 real_arg("ema_decay", 0.0, "decay of the exponential moving average of the parameters, 0 disables"),
                 str_arg("ema_device", "cpu", "where to keep the moving average", {"cpu", "same"}),
             },
             {
                 needs("cls_callbacks", "callback", 0, kUnbounded, "training callbacks"),
                 needs("cls_exp_loggers", "logger", 0, kUnbounded, "experiment logger"),
             },
             "training/simple.cpp",
             "epoch loop driving the method"}};
}

std::vector<ModuleDescriptor> method_modules() {
    return {
        {"UniformRandomMethod",
         "method",
         {{"search", true}},
         {int_arg("samples_per_epoch", 10, "random candidates drawn per epoch"),
          real_arg("low", -10.0, "lower bound of the search interval"),
          real_arg("high", 10.0, "upper bound of the search interval")},
         {},
         "methods/random.cpp",
         "uniform random search, keeps the best sample"},
        {"GradientDescentMethod",
         "method",
         {{"search", true}},
         {int_arg("steps_per_epoch", 1, "optimizer steps per epoch")},
         {needs("cls_optimizers", "optimizer", 1, 1, "optimizer")},
         "methods/gradient.cpp",
         "first-order descent on the objective"},
        {"FixedPointMethod",
         "method",
         {{"search", false}},
         {real_arg("x", 0.0, "the evaluated point")},
         {},
         "methods/fixed.cpp",
         "evaluates one fixed point every epoch"},
    };
}

std::vector<ModuleDescriptor> optimizer_modules(bool with_extras) {
    std::vector<ModuleDescriptor> out = {
        {"SGDOptimizer",
         "optimizer",
         {},
         {real_arg("lr", 0.01, "learning rate"), real_arg("momentum", 0.0, "momentum factor")},
         {needs("cls_schedulers", "scheduler", 0, 1, "scheduler")},
         "optimizers/sgd.cpp",
         "stochastic gradient descent"},
        {"AdamOptimizer",
         "optimizer",
         {},
         {real_arg("lr", 0.001, "learning rate"), real_arg("beta1", 0.9, "first moment decay"),
          real_arg("beta2", 0.999, "second moment decay"), real_arg("eps", 1e-8, "numerical stabilizer")},
         {needs("cls_schedulers", "scheduler", 0, 1, "scheduler")},
         "optimizers/adam.cpp",
         "adaptive moment estimation"},
    };
    if (with_extras) {
        out.push_back({"AdaBeliefOptimizer",
                       "optimizer",
                       {{"external", true}},
                       {real_arg("lr", 0.001, "learning rate"), real_arg("beta1", 0.9, "first moment decay"),
                        real_arg("beta2", 0.999, "belief decay"), real_arg("eps", 1e-16, "numerical stabilizer")},
                       {needs("cls_schedulers", "scheduler", 0, 1, "scheduler")},
                       "plugin extras: optimizers/adabelief.cpp",
                       "adapting stepsizes by the belief in observed gradients"});
    }
    return out;
}

std::vector<ModuleDescriptor> scheduler_modules() {
    return {
        {"CosineScheduler",
         "scheduler",
         {},
         {int_arg("warmup_epochs", 0, "linear warmup epochs"),
          real_arg("eta_min", 0.0, "final learning rate as a fraction of the initial one")},
         {},
         "optimizers/schedulers.cpp",
         "cosine annealing over the training epochs"},
        {"StepScheduler",
         "scheduler",
         {},
         {int_arg("step_size", 10, "epochs between decays"), real_arg("gamma", 0.1, "decay factor")},
         {},
         "optimizers/schedulers.cpp",
         "multiply the learning rate by gamma every step_size epochs"},
        {"ConstantScheduler",
         "scheduler",
         {},
         {real_arg("factor", 1.0, "learning rate factor")},
         {},
         "optimizers/schedulers.cpp",
         "constant learning rate factor"},
    };
}

std::vector<ModuleDescriptor> callback_modules() {
    return {
        {"CheckpointCallback",
         "callback",
         {},
         {int_arg("top_n", 1, "keep the best n checkpoints"),
          str_arg("key", "train/loss", "metric that ranks checkpoints"),
          bool_arg("minimize_key", true, "smaller metric values are better")},
         {},
         "training/callbacks/checkpoint.cpp",
         "save the best checkpoints"},
        {"EarlyStoppingCallback",
         "callback",
         {},
         {str_arg("key", "train/loss", "monitored metric"), int_arg("patience", 3, "epochs without improvement"),
          real_arg("min_delta", 0.0, "minimal improvement"),
          bool_arg("minimize_key", true, "smaller metric values are better")},
         {},
         "training/callbacks/early_stopping.cpp",
         "stop when the monitored metric stops improving"},
        {"PrintCallback",
         "callback",
         {},
         {int_arg("every_n", 1, "print every n epochs")},
         {},
         "training/callbacks/print.cpp",
         "print all metrics"},
    };
}

std::vector<ModuleDescriptor> logger_modules() {
    return {
        {"FileExpLogger", "logger", {}, {bool_arg("log_graph", false, "describe the module graph at start")}, {},
         "training/loggers/file.cpp", "write metrics to the run log"},
        {"TensorBoardExpLogger", "logger", {}, {bool_arg("log_graph", false, "describe the module graph at start")}, {},
         "training/loggers/tensorboard.cpp", "tensorboard-style scalar lines in the run log"},
        {"CsvExpLogger", "logger", {}, {str_arg("file_name", "metrics.csv", "file inside save_dir")}, {},
         "training/loggers/csv.cpp", "append metrics to a csv file"},
    };
}

std::vector<ModuleDescriptor> data_modules() {
    return {
        {"QuadraticObjective",
         "data",
         {},
         {real_arg("target", 3.0, "minimizer"), real_arg("scale", 1.0, "curvature factor"),
          real_arg("start", 0.0, "initial parameter")},
         {},
         "data/objectives.cpp",
         "f(x) = scale * (x - target)^2"},
        {"QuarticObjective",
         "data",
         {},
         {real_arg("target", 3.0, "minimizer"), real_arg("scale", 1.0, "curvature factor"),
          real_arg("start", 0.0, "initial parameter")},
         {},
         "data/objectives.cpp",
         "f(x) = scale * (x - target)^4"},
    };
}

std::vector<ModuleDescriptor> network_modules() {
    return {
        {"SingleLayerCell",
         "network_cell",
         {},
         {str_arg("name", "", "path name of the cell"), int_arg("features_mult", 1, "multiply the input features"),
          int_arg("features_fixed", -1, "fixed number of output features, if > 0")},
         {},
         "networks/cells/single_layer.cpp",
         "a cell wrapping exactly one operation"},
        {"MobileInvConvLayer",
         "network_layer",
         {},
         {int_arg("kernel_size", 3, "spatial kernel size"), int_arg("kernel_size_in", 1, "expanding kernel size"),
          int_arg("kernel_size_out", 1, "projecting kernel size"), int_arg("stride", 1, "stride"),
          real_arg("expansion", 6.0, "channel expansion factor"),
          str_arg("padding", "same", "padding mode", {"same", "valid"}), int_arg("dilation", 1, "dilation"),
          bool_arg("bn_affine", true, "affine batch norm"),
          str_arg("act_fun", "relu6", "activation function", {"relu", "relu6", "swish", "identity"}),
          bool_arg("act_inplace", true, "in-place activation"), bool_arg("fused", false, "fuse the expansion")},
         {},
         "networks/layers/mobile_inverted.cpp",
         "inverted bottleneck block"},
        {"ConvLayer",
         "network_layer",
         {},
         {int_arg("kernel_size", 3, "kernel size"), int_arg("stride", 1, "stride"), int_arg("dilation", 1, "dilation"),
          bool_arg("bias", false, "add a bias"),
          str_arg("act_fun", "relu", "activation function", {"relu", "relu6", "swish", "identity"})},
         {},
         "networks/layers/conv.cpp",
         "plain convolution"},
        {"PoolLayer",
         "network_layer",
         {},
         {str_arg("pool_type", "max", "pooling type", {"max", "avg"}), int_arg("kernel_size", 3, "kernel size"),
          int_arg("stride", 1, "stride")},
         {},
         "networks/layers/pool.cpp",
         "pooling"},
        {"SkipLayer", "network_layer", {}, {}, {}, "networks/layers/skip.cpp", "identity connection"},
        {"LinearTransformerLayer",
         "network_layer",
         {},
         {bool_arg("bias", false, "add a bias")},
         {},
         "networks/layers/linear_transformer.cpp",
         "1x1 convolution standing in for a skip connection while training, exported as a skip"},
        {"SumParallelModules", "network_layer", {}, {}, {}, "networks/layers/parallel.cpp",
         "sum of the outputs of all submodules"},
        {"MixedOp",
         "network_mixed_op",
         {},
         {str_arg("name", "", "path name, used to look up the selected candidates"),
          str_arg("strategy_name", "default", "weight strategy controlling the candidates")},
         {},
         "networks/layers/mixed_op.cpp",
         "manages multiple candidate operations"},
    };
}

}  // namespace

std::vector<ModuleDescriptor> demo_descriptors(bool with_extras) {
    std::vector<ModuleDescriptor> out;
    for (auto group : {task_modules(), device_modules(), trainer_modules(), method_modules(),
                       optimizer_modules(with_extras), scheduler_modules(), callback_modules(), logger_modules(),
                       data_modules(), network_modules()}) {
        for (auto& d : group) out.push_back(std::move(d));
    }
    return out;
}

Registry build_demo_registry(bool extras_enabled) {
    Registry registry;
    for (auto& d : demo_descriptors(extras_enabled)) registry.add(std::move(d));
    if (!extras_enabled) registry.add_missing("AdaBeliefOptimizer", kExtrasMissingReason, kExtrasInstallHint);
    return registry;
}

Registry build_demo_registry() {
    const char* flag = std::getenv(kExtrasEnvVar);
    return build_demo_registry(flag != nullptr && std::string_view(flag) == "1");
}

std::vector<SlotSpec> requirement_slots(const ModuleDescriptor& d) {
    std::vector<SlotSpec> slots;
    for (const auto& req : d.child_requirements) slots.push_back({req.key, {req.allowed_kind}, req.count_max > 1});
    return slots;
}

}  // namespace argtree::demo
