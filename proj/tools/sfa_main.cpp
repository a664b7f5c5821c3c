// sfa: train a neural vector field against analytic diffusion scores, audit
// its conservativity, sample from it, and run Stein diagnostics. Every run is
// driven by a flat key=value config plus a master seed; outputs are CSV files
// under the configured directory and are byte-stable for a fixed seed.

#include "sfa/audit.hpp"
#include "sfa/config.hpp"
#include "sfa/csv.hpp"
#include "sfa/sampler.hpp"
#include "sfa/stein.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitMismatch = 3;
constexpr int kExitNumerical = 4;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration file")->required();
    cmd->add_option("--set", args.overrides, "override a config key, e.g. --set train.steps=100");
    cmd->add_option("--seed", args.seed, "override the master seed");
}

sfa::RunConfig load(const CommonArgs& args) {
    if (!std::filesystem::exists(args.config_path))
        throw sfa::ConfigError("config file does not exist: " + args.config_path);
    return sfa::load_run_config(args.config_path, args.overrides, args.seed);
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary); // '\n' endings regardless of platform
    if (!os) throw std::runtime_error("cannot open output file: " + p.string());
    return os;
}

// field selection shared by audit/sample/stein
struct FieldArgs {
    std::string checkpoint;
    bool analytic = false;
    double curl_amplitude = 0.0;
    bool has_curl = false;
};

sfa::Field resolve_field(const FieldArgs& fa, const sfa::RunConfig& rc,
                         std::shared_ptr<const sfa::MlpParams>* params_out = nullptr) {
    const int picked = (fa.checkpoint.empty() ? 0 : 1) + (fa.analytic ? 1 : 0) + (fa.has_curl ? 1 : 0);
    if (picked != 1)
        throw sfa::ConfigError("pick exactly one field: --checkpoint, --analytic or --curl");
    if (fa.analytic) return sfa::make_score_field(rc.gmm, rc.schedule);
    if (fa.has_curl) return sfa::make_curl_field(rc.gmm, rc.schedule, fa.curl_amplitude);
    auto params = std::make_shared<sfa::MlpParams>(sfa::load_checkpoint(fa.checkpoint));
    if (params->dim != rc.gmm.dim)
        throw sfa::MismatchError("checkpoint dimension does not match the configured mixture");
    if (params->sched.T != rc.schedule.T || params->sched.offset != rc.schedule.offset)
        throw sfa::MismatchError("checkpoint schedule does not match the configured schedule");
    if (params_out) *params_out = params;
    return sfa::make_mlp_field(params);
}

int cmd_train(const CommonArgs& args) {
    const sfa::RunConfig rc = load(args);
    std::filesystem::create_directories(rc.out_dir);
    const sfa::TrainResult res = sfa::train(rc.gmm, rc.schedule, rc.train, rc.exec);
    sfa::save_checkpoint(res.params, (std::filesystem::path(rc.out_dir) / "checkpoint.sfa").string());
    auto os = open_out(std::filesystem::path(rc.out_dir) / "loss.csv");
    os << "step,loss\n";
    for (size_t i = 0; i < res.loss_trace.size(); ++i)
        os << i << ',' << sfa::fmt_g17(res.loss_trace[i]) << "\n";
    std::cout << "trained " << rc.train.steps << " steps; final loss "
              << sfa::fmt_g17(res.loss_trace.back()) << "\n"
              << "checkpoint: " << rc.out_dir << "/checkpoint.sfa\n";
    return 0;
}

int cmd_audit(const CommonArgs& args, const FieldArgs& fa) {
    const sfa::RunConfig rc = load(args);
    const sfa::Field field = resolve_field(fa, rc);
    std::filesystem::create_directories(rc.out_dir);
    const sfa::AuditResult res = sfa::audit_run(field, rc.gmm, rc.schedule, rc.audit, rc.exec);
    {
        auto os = open_out(std::filesystem::path(rc.out_dir) / "integral.csv");
        sfa::write_integral_csv(res, os);
    }
    {
        auto os = open_out(std::filesystem::path(rc.out_dir) / "differential.csv");
        sfa::write_differential_csv(res, os);
    }
    {
        auto os = open_out(std::filesystem::path(rc.out_dir) / "summary.csv");
        sfa::write_summary_csv(res, os);
    }
    std::cout << "audited field '" << field.tag << "': " << res.records.size()
              << " path records, " << res.asym.size() << " Jacobian records";
    if (res.skipped > 0) std::cout << ", " << res.skipped << " samples skipped";
    std::cout << "\n";
    return 0;
}

int cmd_sample(const CommonArgs& args, const FieldArgs& fa, const std::string& method_flag) {
    sfa::RunConfig rc = load(args);
    if (!method_flag.empty()) {
        if (method_flag != "ode" && method_flag != "sde")
            throw sfa::ConfigError("--method must be 'ode' or 'sde'");
        rc.sample_method = method_flag;
    }
    const sfa::Field field = resolve_field(fa, rc);
    std::filesystem::create_directories(rc.out_dir);
    const sfa::SampleBatch batch =
        rc.sample_method == "ode"
            ? sfa::pf_ode_sample(field, rc.schedule, rc.sample_batch, rc.sample_steps, rc.seed,
                                 rc.exec)
            : sfa::reverse_sde_sample(field, rc.schedule, rc.sample_batch, rc.seed, rc.exec);
    const sfa::SampleMetrics metrics = sfa::eval_samples(batch, rc.gmm, rc.seed, rc.exec);
    {
        auto os = open_out(std::filesystem::path(rc.out_dir) / "samples.csv");
        sfa::write_samples_csv(batch, os);
    }
    const std::string header =
        "method,field,steps,batch,seed,mean_err,cov_frob_err,energy_distance,weight_err_max";
    std::ostringstream row;
    row << batch.method << ',' << batch.field_tag << ',' << batch.steps << ','
        << batch.points.size() << ',' << rc.seed << ',' << sfa::fmt_g17(metrics.mean_err) << ','
        << sfa::fmt_g17(metrics.cov_frob_err) << ',' << sfa::fmt_g17(metrics.energy_distance)
        << ',' << sfa::fmt_g17(metrics.weight_err_max);
    {
        auto os = open_out(std::filesystem::path(rc.out_dir) / "metrics.csv");
        os << header << "\n" << row.str() << "\n";
    }
    {
        const auto lp = std::filesystem::path(rc.out_dir) / "runlog.csv";
        const bool fresh = !std::filesystem::exists(lp);
        std::ofstream os(lp, std::ios::binary | std::ios::app);
        if (fresh) os << header << "\n";
        os << row.str() << "\n";
    }
    std::cout << "method=" << batch.method << "\nfield=" << batch.field_tag << "\n"
              << metrics.to_kv();
    return 0;
}

int cmd_stein(const CommonArgs& args, const FieldArgs& fa) {
    const sfa::RunConfig rc = load(args);
    const sfa::Field field = resolve_field(fa, rc);
    std::filesystem::create_directories(rc.out_dir);
    const sfa::SteinResult res =
        sfa::stein_stats(rc.gmm, field, rc.schedule, rc.stein_ks, rc.stein_samples, rc.seed,
                         rc.exec);
    {
        auto os = open_out(std::filesystem::path(rc.out_dir) / "stein.csv");
        sfa::write_stein_csv(res, os);
    }
    {
        auto os = open_out(std::filesystem::path(rc.out_dir) / "stein_agg.csv");
        sfa::write_stein_agg_csv(res, os);
    }
    std::cout << "stein diagnostics for '" << field.tag << "': " << res.records.size()
              << " records over " << res.aggregates.size() << " time indices\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"neural score-field training, conservativity audits and sampling"};
    app.require_subcommand(1);

    CommonArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train the neural field, write checkpoint + loss trace");
    add_common(train_cmd, train_args);

    CommonArgs audit_args;
    FieldArgs audit_field;
    CLI::App* audit_cmd = app.add_subcommand("audit", "closed-loop and Jacobian audits of a field");
    add_common(audit_cmd, audit_args);
    audit_cmd->add_option("--checkpoint", audit_field.checkpoint, "trained field checkpoint");
    audit_cmd->add_flag("--analytic", audit_field.analytic, "audit the analytic score field");
    audit_cmd->add_option("--curl", audit_field.curl_amplitude, "audit the curl-perturbed field")
        ->trigger_on_parse()
        ->each([&audit_field](const std::string&) { audit_field.has_curl = true; });

    CommonArgs sample_args;
    FieldArgs sample_field;
    std::string sample_method;
    CLI::App* sample_cmd = app.add_subcommand("sample", "generate samples by probability-flow ODE or reverse SDE");
    add_common(sample_cmd, sample_args);
    sample_cmd->add_option("--checkpoint", sample_field.checkpoint, "trained field checkpoint");
    sample_cmd->add_flag("--analytic", sample_field.analytic, "sample with the analytic score field");
    sample_cmd->add_option("--method", sample_method, "ode | sde");

    CommonArgs stein_args;
    FieldArgs stein_field;
    CLI::App* stein_cmd = app.add_subcommand("stein", "error-field Stein diagnostics of a checkpoint");
    add_common(stein_cmd, stein_args);
    stein_cmd->add_option("--checkpoint", stein_field.checkpoint, "trained field checkpoint")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (audit_cmd->parsed()) return cmd_audit(audit_args, audit_field);
        if (sample_cmd->parsed()) return cmd_sample(sample_args, sample_field, sample_method);
        if (stein_cmd->parsed()) return cmd_stein(stein_args, stein_field);
    } catch (const sfa::ConfigError& e) {
        if (e.line > 0)
            std::cerr << "config error (line " << e.line << "): " << e.what() << "\n";
        else
            std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const sfa::MismatchError& e) {
        std::cerr << "input mismatch: " << e.what() << "\n";
        return kExitMismatch;
    } catch (const sfa::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
