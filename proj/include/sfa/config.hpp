#pragma once

#include "sfa/audit.hpp"
#include "sfa/errors.hpp"
#include "sfa/train.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sfa {

/// Flat `key = value` configuration with `#` comments and dotted namespaces.
/// Every key carries its source line so errors point at the offending place,
/// and unknown keys are rejected after assembly.
class ConfigMap {
  public:
    static ConfigMap parse_file(const std::string& path);
    static ConfigMap parse_text(const std::string& text, const std::string& origin = "<text>");

    void set_override(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback);
    std::string require_str(const std::string& key);
    long long get_int(const std::string& key, long long fallback);
    uint64_t get_u64(const std::string& key, uint64_t fallback);
    double get_double(const std::string& key, double fallback);
    bool get_bool(const std::string& key, bool fallback);
    std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback);
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback);

    // throws ConfigError naming the first key never read by any accessor
    void reject_unknown() const;

  private:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };
    std::map<std::string, Entry> kv_;
    std::string origin_;

    const Entry* find(const std::string& key) const;
};

struct RunConfig {
    GaussianMixture gmm;
    Schedule schedule;
    TrainConfig train;
    AuditSpec audit;
    std::string sample_method = "ode";
    int sample_steps = 499;
    int sample_batch = 10000;
    std::vector<int> stein_ks;
    int stein_samples = 256;
    uint64_t seed = 0;
    std::string out_dir = "out";
    Exec exec = Exec::Parallel;
};

// assemble and validate a run configuration; the seed must be present either
// in the file or as an override (no silent nondeterminism)
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides,
                          std::optional<uint64_t> seed_override);

} // namespace sfa
