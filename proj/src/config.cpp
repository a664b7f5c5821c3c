#include "sfa/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace sfa {

namespace {
std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}
} // namespace

ConfigMap ConfigMap::parse_text(const std::string& text, const std::string& origin) {
    ConfigMap cm;
    cm.origin_ = origin;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ": expected 'key = value'", line_no);
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ": empty key", line_no);
        if (cm.kv_.count(key)) throw ConfigError(origin + ": duplicate key '" + key + "'", line_no);
        cm.kv_[key] = Entry{value, line_no, false};
    }
    return cm;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_text(buf.str(), path);
}

void ConfigMap::set_override(const std::string& key, const std::string& value) {
    kv_[key] = Entry{value, 0, false};
}

const ConfigMap::Entry* ConfigMap::find(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
}

bool ConfigMap::has(const std::string& key) const { return find(key) != nullptr; }

std::string ConfigMap::get_str(const std::string& key, const std::string& fallback) {
    const Entry* e = find(key);
    return e ? e->value : fallback;
}

std::string ConfigMap::require_str(const std::string& key) {
    const Entry* e = find(key);
    if (!e) throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return e->value;
}

long long ConfigMap::get_int(const std::string& key, long long fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    try {
        size_t pos = 0;
        const long long v = std::stoll(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(origin_ + ": key '" + key + "' is not an integer", e->line);
    }
}

uint64_t ConfigMap::get_u64(const std::string& key, uint64_t fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    try {
        size_t pos = 0;
        const unsigned long long v = std::stoull(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(origin_ + ": key '" + key + "' is not an unsigned integer", e->line);
    }
}

double ConfigMap::get_double(const std::string& key, double fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    try {
        size_t pos = 0;
        const double v = std::stod(e->value, &pos);
        if (pos != e->value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(origin_ + ": key '" + key + "' is not a number", e->line);
    }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    throw ConfigError(origin_ + ": key '" + key + "' is not a boolean", e->line);
}

std::vector<int> ConfigMap::get_ints(const std::string& key, const std::vector<int>& fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::istringstream is(e->value);
    std::vector<int> out;
    std::string tok;
    while (is >> tok) {
        try {
            size_t pos = 0;
            out.push_back(std::stoi(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument("");
        } catch (...) {
            throw ConfigError(origin_ + ": key '" + key + "' has a non-integer entry", e->line);
        }
    }
    if (out.empty()) throw ConfigError(origin_ + ": key '" + key + "' is empty", e->line);
    return out;
}

std::vector<double> ConfigMap::get_doubles(const std::string& key,
                                           const std::vector<double>& fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::istringstream is(e->value);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) {
        try {
            size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument("");
        } catch (...) {
            throw ConfigError(origin_ + ": key '" + key + "' has a non-numeric entry", e->line);
        }
    }
    if (out.empty()) throw ConfigError(origin_ + ": key '" + key + "' is empty", e->line);
    return out;
}

void ConfigMap::reject_unknown() const {
    for (const auto& [key, entry] : kv_)
        if (!entry.used)
            throw ConfigError(origin_ + ": unknown key '" + key + "'", entry.line);
}

namespace {
GaussianMixture mixture_from_config(ConfigMap& cm) {
    const std::string preset = cm.get_str("preset", "");
    if (!preset.empty()) {
        const int dim = static_cast<int>(cm.get_int("mixture.d", 8));
        return make_preset(preset, dim);
    }
    GaussianMixture g;
    g.dim = static_cast<int>(cm.get_int("mixture.d", 0));
    if (g.dim <= 0) throw ConfigError("config: need 'preset' or an explicit 'mixture.d'");
    const std::vector<double> w = cm.get_doubles("mixture.weights", {});
    g.weights = Vec(w.begin(), w.end());
    for (size_t i = 0; i < w.size(); ++i) {
        const std::string mk = "mixture.mean." + std::to_string(i);
        const std::string vk = "mixture.var." + std::to_string(i);
        const std::vector<double> mu = cm.get_doubles(mk, {});
        const std::vector<double> var = cm.get_doubles(vk, {});
        if (static_cast<int>(mu.size()) != g.dim || static_cast<int>(var.size()) != g.dim)
            throw ConfigError("config: '" + mk + "'/'" + vk + "' must list exactly mixture.d values");
        g.means.emplace_back(mu.begin(), mu.end());
        g.variances.emplace_back(var.begin(), var.end());
    }
    try {
        g.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid mixture: ") + e.what());
    }
    return g;
}
} // namespace

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides,
                          std::optional<uint64_t> seed_override) {
    ConfigMap cm = ConfigMap::parse_file(path);
    for (const std::string& ov : overrides) {
        const size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + ov + "'");
        cm.set_override(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }

    RunConfig rc;
    if (seed_override) {
        rc.seed = *seed_override;
        cm.get_u64("seed", 0); // mark used if present; the flag wins
    } else {
        if (!cm.has("seed"))
            throw ConfigError("config: 'seed' is required (pass it in the file or via --seed)");
        rc.seed = cm.get_u64("seed", 0);
    }

    rc.gmm = mixture_from_config(cm);

    const int T = static_cast<int>(cm.get_int("schedule.T", 1000));
    const double offset = cm.get_double("schedule.offset", 0.008);
    const double clamp = cm.get_double("schedule.clamp", 10.0);
    try {
        rc.schedule = make_schedule(T, offset, clamp);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid schedule: ") + e.what());
    }

    rc.out_dir = cm.get_str("out", "out");
    const std::string exec = cm.get_str("exec", "parallel");
    if (exec == "serial")
        rc.exec = Exec::Serial;
    else if (exec == "parallel")
        rc.exec = Exec::Parallel;
    else
        throw ConfigError("config: exec must be 'serial' or 'parallel'");

    rc.train.steps = static_cast<int>(cm.get_int("train.steps", 20000));
    rc.train.batch = static_cast<int>(cm.get_int("train.batch", 256));
    rc.train.lr = cm.get_double("train.lr", 1e-3);
    rc.train.lr_schedule = cm.get_str("train.lr_schedule", "cosine");
    rc.train.beta1 = cm.get_double("train.beta1", 0.9);
    rc.train.beta2 = cm.get_double("train.beta2", 0.999);
    rc.train.hidden = cm.get_ints("train.hidden", {128, 128, 128});
    rc.train.emb_dim = static_cast<int>(cm.get_int("train.emb", 16));
    rc.train.grad_chunks = static_cast<int>(cm.get_int("train.chunks", 16));
    rc.train.master_seed = rc.seed;
    try {
        rc.train.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid training setup: ") + e.what());
    }

    rc.audit.ks = cm.get_ints("audit.k", {50, 100, 250, 500, 750, 900, 950});
    rc.audit.samples_per_k = static_cast<int>(cm.get_int("audit.samples", 256));
    {
        std::istringstream is(cm.get_str("audit.kinds", "brownian rotation projection"));
        rc.audit.brownian = rc.audit.rotation = rc.audit.projection = false;
        std::string tok;
        while (is >> tok) {
            if (tok == "brownian")
                rc.audit.brownian = true;
            else if (tok == "rotation")
                rc.audit.rotation = true;
            else if (tok == "projection")
                rc.audit.projection = true;
            else
                throw ConfigError("config: unknown path kind '" + tok + "' in audit.kinds");
        }
        if (!rc.audit.brownian && !rc.audit.rotation && !rc.audit.projection)
            throw ConfigError("config: audit.kinds selects no generator");
    }
    rc.audit.brownian_n = static_cast<int>(cm.get_int("audit.brownian.n", 1000));
    rc.audit.brownian_horizon = cm.get_double("audit.brownian.U", 9.0);
    rc.audit.rotation_n = static_cast<int>(cm.get_int("audit.rotation.n", 1000));
    rc.audit.proj_anchors = static_cast<int>(cm.get_int("audit.projection.anchors", 4));
    rc.audit.proj_n_per_segment = static_cast<int>(cm.get_int("audit.projection.n_per_segment", 256));
    rc.audit.pair_budget = static_cast<int>(cm.get_int("audit.pair_budget", 4096));
    rc.audit.floor_subdivision = static_cast<int>(cm.get_int("audit.floor_subdivision", 8));
    if (rc.audit.floor_subdivision < 2)
        throw ConfigError("config: audit.floor_subdivision must be >= 2");
    rc.audit.master_seed = rc.seed;
    for (int k : rc.audit.ks)
        if (k < 1 || k > T) throw ConfigError("config: audit.k entries must lie in {1..T}");

    rc.sample_method = cm.get_str("sample.method", "ode");
    if (rc.sample_method != "ode" && rc.sample_method != "sde")
        throw ConfigError("config: sample.method must be 'ode' or 'sde'");
    rc.sample_steps = static_cast<int>(cm.get_int("sample.steps", 499));
    rc.sample_batch = static_cast<int>(cm.get_int("sample.batch", 10000));
    if (rc.sample_steps < 1 || rc.sample_batch < 1)
        throw ConfigError("config: sample.steps and sample.batch must be positive");

    rc.stein_ks = cm.get_ints("stein.k", rc.audit.ks);
    rc.stein_samples = static_cast<int>(cm.get_int("stein.samples", 256));
    for (int k : rc.stein_ks)
        if (k < 1 || k > T) throw ConfigError("config: stein.k entries must lie in {1..T}");

    cm.reject_unknown();
    return rc;
}

} // namespace sfa
