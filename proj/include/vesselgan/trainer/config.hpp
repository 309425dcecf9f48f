#ifndef VESSELGAN_TRAINER_CONFIG_HPP
#define VESSELGAN_TRAINER_CONFIG_HPP

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "vesselgan/nets/spec.hpp"

namespace vesselgan {

enum class GenObjective { feature_matching, vanilla };

inline const char* to_string(GenObjective o) {
    return o == GenObjective::feature_matching ? "feature_matching" : "vanilla";
}
inline GenObjective objective_from_string(const std::string& s) {
    if (s == "feature_matching" || s == "fm") return GenObjective::feature_matching;
    if (s == "vanilla") return GenObjective::vanilla;
    throw config_error("unknown generator objective: " + s);
}

struct TrainConfig {
    double lr_d = 1e-4;
    double lr_g = 1e-4;
    int64_t batch_size = 64;
    int64_t epochs = 50;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    GenObjective generator_objective = GenObjective::feature_matching;
    bool generator_raw_form = false;  // vanilla objective: literal -L_adv
    std::string matching_layer = "Con1";
    HeadKind head = HeadKind::structured;
    PoolKind pooling = PoolKind::average;
    NormKind norm = NormKind::weight;
    UpsampleKind upsample = UpsampleKind::nearest;
    double dropout_keep = 0.8;
    int64_t z_dim = 100;
    int64_t patch_size = 48;
    uint64_t seed = 0;
    double val_fraction = 0.1;
    // Loss-term scalar weights; 1 everywhere reproduces the plain sum. The
    // unsupervised/adversarial switches exist for the ablations.
    double w_sup = 1.0;
    double w_adv = 1.0;
    double w_unsup = 1.0;
    bool unsup_enabled = true;
    bool adv_enabled = true;

    void validate() const {
        if (lr_d < 0 || lr_g < 0) throw config_error("learning rates must be >= 0");
        if (batch_size < 2) throw config_error("batch_size must be >= 2");
        if (epochs < 1) throw config_error("epochs must be >= 1");
        if (!(dropout_keep > 0 && dropout_keep <= 1))
            throw config_error("dropout_keep must lie in (0,1]");
        if (val_fraction < 0 || val_fraction >= 1)
            throw config_error("val_fraction must lie in [0,1)");
    }

    std::map<std::string, std::string> to_map() const {
        std::map<std::string, std::string> m;
        auto put = [&](const char* k, auto v) {
            std::ostringstream os;
            os << v;
            m[k] = os.str();
        };
        put("lr_d", lr_d);
        put("lr_g", lr_g);
        put("batch_size", batch_size);
        put("epochs", epochs);
        put("adam_beta1", adam_beta1);
        put("adam_beta2", adam_beta2);
        m["generator_objective"] = to_string(generator_objective);
        put("generator_raw_form", generator_raw_form ? 1 : 0);
        m["matching_layer"] = matching_layer;
        m["head"] = to_string(head);
        m["pooling"] = to_string(pooling);
        m["norm"] = to_string(norm);
        m["upsample"] = upsample == UpsampleKind::nearest ? "nearest" : "bilinear";
        put("dropout_keep", dropout_keep);
        put("z_dim", z_dim);
        put("patch_size", patch_size);
        put("seed", seed);
        put("val_fraction", val_fraction);
        put("w_sup", w_sup);
        put("w_adv", w_adv);
        put("w_unsup", w_unsup);
        put("unsup_enabled", unsup_enabled ? 1 : 0);
        put("adv_enabled", adv_enabled ? 1 : 0);
        return m;
    }

    void apply(const std::string& key, const std::string& value) {
        auto as_double = [&] { return std::stod(value); };
        auto as_int = [&] { return std::stoll(value); };
        auto as_bool = [&] { return value == "1" || value == "true"; };
        if (key == "lr_d") lr_d = as_double();
        else if (key == "lr_g") lr_g = as_double();
        else if (key == "batch_size") batch_size = as_int();
        else if (key == "epochs") epochs = as_int();
        else if (key == "adam_beta1") adam_beta1 = as_double();
        else if (key == "adam_beta2") adam_beta2 = as_double();
        else if (key == "generator_objective") generator_objective = objective_from_string(value);
        else if (key == "generator_raw_form") generator_raw_form = as_bool();
        else if (key == "matching_layer") matching_layer = value;
        else if (key == "head") head = head_from_string(value);
        else if (key == "pooling") pooling = pool_from_string(value);
        else if (key == "norm") norm = norm_from_string(value);
        else if (key == "upsample")
            upsample = value == "bilinear" ? UpsampleKind::bilinear : UpsampleKind::nearest;
        else if (key == "dropout_keep") dropout_keep = as_double();
        else if (key == "z_dim") z_dim = as_int();
        else if (key == "patch_size") patch_size = as_int();
        else if (key == "seed") seed = static_cast<uint64_t>(as_int());
        else if (key == "val_fraction") val_fraction = as_double();
        else if (key == "w_sup") w_sup = as_double();
        else if (key == "w_adv") w_adv = as_double();
        else if (key == "w_unsup") w_unsup = as_double();
        else if (key == "unsup_enabled") unsup_enabled = as_bool();
        else if (key == "adv_enabled") adv_enabled = as_bool();
        else throw config_error("unknown config key: " + key);
    }

    uint64_t hash() const {
        std::string all;
        for (const auto& [k, v] : to_map()) all += k + "=" + v + ";";
        uint64_t h = 14695981039346656037ULL;
        for (unsigned char c : all) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }
};

// Flat key=value text; '#' starts a comment.
inline TrainConfig load_train_config(const std::string& path, TrainConfig base = {}) {
    std::ifstream in(path);
    if (!in.good()) throw config_error("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        try {
            base.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::invalid_argument&) {
            throw config_error(path + ":" + std::to_string(lineno) + ": bad numeric value");
        }
    }
    base.validate();
    return base;
}

}  // namespace vesselgan

#endif
