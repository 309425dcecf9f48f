#ifndef VESSELGAN_TRAINER_CHECKPOINT_HPP
#define VESSELGAN_TRAINER_CHECKPOINT_HPP

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vesselgan/trainer/trainer.hpp"

namespace vesselgan {

// Single-file checkpoint: JSON header (config snapshot, step, epoch), then
// layer-name-keyed float records for both networks' parameters, batch-norm
// buffers, and Adam moments. RNG streams are counter-derived from
// (seed, step), so the step index alone restores them.
inline constexpr char kCheckpointMagic[4] = {'V', 'G', 'C', 'K'};

namespace ckpt_detail {

inline void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<char*>(b), 4);
}
inline uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
}

template <typename T>
void put_record(std::ostream& os, const std::string& name, const Tensor<T>& t) {
    put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<uint32_t>(sizeof(T)));
    put_u32(os, static_cast<uint32_t>(t.rank()));
    for (size_t i = 0; i < t.rank(); ++i) put_u32(os, static_cast<uint32_t>(t.dim(i)));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * static_cast<int64_t>(sizeof(T))));
}

template <typename T>
std::pair<std::string, Tensor<T>> get_record(std::istream& is) {
    const uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const uint32_t elem = get_u32(is);
    if (elem != sizeof(T)) throw io_error("checkpoint scalar width mismatch");
    const uint32_t rank = get_u32(is);
    std::vector<int64_t> dims;
    for (uint32_t i = 0; i < rank; ++i) dims.push_back(get_u32(is));
    Tensor<T> t(dims);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * static_cast<int64_t>(sizeof(T))));
    if (!is.good()) throw io_error("checkpoint truncated");
    return {name, std::move(t)};
}

}  // namespace ckpt_detail

template <typename T>
void save_checkpoint(const std::string& path, GanModel<T>& model, int64_t epoch) {
    std::ofstream os(path, std::ios::binary);
    if (!os.good()) throw io_error("cannot write " + path);
    os.write(kCheckpointMagic, 4);
    ckpt_detail::put_u32(os, 1);

    nlohmann::json hdr;
    hdr["config"] = model.cfg.to_map();
    hdr["config_hash"] = model.cfg.hash();
    hdr["epoch"] = epoch;
    hdr["step"] = model.step;
    hdr["opt_d_t"] = model.opt_d.timestep();
    hdr["opt_g_t"] = model.opt_g.timestep();
    const std::string text = hdr.dump();
    ckpt_detail::put_u32(os, static_cast<uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));

    std::vector<std::pair<std::string, const Tensor<T>*>> records;
    for (auto& p : model.d.parameters()) records.push_back({"d/" + p.name, p.value});
    for (auto& p : model.g.parameters()) records.push_back({"g/" + p.name, p.value});
    for (auto& [name, buf] : model.d.buffers()) records.push_back({"d_buf/" + name, buf});
    for (auto& [name, buf] : model.g.buffers()) records.push_back({"g_buf/" + name, buf});
    for (auto& [name, st] : model.opt_d.states()) {
        records.push_back({"adam_d/m/" + name, &st.m});
        records.push_back({"adam_d/v/" + name, &st.v});
    }
    for (auto& [name, st] : model.opt_g.states()) {
        records.push_back({"adam_g/m/" + name, &st.m});
        records.push_back({"adam_g/v/" + name, &st.v});
    }
    ckpt_detail::put_u32(os, static_cast<uint32_t>(records.size()));
    for (const auto& [name, t] : records) ckpt_detail::put_record(os, name, *t);
    if (!os.good()) throw io_error("short write to " + path);
}

// Rebuilds the model from the stored config and restores every tensor.
template <typename T>
GanModel<T> load_checkpoint(const std::string& path, int64_t* epoch_out = nullptr) {
    std::ifstream is(path, std::ios::binary);
    if (!is.good()) throw io_error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw io_error(path + ": bad magic");
    if (ckpt_detail::get_u32(is) != 1) throw io_error(path + ": unsupported version");
    const uint32_t hdr_len = ckpt_detail::get_u32(is);
    std::string text(hdr_len, '\0');
    is.read(text.data(), hdr_len);
    const auto hdr = nlohmann::json::parse(text);

    TrainConfig cfg;
    for (const auto& [k, v] : hdr.at("config").items()) cfg.apply(k, v.get<std::string>());
    GanModel<T> model = GanModel<T>::create(cfg);
    model.step = hdr.at("step").get<int64_t>();
    model.opt_d.set_timestep(hdr.at("opt_d_t").get<int64_t>());
    model.opt_g.set_timestep(hdr.at("opt_g_t").get<int64_t>());
    if (epoch_out) *epoch_out = hdr.at("epoch").get<int64_t>();

    std::map<std::string, Tensor<T>*> slots;
    for (auto& p : model.d.parameters()) slots["d/" + p.name] = p.value;
    for (auto& p : model.g.parameters()) slots["g/" + p.name] = p.value;
    for (auto& [name, buf] : model.d.buffers()) slots["d_buf/" + name] = buf;
    for (auto& [name, buf] : model.g.buffers()) slots["g_buf/" + name] = buf;

    const uint32_t count = ckpt_detail::get_u32(is);
    for (uint32_t i = 0; i < count; ++i) {
        auto [name, t] = ckpt_detail::get_record<T>(is);
        if (name.starts_with("adam_d/") || name.starts_with("adam_g/")) {
            auto& opt = name.starts_with("adam_d/") ? model.opt_d : model.opt_g;
            const bool is_m = name[7] == 'm';
            const std::string pname = name.substr(9);
            auto& st = opt.states()[pname];
            (is_m ? st.m : st.v) = std::move(t);
        } else {
            auto it = slots.find(name);
            if (it == slots.end()) throw io_error(path + ": unknown record " + name);
            if (it->second->dims() != t.dims())
                throw io_error(path + ": record " + name + " has mismatched shape");
            *it->second = std::move(t);
        }
    }
    return model;
}

}  // namespace vesselgan

#endif
