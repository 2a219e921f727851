#include "autoedit/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "autoedit/errors.hpp"

namespace autoedit {

namespace {

using json = nlohmann::ordered_json;

json space_to_json(const HyperSpace& space) {
    json heads = json::array();
    for (const auto& h : space.heads) {
        json j;
        j["name"] = h.name;
        j["kind"] = head_kind_name(h.kind);
        j["values"] = h.values;
        j["default_index"] = h.default_index;
        heads.push_back(j);
    }
    return json{{"heads", heads}};
}

HyperSpace space_from_json(const json& j) {
    HyperSpace space;
    for (const auto& h : j.at("heads")) {
        HeadSpec head;
        head.name = h.at("name").get<std::string>();
        head.kind = head_kind_from_name(h.at("kind").get<std::string>());
        for (const auto& v : h.at("values")) head.values.push_back(v.get<double>());
        head.default_index = h.at("default_index").get<int>();
        space.heads.push_back(std::move(head));
    }
    validate_space(space);
    return space;
}

json net_to_json(const NetParams& net) {
    json cfg;
    cfg["D"] = net.cfg.D;
    cfg["F"] = net.cfg.F;
    cfg["Fc"] = net.cfg.Fc;
    cfg["E"] = net.cfg.E;
    cfg["Ft"] = net.cfg.Ft;
    cfg["H"] = net.cfg.H;
    cfg["head_sizes"] = net.cfg.head_sizes;

    json layers = json::array();
    for_each_layer(const_cast<NetParams&>(net), [&](const char* name, LayerParams& l) {
        json layer;
        layer["name"] = name;
        layer["rows"] = l.w.rows;
        layer["cols"] = l.w.cols;
        layer["w"] = l.w.data;
        layer["b"] = l.b;
        layers.push_back(std::move(layer));
    });
    return json{{"cfg", cfg}, {"layers", layers}};
}

NetParams net_from_json(const json& j) {
    const json& cfg_json = j.at("cfg");
    NetConfig cfg;
    cfg.D = cfg_json.at("D").get<int>();
    cfg.F = cfg_json.at("F").get<int>();
    cfg.Fc = cfg_json.at("Fc").get<int>();
    cfg.E = cfg_json.at("E").get<int>();
    cfg.Ft = cfg_json.at("Ft").get<int>();
    cfg.H = cfg_json.at("H").get<int>();
    for (const auto& n : cfg_json.at("head_sizes")) cfg.head_sizes.push_back(n.get<int>());

    NetParams net = zero_net(cfg);
    std::size_t slot = 0;
    const json& layers = j.at("layers");
    for_each_layer(net, [&](const char* name, LayerParams& l) {
        if (slot >= layers.size()) throw DataError("checkpoint is missing layers");
        const json& layer = layers[slot++];
        if (layer.at("name").get<std::string>() != name ||
            layer.at("rows").get<int>() != l.w.rows ||
            layer.at("cols").get<int>() != l.w.cols)
            throw DataError("checkpoint layer '" + std::string(name) +
                            "' has unexpected shape");
        const json& w = layer.at("w");
        const json& b = layer.at("b");
        if (w.size() != l.w.data.size() || b.size() != l.b.size())
            throw DataError("checkpoint tensor size mismatch in '" + std::string(name) + "'");
        for (std::size_t i = 0; i < l.w.data.size(); ++i) l.w.data[i] = w[i].get<double>();
        for (std::size_t i = 0; i < l.b.size(); ++i) l.b[i] = b[i].get<double>();
    });
    if (slot != layers.size()) throw DataError("checkpoint has extra layers");
    return net;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    json doc;
    doc["format"] = "autoedit-checkpoint";
    doc["version"] = 1;
    doc["phase"] = ckpt.phase;
    doc["config_hash"] = ckpt.config_hash;
    doc["seed"] = ckpt.seed;
    doc["space"] = space_to_json(ckpt.space);
    doc["policy"] = net_to_json(ckpt.policy);
    if (ckpt.value) doc["value"] = net_to_json(*ckpt.value);
    out << doc.dump() << "\n";
    if (!out) throw DataError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception&) {
        throw DataError("corrupt checkpoint (not valid JSON): " + path);
    }
    try {
        if (doc.at("format").get<std::string>() != "autoedit-checkpoint")
            throw DataError("not a checkpoint file: " + path);
        if (doc.at("version").get<int>() != 1)
            throw DataError("unsupported checkpoint version in " + path);
        Checkpoint ckpt;
        ckpt.phase = doc.at("phase").get<int>();
        ckpt.config_hash = doc.at("config_hash").get<std::string>();
        ckpt.seed = doc.at("seed").get<std::uint64_t>();
        ckpt.space = space_from_json(doc.at("space"));
        ckpt.policy = net_from_json(doc.at("policy"));
        if (doc.contains("value")) ckpt.value = net_from_json(doc.at("value"));
        return ckpt;
    } catch (const json::exception& e) {
        throw DataError("corrupt checkpoint (" + std::string(e.what()) + "): " + path);
    }
}

}  // namespace autoedit
