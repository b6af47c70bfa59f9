#include "hfgpi/config.hpp"

#include <sstream>

#include "hfgpi/io.hpp"

namespace hfgpi {

std::string drop_modality_name(DropModality d) {
    switch (d) {
        case DropModality::None: return "none";
        case DropModality::Genes: return "genes";
        case DropModality::Proteins: return "proteins";
        case DropModality::Patches: return "patches";
    }
    throw ConfigError("unknown drop modality");
}

DropModality parse_drop_modality(const std::string& s) {
    if (s == "none") return DropModality::None;
    if (s == "genes") return DropModality::Genes;
    if (s == "proteins") return DropModality::Proteins;
    if (s == "patches") return DropModality::Patches;
    throw ConfigError("drop modality must be one of none|genes|proteins|patches, got '" + s + "'");
}

std::string config_echo(const RunConfig& c) {
    std::ostringstream out;
    out << "ng=" << c.ng << '\n'
        << "kg=" << c.kg << '\n'
        << "kp=" << c.kp << '\n'
        << "topk=" << c.topk << '\n'
        << "d=" << c.d << '\n'
        << "heads=" << c.heads << '\n'
        << "layers=" << c.layers << '\n'
        << "d_attn=" << c.d_attn << '\n'
        << "bins=" << c.bins << '\n'
        << "zscore_proteins=" << (c.zscore_proteins ? 1 : 0) << '\n'
        << "lambda=" << io::format_double(c.lambda) << '\n'
        << "lr=" << io::format_double(c.lr) << '\n'
        << "weight_decay=" << io::format_double(c.weight_decay) << '\n'
        << "epochs=" << c.epochs << '\n'
        << "accumulation=" << c.accumulation << '\n'
        << "folds=" << c.folds << '\n'
        << "val_fraction=" << io::format_double(c.val_fraction) << '\n'
        << "seed=" << c.seed << '\n'
        << "drop=" << drop_modality_name(c.drop) << '\n';
    return out.str();
}

RunConfig parse_config_echo(const std::string& echo) {
    RunConfig c;
    std::istringstream in(echo);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config echo: expected key=value, got '" + line + "'");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        auto as_size = [&] { return static_cast<std::size_t>(std::stoull(value)); };
        if (key == "ng") c.ng = as_size();
        else if (key == "kg") c.kg = as_size();
        else if (key == "kp") c.kp = as_size();
        else if (key == "topk") c.topk = as_size();
        else if (key == "d") c.d = as_size();
        else if (key == "heads") c.heads = as_size();
        else if (key == "layers") c.layers = as_size();
        else if (key == "d_attn") c.d_attn = as_size();
        else if (key == "bins") c.bins = as_size();
        else if (key == "zscore_proteins") c.zscore_proteins = value == "1";
        else if (key == "lambda") c.lambda = io::parse_double(value, "config echo lambda");
        else if (key == "lr") c.lr = io::parse_double(value, "config echo lr");
        else if (key == "weight_decay") c.weight_decay = io::parse_double(value, "config echo weight_decay");
        else if (key == "epochs") c.epochs = as_size();
        else if (key == "accumulation") c.accumulation = as_size();
        else if (key == "folds") c.folds = as_size();
        else if (key == "val_fraction") c.val_fraction = io::parse_double(value, "config echo val_fraction");
        else if (key == "seed") c.seed = std::stoull(value);
        else if (key == "drop") c.drop = parse_drop_modality(value);
        else throw ConfigError("config echo: unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

} // namespace hfgpi
