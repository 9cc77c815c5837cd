#include "acam/config.hpp"
#include "acam/tensor.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace acam {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return {};
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    throw format_error(origin + ":" + std::to_string(line) + ": " + what);
}

long long parse_int(const std::string& v, const std::string& origin, int line,
                    const std::string& key) {
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        fail(origin, line, "key '" + key + "': not an integer: '" + v + "'");
    return out;
}

double parse_real(const std::string& v, const std::string& origin, int line,
                  const std::string& key) {
    try {
        std::size_t pos = 0;
        double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        fail(origin, line, "key '" + key + "': not a number: '" + v + "'");
    }
}

bool parse_bool(const std::string& v, const std::string& origin, int line,
                const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(origin, line, "key '" + key + "': expected true/false: '" + v + "'");
}

} // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    };
    return {
        {"scales", std::to_string(scales)},
        {"n_classifiers", std::to_string(n_classifiers)},
        {"categories", std::to_string(categories)},
        {"epochs", std::to_string(epochs)},
        {"lr", fmt(lr)},
        {"momentum", fmt(momentum)},
        {"batch_size", std::to_string(batch_size)},
        {"image_size", std::to_string(image_size)},
        {"margin_fraction", fmt(margin_fraction)},
        {"freeze_backbone", freeze_backbone ? "true" : "false"},
        {"seed", std::to_string(seed)},
        {"otsu_bins", std::to_string(otsu_bins)},
        {"aggregate_on", aggregate_on == AggregateOn::Probs ? "probs" : "logits"},
    };
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (std::size_t hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(origin, lineno, "expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "scales") {
            long long v = parse_int(val, origin, lineno, key);
            if (v < 1 || v > 16) fail(origin, lineno, "key 'scales': out of range [1,16]");
            cfg.scales = static_cast<int>(v);
        } else if (key == "n_classifiers") {
            long long v = parse_int(val, origin, lineno, key);
            if (v < 1 || v > 1024) fail(origin, lineno, "key 'n_classifiers': out of range [1,1024]");
            cfg.n_classifiers = static_cast<int>(v);
        } else if (key == "categories") {
            long long v = parse_int(val, origin, lineno, key);
            if (v < 2 || v > 100000) fail(origin, lineno, "key 'categories': out of range [2,100000]");
            cfg.categories = static_cast<int>(v);
        } else if (key == "epochs") {
            long long v = parse_int(val, origin, lineno, key);
            if (v < 0 || v > 1000000) fail(origin, lineno, "key 'epochs': out of range [0,1000000]");
            cfg.epochs = static_cast<int>(v);
        } else if (key == "lr") {
            double v = parse_real(val, origin, lineno, key);
            if (!(v > 0.0) || v > 1e3) fail(origin, lineno, "key 'lr': out of range (0,1e3]");
            cfg.lr = v;
        } else if (key == "momentum") {
            double v = parse_real(val, origin, lineno, key);
            if (v < 0.0 || v >= 1.0) fail(origin, lineno, "key 'momentum': out of range [0,1)");
            cfg.momentum = v;
        } else if (key == "batch_size") {
            long long v = parse_int(val, origin, lineno, key);
            if (v < 1 || v > 1000000) fail(origin, lineno, "key 'batch_size': out of range [1,1000000]");
            cfg.batch_size = static_cast<int>(v);
        } else if (key == "image_size") {
            long long v = parse_int(val, origin, lineno, key);
            if (v < 8 || v > 8192) fail(origin, lineno, "key 'image_size': out of range [8,8192]");
            cfg.image_size = static_cast<int>(v);
        } else if (key == "margin_fraction") {
            double v = parse_real(val, origin, lineno, key);
            if (v < 0.0 || v > 1.0) fail(origin, lineno, "key 'margin_fraction': out of range [0,1]");
            cfg.margin_fraction = v;
        } else if (key == "freeze_backbone") {
            cfg.freeze_backbone = parse_bool(val, origin, lineno, key);
        } else if (key == "seed") {
            long long v = parse_int(val, origin, lineno, key);
            if (v < 0) fail(origin, lineno, "key 'seed': must be nonnegative");
            cfg.seed = static_cast<std::uint64_t>(v);
        } else if (key == "otsu_bins") {
            long long v = parse_int(val, origin, lineno, key);
            if (v < 2 || v > 65536) fail(origin, lineno, "key 'otsu_bins': out of range [2,65536]");
            cfg.otsu_bins = static_cast<int>(v);
        } else if (key == "aggregate_on") {
            if (val == "probs")
                cfg.aggregate_on = AggregateOn::Probs;
            else if (val == "logits")
                cfg.aggregate_on = AggregateOn::Logits;
            else
                fail(origin, lineno, "key 'aggregate_on': expected probs or logits");
        } else {
            fail(origin, lineno, "unknown key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open config: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

} // namespace acam
