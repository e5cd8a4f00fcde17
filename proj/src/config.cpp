#include "bgsep/config.hpp"

#include "bgsep/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bgsep {

const char* to_string(SplineNormalization v) {
    switch (v) {
        case SplineNormalization::none: return "none";
        case SplineNormalization::unit_prototype: return "unit_prototype";
        case SplineNormalization::unit_restricted: return "unit_restricted";
    }
    return "?";
}

const char* to_string(NoiseMode v) {
    return v == NoiseMode::relative_std ? "relative_std" : "relative_var";
}

const char* to_string(NoiseReference v) { return v == NoiseReference::signal ? "signal" : "data"; }

const char* to_string(DeltaPolicy v) { return v == DeltaPolicy::chi2 ? "chi2" : "expected"; }

NoiseMode parse_noise_mode(const std::string& s) {
    if (s == "relative_std") return NoiseMode::relative_std;
    if (s == "relative_var") return NoiseMode::relative_var;
    throw Error(ErrorCode::config, "unknown noise mode `" + s + "`");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    const auto e = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    return b < e ? std::string(b, e) : std::string();
}

class Reader {
public:
    Reader(std::string source, int line) : source_(std::move(source)), line_(line) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorCode::config, source_ + ":" + std::to_string(line_) + ": " + msg);
    }

    double real(const std::string& v) const {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) fail("trailing characters in number `" + v + "`");
            return d;
        } catch (const std::invalid_argument&) {
            fail("expected a number, got `" + v + "`");
        } catch (const std::out_of_range&) {
            fail("number out of range `" + v + "`");
        }
    }

    long long integer(const std::string& v) const {
        try {
            std::size_t pos = 0;
            const long long i = std::stoll(v, &pos);
            if (pos != v.size()) fail("expected an integer, got `" + v + "`");
            return i;
        } catch (const std::exception&) {
            fail("expected an integer, got `" + v + "`");
        }
    }

    bool boolean(const std::string& v) const {
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail("expected true/false, got `" + v + "`");
    }

    std::uint64_t seed(const std::string& v) const {
        const long long i = integer(v);
        if (i < 0) fail("seeds must be non-negative");
        return static_cast<std::uint64_t>(i);
    }

private:
    std::string source_;
    int line_;
};

void assign(ExperimentConfig& c, const std::string& section, const std::string& key,
            const std::string& value, const Reader& r) {
    auto unknown = [&]() { r.fail("unknown key `" + key + "` in section [" + section + "]"); };
    if (section == "grid") {
        if (key == "a") c.grid_a = r.real(value);
        else if (key == "b") c.grid_b = r.real(value);
        else if (key == "n_points") c.n_points = static_cast<int>(r.integer(value));
        else unknown();
    } else if (section == "basis") {
        if (key == "knot_spacing") c.knot_spacing = r.real(value);
        else if (key == "normalization") {
            if (value == "none") c.spline_normalization = SplineNormalization::none;
            else if (value == "unit_prototype") c.spline_normalization = SplineNormalization::unit_prototype;
            else if (value == "unit_restricted") c.spline_normalization = SplineNormalization::unit_restricted;
            else r.fail("unknown normalization `" + value + "`");
        } else unknown();
    } else if (section == "background") {
        if (key == "count") c.background_count = static_cast<int>(r.integer(value));
        else if (key == "normalize") c.normalize_background = r.boolean(value);
        else if (key == "rank_tol") c.background_rel_tol = r.real(value);
        else unknown();
    } else if (section == "spectrum") {
        if (key == "support_size") c.support_size = static_cast<int>(r.integer(value));
        else if (key == "coeff_min") c.coeff_min = r.real(value);
        else if (key == "coeff_max") c.coeff_max = r.real(value);
        else unknown();
    } else if (section == "noise") {
        if (key == "percent") c.noise_percent = r.real(value);
        else if (key == "mode") {
            if (value == "relative_std") c.noise_mode = NoiseMode::relative_std;
            else if (value == "relative_var") c.noise_mode = NoiseMode::relative_var;
            else r.fail("unknown noise mode `" + value + "`");
        } else if (key == "reference") {
            if (value == "signal") c.noise_reference = NoiseReference::signal;
            else if (value == "data") c.noise_reference = NoiseReference::data;
            else r.fail("unknown noise reference `" + value + "`");
        } else unknown();
    } else if (section == "seeds") {
        if (key == "support") c.seeds.support = r.seed(value);
        else if (key == "coeff") c.seeds.coeff = r.seed(value);
        else if (key == "noise") c.seeds.noise = r.seed(value);
        else unknown();
    } else if (section == "solver") {
        if (key == "q") c.q = r.real(value);
        else if (key == "delta") c.delta = (value == "auto") ? -1.0 : r.real(value);
        else if (key == "delta_policy") {
            if (value == "chi2") c.delta_policy = DeltaPolicy::chi2;
            else if (value == "expected") c.delta_policy = DeltaPolicy::expected;
            else r.fail("unknown delta policy `" + value + "`");
        } else if (key == "delta_safety") c.delta_safety = r.real(value);
        else if (key == "delta_sigmas") c.delta_sigmas = r.real(value);
        else if (key == "max_constraints") c.max_constraints = static_cast<int>(r.integer(value));
        else if (key == "warm_start") c.warm_start = r.boolean(value);
        else if (key == "support_threshold") c.support_threshold = r.real(value);
        else unknown();
    } else if (section == "projector") {
        if (key == "rank_tol") c.projector_rank_tol = r.real(value);
        else if (key == "truncations") c.truncations = static_cast<int>(r.integer(value));
        else unknown();
    } else if (section == "experiment") {
        if (key == "noise_levels") {
            c.experiment_noise_levels.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) c.experiment_noise_levels.push_back(r.real(trim(item)));
            if (c.experiment_noise_levels.empty()) r.fail("noise_levels is empty");
        } else if (key == "realizations") c.realizations = static_cast<int>(r.integer(value));
        else unknown();
    } else {
        r.fail("unknown section [" + section + "]");
    }
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
    ExperimentConfig c;
    std::string section;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const Reader r(source, line_no);
        std::string line = raw;
        if (const auto hash = line.find_first_of("#;"); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') r.fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) r.fail("expected `key = value`");
        if (section.empty()) r.fail("key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) r.fail("empty key or value");
        assign(c, section, key, value, r);
    }
    try {
        c.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::config, source + ": " + e.what());
    }
    return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json manifest;
        try {
            manifest = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::config, path + ": invalid manifest: " + e.what());
        }
        if (!manifest.contains("config") || !manifest["config"].is_string()) {
            throw Error(ErrorCode::config, path + ": manifest has no embedded config");
        }
        std::istringstream cfg(manifest["config"].get<std::string>());
        return parse_config(cfg, path + "#config");
    }
    std::istringstream cfg(text);
    return parse_config(cfg, path);
}

std::string to_config_text(const ExperimentConfig& c) {
    std::ostringstream o;
    o << std::setprecision(17);
    o << "[grid]\n"
      << "a = " << c.grid_a << "\n"
      << "b = " << c.grid_b << "\n"
      << "n_points = " << c.n_points << "\n\n"
      << "[basis]\n"
      << "knot_spacing = " << c.knot_spacing << "\n"
      << "normalization = " << to_string(c.spline_normalization) << "\n\n"
      << "[background]\n"
      << "count = " << c.background_count << "\n"
      << "normalize = " << (c.normalize_background ? "true" : "false") << "\n"
      << "rank_tol = " << c.background_rel_tol << "\n\n"
      << "[spectrum]\n"
      << "support_size = " << c.support_size << "\n"
      << "coeff_min = " << c.coeff_min << "\n"
      << "coeff_max = " << c.coeff_max << "\n\n"
      << "[noise]\n"
      << "percent = " << c.noise_percent << "\n"
      << "mode = " << to_string(c.noise_mode) << "\n"
      << "reference = " << to_string(c.noise_reference) << "\n\n"
      << "[seeds]\n"
      << "support = " << c.seeds.support << "\n"
      << "coeff = " << c.seeds.coeff << "\n"
      << "noise = " << c.seeds.noise << "\n\n"
      << "[solver]\n"
      << "q = " << c.q << "\n";
    if (c.delta < 0.0) o << "delta = auto\n";
    else o << "delta = " << c.delta << "\n";
    o << "delta_policy = " << to_string(c.delta_policy) << "\n"
      << "delta_safety = " << c.delta_safety << "\n"
      << "delta_sigmas = " << c.delta_sigmas << "\n"
      << "max_constraints = " << c.max_constraints << "\n"
      << "warm_start = " << (c.warm_start ? "true" : "false") << "\n"
      << "support_threshold = " << c.support_threshold << "\n\n"
      << "[projector]\n"
      << "rank_tol = " << c.projector_rank_tol << "\n"
      << "truncations = " << c.truncations << "\n\n"
      << "[experiment]\n"
      << "noise_levels = ";
    for (std::size_t i = 0; i < c.experiment_noise_levels.size(); ++i) {
        o << (i ? ", " : "") << c.experiment_noise_levels[i];
    }
    o << "\n"
      << "realizations = " << c.realizations << "\n";
    return o.str();
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return to_config_text(a) == to_config_text(b);
}

}  // namespace bgsep
