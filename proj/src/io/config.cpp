#include "dinsat/io/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dinsat/error.hpp"
#include "text.hpp"

namespace dinsat::io {

std::optional<std::string> KeyValues::find(std::string_view key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    return std::nullopt;
}

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
    KeyValues kv{origin, {}};
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view t = line;
        if (const auto hash = t.find('#'); hash != std::string_view::npos) t = t.substr(0, hash);
        t = detail::trim(t);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string_view::npos) fail(ErrorKind::Config, where + ": expected 'key = value'");
        std::string key(detail::trim(t.substr(0, eq)));
        std::string value(detail::trim(t.substr(eq + 1)));
        if (key.empty()) fail(ErrorKind::Config, where + ": empty key");
        if (kv.find(key)) fail(ErrorKind::Config, where + ": duplicate key '" + key + "'");
        kv.entries.emplace_back(std::move(key), std::move(value));
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str(), path.string());
}

namespace {

using Setter = std::function<void(const std::string&, const std::string&)>;

double to_double(const std::string& v, const std::string& what) {
    double d = 0;
    if (!detail::try_parse_double(v, d)) fail(ErrorKind::Config, what + ": '" + v + "' is not a number");
    return d;
}

long long to_int(const std::string& v, const std::string& what) {
    try {
        return detail::parse_int(v, what);
    } catch (const Error& e) {
        fail(ErrorKind::Config, e.what());
    }
}

std::size_t to_count(const std::string& v, const std::string& what) {
    const long long n = to_int(v, what);
    if (n < 0) fail(ErrorKind::Config, what + ": must be nonnegative");
    return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& v, const std::string& what) {
    const std::string l = detail::lower(v);
    if (l == "true" || l == "yes" || l == "1") return true;
    if (l == "false" || l == "no" || l == "0") return false;
    fail(ErrorKind::Config, what + ": '" + v + "' is not a boolean");
}

void apply(const KeyValues& kv, const std::map<std::string, Setter, std::less<>>& setters,
           std::string_view skip = {}) {
    for (const auto& [k, v] : kv.entries) {
        if (k == skip) continue;
        auto it = setters.find(k);
        if (it == setters.end()) fail(ErrorKind::Config, kv.origin + ": unknown key '" + k + "'");
        it->second(v, kv.origin + ": " + k);
    }
}

}  // namespace

void TrainSettings::validate() const {
    train.validate();
    if (illumination) require(*illumination > 0, ErrorKind::Config, "illumination must be positive");
    require(sample_fraction > 0 && sample_fraction <= 1, ErrorKind::Config, "sample_fraction must lie in (0, 1]");
    if (sample_count) require(*sample_count >= 2, ErrorKind::Config, "sample_count must be at least 2");
    require(ensemble >= 1, ErrorKind::Config, "ensemble must be at least 1");
}

TrainSettings train_settings(const KeyValues& kv, std::optional<TrainMode> mode_override) {
    TrainMode mode = TrainMode::Supervised;
    if (mode_override) mode = *mode_override;
    else if (auto m = kv.find("mode")) mode = train_mode_from_string(*m);

    TrainSettings s;
    s.train = TrainConfig::defaults(mode);
    TrainConfig& c = s.train;
    const std::map<std::string, Setter, std::less<>> setters{
        {"model", [&](auto& v, auto&) { c.model = model_kind_from_string(v); }},
        {"latent", [&](auto& v, auto& w) { c.latent = to_count(v, w); }},
        {"hidden", [&](auto& v, auto& w) { c.hidden = to_count(v, w); }},
        {"lr", [&](auto& v, auto& w) { c.lr = to_double(v, w); }},
        {"lambda", [&](auto& v, auto& w) { c.lambda_fd = to_double(v, w); }},
        {"lambda1", [&](auto& v, auto& w) { c.lambda_rho = to_double(v, w); }},
        {"lambda2", [&](auto& v, auto& w) { c.lambda_t = to_double(v, w); }},
        {"lambda3", [&](auto& v, auto& w) { c.lambda_slope = to_double(v, w); }},
        {"max_epochs", [&](auto& v, auto& w) { c.max_epochs = static_cast<int>(to_int(v, w)); }},
        {"patience", [&](auto& v, auto& w) { c.patience = static_cast<int>(to_int(v, w)); }},
        {"min_rel_improvement", [&](auto& v, auto& w) { c.min_rel_improvement = to_double(v, w); }},
        {"batch_size", [&](auto& v, auto& w) { c.batch_size = to_count(v, w); }},
        {"seed", [&](auto& v, auto& w) { c.seed = static_cast<std::uint64_t>(to_count(v, w)); }},
        {"train_fraction", [&](auto& v, auto& w) { c.fractions.train = to_double(v, w); }},
        {"val_fraction", [&](auto& v, auto& w) { c.fractions.val = to_double(v, w); }},
        {"test_fraction", [&](auto& v, auto& w) { c.fractions.test = to_double(v, w); }},
        {"solver", [&](auto& v, auto&) { c.solver.method = ode::method_from_string(v); }},
        {"steps", [&](auto& v, auto& w) { c.solver.steps = static_cast<int>(to_int(v, w)); }},
        {"x0", [&](auto& v, auto& w) { c.solver.x0 = to_double(v, w); }},
        {"x_end", [&](auto& v, auto& w) { c.solver.x_end = to_double(v, w); }},
        {"inverse", [&](auto& v, auto&) { c.solver.inverse = ode::inverse_mode_from_string(v); }},
        {"illumination", [&](auto& v, auto& w) { s.illumination = to_double(v, w); }},
        {"sample_fraction", [&](auto& v, auto& w) { s.sample_fraction = to_double(v, w); }},
        {"sample_count", [&](auto& v, auto& w) { s.sample_count = to_count(v, w); }},
        {"ensemble", [&](auto& v, auto& w) { s.ensemble = static_cast<int>(to_int(v, w)); }},
        {"reshuffle", [&](auto& v, auto& w) { s.reshuffle = to_bool(v, w); }},
    };
    apply(kv, setters, "mode");
    s.validate();
    return s;
}

std::vector<AbsorptionBand> parse_absorption(std::string_view text, const std::string& what) {
    std::vector<AbsorptionBand> out;
    const auto t = detail::trim(text);
    if (t.empty() || detail::lower(t) == "none") return out;
    for (auto item : detail::split(t, ',')) {
        const auto parts = detail::split(item, ':');
        if (parts.size() != 3)
            fail(ErrorKind::Config, what + ": absorption entry '" + std::string(item) + "' is not center:width:depth");
        out.push_back({to_double(std::string(parts[0]), what), to_double(std::string(parts[1]), what),
                       to_double(std::string(parts[2]), what)});
    }
    return out;
}

void SynthSettings::validate() const {
    spec.validate();
    require(roi_regions >= 1, ErrorKind::Config, "roi_regions must be at least 1");
    require(roi_pixels >= 1, ErrorKind::Config, "roi_pixels must be at least 1");
    require(roi_regions * roi_pixels <= spec.rows * spec.cols, ErrorKind::Config,
            "ROI pixels exceed the scene size");
}

SynthSettings synth_settings(const KeyValues& kv) {
    SynthSettings s;
    SynthSpec& p = s.spec;
    const std::map<std::string, Setter, std::less<>> setters{
        {"rows", [&](auto& v, auto& w) { p.rows = to_count(v, w); }},
        {"cols", [&](auto& v, auto& w) { p.cols = to_count(v, w); }},
        {"bands", [&](auto& v, auto& w) { p.bands = to_count(v, w); }},
        {"first_nm", [&](auto& v, auto& w) { p.first_nm = to_double(v, w); }},
        {"last_nm", [&](auto& v, auto& w) { p.last_nm = to_double(v, w); }},
        {"alpha0", [&](auto& v, auto& w) { p.alpha0 = to_double(v, w); }},
        {"endmembers", [&](auto& v, auto& w) { p.endmembers = to_count(v, w); }},
        {"dark_offset", [&](auto& v, auto& w) { p.dark_offset = to_double(v, w); }},
        {"illumination", [&](auto& v, auto& w) { p.illumination = to_double(v, w); }},
        {"noise", [&](auto& v, auto& w) { p.noise = to_double(v, w); }},
        {"shadow_fraction", [&](auto& v, auto& w) { p.shadow_fraction = to_double(v, w); }},
        {"absorption", [&](auto& v, auto& w) { p.absorption = parse_absorption(v, w); }},
        {"roi_regions", [&](auto& v, auto& w) { s.roi_regions = to_count(v, w); }},
        {"roi_pixels", [&](auto& v, auto& w) { s.roi_pixels = to_count(v, w); }},
    };
    apply(kv, setters);
    s.validate();
    return s;
}

}  // namespace dinsat::io
