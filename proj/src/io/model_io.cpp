#include "dinsat/io/model_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "dinsat/error.hpp"
#include "text.hpp"

namespace dinsat::io {

namespace {

constexpr std::string_view kMagic = "dinsat-model 1";

std::string join(std::span<const double> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += detail::format_double(v[i]);
    }
    return out;
}

std::vector<double> parse_list(std::string_view s, const std::string& what) {
    std::vector<double> out;
    for (auto cell : detail::split(s, ',')) out.push_back(detail::parse_double(cell, what));
    return out;
}

}  // namespace

std::string format_model(const ModelArtifact& a) {
    std::ostringstream os;
    const auto& m = a.model;
    os << kMagic << "\n";
    os << "kind = " << to_string(m.kind()) << "\n";
    os << "bands = " << m.bands() << "\n";
    if (m.kind() == ModelKind::Nonlinear) {
        os << "latent = " << m.latent() << "\n";
        os << "hidden = " << m.hidden() << "\n";
    }
    os << "solver = " << ode::to_string(a.solver.method) << "\n";
    os << "steps = " << a.solver.steps << "\n";
    os << "x0 = " << detail::format_double(a.solver.x0) << "\n";
    os << "x_end = " << detail::format_double(a.solver.x_end) << "\n";
    os << "inverse = " << ode::to_string(a.solver.inverse) << "\n";
    if (a.norm) {
        os << "illumination = " << detail::format_double(a.norm->m) << "\n";
        os << "dark_offset = " << join(a.norm->c) << "\n";
    }
    if (a.wavelengths) os << "wavelengths = " << join(*a.wavelengths) << "\n";
    os << "params = " << m.params().size() << "\n";
    for (double v : m.params()) os << detail::format_double(v) << "\n";
    return os.str();
}

ModelArtifact parse_model(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    auto where = [&] { return origin + ":" + std::to_string(lineno); };

    if (!std::getline(in, line) || detail::trim(line) != kMagic)
        fail(ErrorKind::UnsupportedFormat, origin + ": not a dinsat model artifact (missing '" +
                                               std::string(kMagic) + "' line)");
    ++lineno;

    std::map<std::string, std::string> fields;
    std::vector<double> params;
    bool in_params = false;
    std::size_t param_count = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        if (in_params) {
            params.push_back(detail::parse_double(t, where()));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) fail(ErrorKind::CorruptFile, where() + ": expected 'key = value'");
        const std::string key(detail::trim(t.substr(0, eq)));
        const std::string value(detail::trim(t.substr(eq + 1)));
        if (key == "params") {
            param_count = static_cast<std::size_t>(detail::parse_int(value, where()));
            in_params = true;
            continue;
        }
        if (!fields.emplace(key, value).second) fail(ErrorKind::CorruptFile, where() + ": duplicate key '" + key + "'");
    }
    if (!in_params) fail(ErrorKind::CorruptFile, origin + ": missing 'params' section");
    if (params.size() != param_count)
        fail(ErrorKind::CorruptFile, origin + ": declared " + std::to_string(param_count) + " parameters, found " +
                                         std::to_string(params.size()));

    auto take = [&](const std::string& key) -> std::optional<std::string> {
        auto it = fields.find(key);
        if (it == fields.end()) return std::nullopt;
        std::string v = it->second;
        fields.erase(it);
        return v;
    };
    auto need = [&](const std::string& key) {
        auto v = take(key);
        if (!v) fail(ErrorKind::CorruptFile, origin + ": missing key '" + key + "'");
        return *v;
    };
    auto as_size = [&](const std::string& key) {
        const long long v = detail::parse_int(need(key), origin + " " + key);
        if (v <= 0) fail(ErrorKind::CorruptFile, origin + ": " + key + " must be positive");
        return static_cast<std::size_t>(v);
    };

    const ModelKind kind = model_kind_from_string(need("kind"));
    const std::size_t bands = as_size("bands");
    ode::SolverConfig solver;
    solver.method = ode::method_from_string(need("solver"));
    solver.steps = static_cast<int>(as_size("steps"));
    solver.x0 = detail::parse_double(need("x0"), origin + " x0");
    solver.x_end = detail::parse_double(need("x_end"), origin + " x_end");
    solver.inverse = ode::inverse_mode_from_string(need("inverse"));
    solver.validate();

    std::optional<TransmissionModel> model;
    if (kind == ModelKind::Linear) {
        require(params.size() == bands, ErrorKind::CorruptFile, origin + ": linear model needs one parameter per band");
        model = TransmissionModel::linear_from_raw(std::move(params));
    } else {
        const std::size_t latent = as_size("latent");
        const std::size_t hidden = as_size("hidden");
        model = TransmissionModel::nonlinear(bands, std::move(params), latent, hidden);
    }

    std::optional<SceneNormalization> norm;
    const auto illum = take("illumination");
    const auto dark = take("dark_offset");
    if (illum.has_value() != dark.has_value())
        fail(ErrorKind::CorruptFile, origin + ": illumination and dark_offset must appear together");
    if (illum) {
        auto c = parse_list(*dark, origin + " dark_offset");
        require(c.size() == bands, ErrorKind::CorruptFile, origin + ": dark_offset length differs from bands");
        norm.emplace(std::move(c), detail::parse_double(*illum, origin + " illumination"));
    }
    std::optional<std::vector<double>> wavelengths;
    if (auto w = take("wavelengths")) {
        wavelengths = parse_list(*w, origin + " wavelengths");
        require(wavelengths->size() == bands, ErrorKind::CorruptFile,
                origin + ": wavelengths length differs from bands");
    }
    if (!fields.empty()) fail(ErrorKind::CorruptFile, origin + ": unknown key '" + fields.begin()->first + "'");

    return ModelArtifact{std::move(*model), solver, std::move(norm), std::move(wavelengths)};
}

void write_model(const std::filesystem::path& path, const ModelArtifact& artifact) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << format_model(artifact);
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

ModelArtifact read_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open model " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str(), path.string());
}

}  // namespace dinsat::io
