#pragma once

// zfmaser command-line front end. run() dispatches exactly one subcommand and
// returns 0 on success, 1 on user error, 2 on numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zfmaser/cavity.hpp"
#include "zfmaser/cqed.hpp"
#include "zfmaser/csv.hpp"
#include "zfmaser/maser_fit.hpp"
#include "zfmaser/spectro.hpp"
#include "zfmaser/synthetic.hpp"
#include "zfmaser/trepr_fit.hpp"
#include "zfmaser/triplet.hpp"
#include "zfmaser/units.hpp"

#ifndef ZFMASER_VERSION
#define ZFMASER_VERSION "0.1.0"
#endif

namespace zfmaser::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* version = ZFMASER_VERSION;
inline constexpr const char* out_dir_env = "ZFMASER_OUT_DIR";

struct RunManifest {
    std::string subcommand;
    std::vector<std::string> inputs;
    std::optional<std::string> param_file;
    std::string out_dir;
    std::optional<std::uint64_t> seed;

    json to_json() const {
        json j;
        j["subcommand"] = subcommand;
        j["inputs"] = inputs;
        j["param_file"] = param_file ? json(*param_file) : json(nullptr);
        j["out_dir"] = out_dir;
        j["seed"] = seed ? json(*seed) : json(nullptr);
        j["version"] = version;
        return j;
    }
};

namespace detail {

constexpr double unset = std::numeric_limits<double>::quiet_NaN();
inline bool given(double v) { return !std::isnan(v); }

// A rate flag plus its --*-angular companion.
struct RateArg {
    double value = unset;
    bool angular = false;
    bool given() const { return detail::given(value); }
    double si() const { return rate_from_input(value, angular); }
};

inline void add_rate(CLI::App* app, const std::string& names, const std::string& angular_flag, RateArg& r,
                     const std::string& what) {
    app->add_option(names, r.value, what + " (s^-1, or Hz with " + angular_flag + ")");
    app->add_flag(angular_flag, r.angular, "value of the preceding rate is multiplied by 2*pi");
}

// JSON parameter file restricted to a known set of keys.
class ParamFile {
public:
    ParamFile() = default;
    ParamFile(const std::string& path, std::set<std::string> allowed) : allowed_(std::move(allowed)) {
        std::ifstream f(path);
        if (!f) throw InvalidInput("cannot open parameter file '" + path + "'");
        try {
            j_ = json::parse(f);
        } catch (const json::parse_error& e) {
            throw InvalidInput("parameter file '" + path + "' is not valid JSON");
        }
        if (!j_.is_object()) throw InvalidInput("parameter file must hold a JSON object");
        for (const auto& [k, v] : j_.items())
            if (!allowed_.count(k)) throw InvalidInput("parameter file: unknown key '" + k + "'");
    }

    bool has(const std::string& k) const { return j_.is_object() && j_.contains(k); }

    double number(const std::string& k, double fallback) const {
        if (!has(k)) return fallback;
        const auto& v = j_.at(k);
        if (!v.is_number()) throw InvalidInput("parameter file: '" + k + "' must be a number");
        return v.get<double>();
    }

    // Plain number (s^-1) or {"value": x, "angular": true|false}.
    double rate(const std::string& k, double fallback) const {
        if (!has(k)) return fallback;
        const auto& v = j_.at(k);
        if (v.is_number()) return v.get<double>();
        if (v.is_object()) {
            for (const auto& [kk, vv] : v.items())
                if (kk != "value" && kk != "angular")
                    throw InvalidInput("parameter file: '" + k + "' has unknown field '" + kk + "'");
            if (!v.contains("value") || !v.at("value").is_number())
                throw InvalidInput("parameter file: '" + k + "'.value must be a number");
            bool ang = false;
            if (v.contains("angular")) {
                if (!v.at("angular").is_boolean())
                    throw InvalidInput("parameter file: '" + k + "'.angular must be true or false");
                ang = v.at("angular").get<bool>();
            }
            return rate_from_input(v.at("value").get<double>(), ang);
        }
        throw InvalidInput("parameter file: '" + k + "' must be a number or {value, angular}");
    }

    std::vector<double> numbers(const std::string& k, std::vector<double> fallback) const {
        if (!has(k)) return fallback;
        const auto& v = j_.at(k);
        if (!v.is_array()) throw InvalidInput("parameter file: '" + k + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw InvalidInput("parameter file: '" + k + "' must be an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

private:
    json j_ = json::object();
    std::set<std::string> allowed_;
};

inline std::vector<double> to_us(std::span<const double> t) {
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = s_to_us(t[i]);
    return out;
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string fmt_scalar(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace detail

/// Options shared by every subcommand.
struct Common {
    std::string out_dir;
    std::string params;
    bool json_out = false;
    bool plot_script = false;
};

class Runner {
public:
    Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(int argc, const char* const* argv);

private:
    using Handler = std::function<void()>;

    std::ostream& out_;
    std::ostream& err_;
    std::map<std::string, Handler> handlers_;
    std::map<std::string, Common> common_;
    std::vector<std::string> files_;

    CLI::App* add(CLI::App& app, const std::string& name, const std::string& help, bool file_output);
    RunManifest manifest(const std::string& cmd, std::vector<std::string> inputs = {},
                         std::optional<std::uint64_t> seed = std::nullopt) const;
    fs::path out_path(const std::string& cmd, const std::string& file);
    void emit_json(const std::string& cmd, const json& j, bool write_file, const std::string& file = "");
    void emit_scalar(const std::string& cmd, double v, json j);
    void plot_script(const std::string& cmd, const std::string& csv_file, const std::string& title,
                     std::size_t columns, bool logy);

    void register_all(CLI::App& app);
};

inline CLI::App* Runner::add(CLI::App& app, const std::string& name, const std::string& help, bool file_output) {
    auto* sub = app.add_subcommand(name, help);
    sub->set_version_flag("--version", version);
    auto& c = common_[name];
    const char* env = std::getenv(out_dir_env);
    c.out_dir = env && *env ? env : ".";
    sub->add_option("--out-dir", c.out_dir,
                    std::string("output directory (default $") + out_dir_env + " or .)");
    sub->add_flag("--json", c.json_out, "print the full JSON result instead of a bare value");
    if (file_output) sub->add_flag("--plot-script", c.plot_script, "also write a gnuplot script per CSV");
    return sub;
}

inline RunManifest Runner::manifest(const std::string& cmd, std::vector<std::string> inputs,
                                    std::optional<std::uint64_t> seed) const {
    const auto& c = common_.at(cmd);
    RunManifest m;
    m.subcommand = cmd;
    m.inputs = std::move(inputs);
    if (!c.params.empty()) m.param_file = c.params;
    m.out_dir = c.out_dir;
    m.seed = seed;
    return m;
}

inline fs::path Runner::out_path(const std::string& cmd, const std::string& file) {
    const fs::path dir = common_.at(cmd).out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidInput("cannot create output directory '" + dir.string() + "'");
    files_.push_back((dir / file).string());
    return dir / file;
}

inline void Runner::emit_json(const std::string& cmd, const json& j, bool write_file, const std::string& file) {
    json doc = j;
    if (write_file) {
        const std::string name = file.empty() ? cmd + ".json" : file;
        files_.push_back((fs::path(common_.at(cmd).out_dir) / name).string());
        doc["outputs"] = files_;
        files_.pop_back();
        std::ofstream f(out_path(cmd, name));
        f << doc.dump(2) << '\n';
    }
    out_ << doc.dump(2) << '\n';
}

inline void Runner::emit_scalar(const std::string& cmd, double v, json j) {
    if (common_.at(cmd).json_out)
        out_ << j.dump(2) << '\n';
    else
        out_ << detail::fmt_scalar(v) << '\n';
}

inline void Runner::plot_script(const std::string& cmd, const std::string& csv_file, const std::string& title,
                                std::size_t columns, bool logy) {
    if (!common_.at(cmd).plot_script) return;
    const std::string stem = fs::path(csv_file).stem().string();
    std::ofstream f(out_path(cmd, stem + ".gp"));
    f << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set title '" << title << "'\n"
      << (logy ? "set logscale y\n" : "")
      << "plot for [i=2:" << columns << "] '" << fs::path(csv_file).filename().string()
      << "' using 1:i with lines\n"
      << "pause mouse close\n";
}

inline int Runner::run(int argc, const char* const* argv) {
    CLI::App app{"Zero-field maser simulation and analysis toolkit", "zfmaser"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);
    register_all(app);

    if (argc <= 1) {
        err_ << app.help();
        return 1;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        // Help for whichever (sub)command was asked.
        const CLI::App* target = &app;
        for (auto* s : app.get_subcommands()) target = s;
        out_ << target->help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out_ << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out_ << version << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err_ << "zfmaser: error: " << e.what() << '\n';
        return 1;
    }

    const auto subs = app.get_subcommands();
    const std::string cmd = subs.front()->get_name();
    try {
        handlers_.at(cmd)();
        return 0;
    } catch (const InvalidInput& e) {
        err_ << "zfmaser " << cmd << ": error: " << e.what() << '\n';
        return 1;
    } catch (const json::exception& e) {
        err_ << "zfmaser " << cmd << ": error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        err_ << "zfmaser " << cmd << ": error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalFailure& e) {
        err_ << "zfmaser " << cmd << ": numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err_ << "zfmaser " << cmd << ": error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err_ << "zfmaser " << cmd << ": numerical failure: " << e.what() << '\n';
        return 2;
    }
}

inline void Runner::register_all(CLI::App& app) {
    using detail::RateArg;
    using detail::add_rate;
    using detail::given;

    // ---- simulate-triplet
    {
        struct Opts {
            RateArg kx, kz, wxz;
            double nx0 = detail::unset, ny0 = detail::unset, nz0 = detail::unset;
            double t_max_us = 20.0;
            std::size_t points = 2001;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "simulate-triplet";
        auto* s = add(app, name, "Evolve the T_x/T_z populations and report eigenrates", true);
        auto& c = common_[name];
        s->add_option("--params", c.params, "JSON file: n_x0, n_y0, n_z0, k_x, k_z, w_xz");
        add_rate(s, "--kx", "--kx-angular", o->kx, "depopulation rate of T_x");
        add_rate(s, "--kz", "--kz-angular", o->kz, "depopulation rate of T_z");
        add_rate(s, "--wxz", "--wxz-angular", o->wxz, "spin-lattice relaxation rate T_x<->T_z");
        s->add_option("--nx0", o->nx0, "initial T_x population");
        s->add_option("--ny0", o->ny0, "initial T_y population");
        s->add_option("--nz0", o->nz0, "initial T_z population");
        s->add_option("--t-max-us", o->t_max_us, "end of the time grid (us)")->capture_default_str();
        s->add_option("--points", o->points, "number of output samples")->capture_default_str();
        handlers_[name] = [this, o, name] {
            const auto& c = common_.at(name);
            detail::ParamFile pf;
            if (!c.params.empty()) pf = {c.params, {"n_x0", "n_y0", "n_z0", "k_x", "k_z", "w_xz"}};
            TripletRateModel m;
            m.n_x0 = given(o->nx0) ? o->nx0 : pf.number("n_x0", m.n_x0);
            m.n_y0 = given(o->ny0) ? o->ny0 : pf.number("n_y0", m.n_y0);
            m.n_z0 = given(o->nz0) ? o->nz0 : pf.number("n_z0", m.n_z0);
            m.k_x = o->kx.given() ? o->kx.si() : pf.rate("k_x", m.k_x);
            m.k_z = o->kz.given() ? o->kz.si() : pf.rate("k_z", m.k_z);
            m.w_xz = o->wxz.given() ? o->wxz.si() : pf.rate("w_xz", m.w_xz);
            m.validate();
            if (!(o->t_max_us > 0.0) || o->points < 2) throw InvalidInput("need --t-max-us > 0 and --points >= 2");

            const auto grid = linspace(0.0, us_to_s(o->t_max_us), o->points);
            const auto tr = evolve_populations(m, grid);
            const auto file = out_path(name, "triplet_trajectory.csv");
            csv::write_table(file.string(), {"t_us", "n_x", "n_z", "difference"},
                             {detail::to_us(grid), tr.n_x, tr.n_z, tr.difference()});
            plot_script(name, file.string(), "triplet populations", 4, false);

            const auto er = eigenrates(m);
            const auto bi = biexp_from_model(m);
            json j;
            j["manifest"] = manifest(name).to_json();
            j["model"] = {{"n_x0", m.n_x0}, {"n_y0", m.n_y0}, {"n_z0", m.n_z0},
                          {"k_x", m.k_x},   {"k_z", m.k_z},   {"w_xz", m.w_xz}};
            j["alpha_minus"] = er.alpha_minus;
            j["alpha_plus"] = er.alpha_plus;
            if (er.alpha_minus < 0.0 && er.alpha_plus < 0.0) {
                const auto cd = combined_rate_from_eigen(er.alpha_minus, er.alpha_plus);
                j["combined_rate"] = cd.rate;
                j["decay_time_us"] = s_to_us(cd.decay_time);
            } else {
                j["combined_rate"] = nullptr;
                j["decay_time_us"] = nullptr;
            }
            j["A"] = bi.A;
            j["B"] = bi.B;
            j["zero_crossing_us"] = detail::finite_or_null(s_to_us(trepr_zero_crossing(bi)));
            emit_json(name, j, true);
        };
    }

    // ---- fit-trepr
    {
        struct Opts {
            std::string input;
            std::string unit = "dimensionless";
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "fit-trepr";
        auto* s = add(app, name, "Biexponential fit A e^(a_- t) + B e^(a_+ t) of a trEPR transient", true);
        s->add_option("--input", o->input, "CSV trace with header t_us,value (or t_ns, t_s, ...)")->required();
        s->add_option("--unit", o->unit, "value unit: dimensionless or volts")->capture_default_str();
        handlers_[name] = [this, o, name] {
            const Unit u = parse_unit(o->unit);
            const auto tr = csv::read_trace(o->input, u);
            const auto f = fit_biexponential(tr);
            std::vector<double> fit_y(tr.size());
            for (std::size_t i = 0; i < tr.size(); ++i) fit_y[i] = biexp_value(f, tr.t()[i]);
            const auto file = out_path(name, "fit_trepr_curve.csv");
            csv::write_table(file.string(), {"t_us", "data", "fit"},
                             {detail::to_us(tr.t()), {tr.y().begin(), tr.y().end()}, fit_y});
            plot_script(name, file.string(), "trEPR biexponential fit", 3, false);

            json j;
            j["manifest"] = manifest(name, {o->input}).to_json();
            j["A"] = f.A;
            j["B"] = f.B;
            j["alpha_minus"] = f.alpha_minus;
            j["alpha_plus"] = f.alpha_plus;
            j["uncertainties"] = {{"A", detail::finite_or_null(f.uncertainties[0])},
                                  {"B", detail::finite_or_null(f.uncertainties[1])},
                                  {"alpha_minus", detail::finite_or_null(f.uncertainties[2])},
                                  {"alpha_plus", detail::finite_or_null(f.uncertainties[3])}};
            j["residual_norm"] = f.residual_norm;
            j["converged"] = f.converged;
            j["components_supported"] = f.components_supported;
            if (f.alpha_minus < 0.0 && f.alpha_plus < 0.0) {
                const auto cd = combined_rate_from_eigen(f.alpha_minus, f.alpha_plus);
                j["combined_rate"] = cd.rate;
                j["decay_time_us"] = s_to_us(cd.decay_time);
            } else {
                j["combined_rate"] = nullptr;
                j["decay_time_us"] = nullptr;
            }
            j["zero_crossing_us"] = detail::finite_or_null(s_to_us(trepr_zero_crossing(f)));
            emit_json(name, j, true);
        };
    }

    // ---- qcircle
    {
        struct Opts {
            double d = detail::unset, d2 = detail::unset;
            std::string s11;
            double f0 = detail::unset, f_low = detail::unset, f_high = detail::unset;
            double k2 = 0.0;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "qcircle";
        auto* s = add(app, name, "Port coupling from Q-circle diameters, optionally Q_L and Q_u", false);
        s->add_option("--d", o->d, "Q-circle diameter (0..2)");
        s->add_option("--d2", o->d2, "auxiliary circle diameter (1..2); omit for the lossless formula");
        s->add_option("--s11", o->s11, "CSV f_Hz,re_S11,im_S11; the diameter comes from a circle fit");
        s->add_option("--f0", o->f0, "mode frequency (Hz)");
        s->add_option("--f-low", o->f_low, "lower half-power frequency (Hz)");
        s->add_option("--f-high", o->f_high, "upper half-power frequency (Hz)");
        s->add_option("--k2", o->k2, "coupling of the second port for Q_u")->capture_default_str();
        handlers_[name] = [this, o, name] {
            json j;
            std::vector<std::string> inputs;
            double d = o->d;
            if (!o->s11.empty()) {
                if (given(d)) throw InvalidInput("give either --d or --s11, not both");
                const auto sw = csv::read_s11(o->s11);
                const auto cf = fit_circle_kasa(sw.s11);
                d = cf.diameter();
                inputs.push_back(o->s11);
                j["circle"] = {{"center_re", cf.center.real()}, {"center_im", cf.center.imag()}, {"radius", cf.radius}};
            }
            if (!given(d)) throw InvalidInput("need --d or --s11");
            QCircleGeometry g{d, std::nullopt};
            if (given(o->d2)) g.d2 = o->d2;
            const double k = coupling_from_qcircle(g);
            json r;
            r["manifest"] = manifest(name, inputs).to_json();
            r["d"] = d;
            r["d2"] = given(o->d2) ? json(o->d2) : json(nullptr);
            r["coupling"] = k;
            if (j.contains("circle")) r["circle"] = j["circle"];
            if (given(o->f0) || given(o->f_low) || given(o->f_high)) {
                if (!(given(o->f0) && given(o->f_low) && given(o->f_high)))
                    throw InvalidInput("Q_L needs all of --f0, --f-low, --f-high");
                const double ql = loaded_q(o->f0, o->f_low, o->f_high);
                r["q_loaded"] = ql;
                r["q_unloaded"] = unloaded_q(ql, k, o->k2);
                r["kappa_c"] = cavity_decay_rate(o->f0, ql);
            }
            emit_scalar(name, k, r);
        };
    }

    // ---- thermal-photons
    {
        struct Opts {
            double f = detail::unset, temp = detail::unset;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "thermal-photons";
        auto* s = add(app, name, "Bose-Einstein photon occupancy of the cavity mode", false);
        s->add_option("--f", o->f, "mode frequency (Hz)")->required();
        s->add_option("--temp", o->temp, "temperature (K)")->required();
        handlers_[name] = [this, o, name] {
            const double n = thermal_photons(o->f, o->temp);
            json j;
            j["manifest"] = manifest(name).to_json();
            j["f_hz"] = o->f;
            j["temperature_k"] = o->temp;
            j["n_bar"] = n;
            emit_scalar(name, n, j);
        };
    }

    // ---- convert-power
    {
        struct Opts {
            double dbm = detail::unset, watts = detail::unset;
            std::string input;
            std::string unit = "dBm";
            double coupling = detail::unset;
            RateArg kappa_c;
            double q_loaded = detail::unset;
            double f = detail::unset;
            double baseline_nbar = detail::unset;
            double pre_window_us = detail::unset;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "convert-power";
        auto* s = add(app, name, "Detected power to intracavity photon number", true);
        s->add_option("--dbm", o->dbm, "single power value in dBm");
        s->add_option("--watts", o->watts, "single power value in W");
        s->add_option("--input", o->input, "CSV power trace (t_us,value)");
        s->add_option("--unit", o->unit, "unit of the trace values: dBm or watts")->capture_default_str();
        s->add_option("--coupling", o->coupling, "output-port coupling K")->required();
        add_rate(s, "--kappa-c", "--kappa-c-angular", o->kappa_c, "cavity decay rate");
        s->add_option("--q-loaded", o->q_loaded, "loaded Q; kappa_c = 2 pi f / Q_L when --kappa-c is absent");
        s->add_option("--f", o->f, "mode frequency (Hz)")->required();
        s->add_option("--baseline-nbar", o->baseline_nbar, "shift the converted trace so its pre-burst mean is this");
        s->add_option("--pre-window-us", o->pre_window_us, "pre-burst window length (us); default: up to onset");
        handlers_[name] = [this, o, name] {
            double kc = detail::unset;
            if (o->kappa_c.given())
                kc = o->kappa_c.si();
            else if (given(o->q_loaded))
                kc = cavity_decay_rate(o->f, o->q_loaded);
            else
                throw InvalidInput("need --kappa-c or --q-loaded");

            const int modes = (given(o->dbm) ? 1 : 0) + (given(o->watts) ? 1 : 0) + (o->input.empty() ? 0 : 1);
            if (modes != 1) throw InvalidInput("give exactly one of --dbm, --watts, --input");
            if (o->input.empty()) {
                const double p = given(o->dbm) ? dbm_to_watts(o->dbm) : o->watts;
                const double n = power_to_photons(p, o->coupling, kc, o->f);
                json j;
                j["manifest"] = manifest(name).to_json();
                j["power_watts"] = p;
                j["kappa_c"] = kc;
                j["photon_number"] = n;
                emit_scalar(name, n, j);
                return;
            }
            const Unit u = parse_unit(o->unit);
            if (u != Unit::dBm && u != Unit::Watts) throw InvalidInput("--unit must be dBm or watts");
            const auto tr = csv::read_trace(o->input, u);
            auto ph = power_to_photons(tr, o->coupling, kc, o->f);
            json j;
            j["manifest"] = manifest(name, {o->input}).to_json();
            j["kappa_c"] = kc;
            if (given(o->baseline_nbar)) {
                const auto bc = given(o->pre_window_us)
                                    ? baseline_correct(ph, o->baseline_nbar, us_to_s(o->pre_window_us))
                                    : baseline_correct(ph, o->baseline_nbar);
                j["baseline_shift"] = bc.shift;
                j["baseline_window_samples"] = bc.window_samples;
                ph = bc.trace;
            }
            double peak = 0.0;
            for (double v : ph.y()) peak = std::max(peak, v);
            j["peak_photon_number"] = peak;
            const auto file = out_path(name, "photons.csv");
            csv::write_trace(file.string(), ph, "t_us", "photon_number");
            plot_script(name, file.string(), "photon number", 2, true);
            emit_json(name, j, true);
        };
    }

    // Maser parameters shared by simulate-maser and fit-maser.
    struct MaserArgs {
        RateArg ge, kappa_c, kappa_s, gamma, delta;
        double n_spins = detail::unset, n_bar = detail::unset, inversion0 = detail::unset;
    };
    const std::set<std::string> maser_keys{"g_e", "kappa_c", "kappa_s", "gamma", "delta",
                                           "n_spins", "n_bar", "inversion0"};
    auto add_maser_args = [](CLI::App* s, MaserArgs& a) {
        add_rate(s, "--ge,--ge-hz", "--ge-angular", a.ge, "ensemble coupling g_e");
        add_rate(s, "--kappa-c", "--kappa-c-angular", a.kappa_c, "cavity decay rate");
        add_rate(s, "--kappa-s,--kappa-s-hz", "--kappa-s-angular", a.kappa_s, "spin dephasing rate");
        add_rate(s, "--gamma", "--gamma-angular", a.gamma, "spin-lattice relaxation rate");
        add_rate(s, "--delta", "--delta-angular", a.delta, "detuning");
        s->add_option("--n-spins", a.n_spins, "number of spins N");
        s->add_option("--n-bar", a.n_bar, "thermal photon number");
        s->add_option("--inversion0", a.inversion0, "initial inversion <S~z>(0)");
    };
    auto resolve_maser = [](const MaserArgs& a, const detail::ParamFile& pf, double& inv0) {
        auto p = MaserSystemParams::reference();
        p.g_e = a.ge.given() ? a.ge.si() : pf.rate("g_e", p.g_e);
        p.kappa_c = a.kappa_c.given() ? a.kappa_c.si() : pf.rate("kappa_c", p.kappa_c);
        p.kappa_s = a.kappa_s.given() ? a.kappa_s.si() : pf.rate("kappa_s", p.kappa_s);
        p.gamma = a.gamma.given() ? a.gamma.si() : pf.rate("gamma", p.gamma);
        p.delta = a.delta.given() ? a.delta.si() : pf.rate("delta", p.delta);
        p.n_spins = given(a.n_spins) ? a.n_spins : pf.number("n_spins", p.n_spins);
        p.n_bar = given(a.n_bar) ? a.n_bar : pf.number("n_bar", p.n_bar);
        inv0 = given(a.inversion0) ? a.inversion0 : pf.number("inversion0", 0.52);
        p.validate();
        if (!(std::abs(inv0) <= 1.0)) throw InvalidInput("inversion0 must lie in [-1, 1]");
        return p;
    };
    auto params_json = [](const MaserSystemParams& p, double inv0) {
        return json{{"g_e", p.g_e},         {"kappa_c", p.kappa_c}, {"kappa_s", p.kappa_s},
                    {"gamma", p.gamma},     {"delta", p.delta},     {"n_spins", p.n_spins},
                    {"n_bar", p.n_bar},     {"inversion0", inv0}};
    };

    // ---- simulate-maser
    {
        struct Opts {
            MaserArgs m;
            double t_max_us = 10.0;
            std::size_t points = 2000;
            double rtol = 1e-8, atol = 1e-20;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "simulate-maser";
        auto* s = add(app, name, "Integrate the mean-field Tavis-Cummings maser equations", true);
        auto& c = common_[name];
        s->add_option("--params", c.params, "JSON file with any of g_e, kappa_c, kappa_s, gamma, delta, n_spins, n_bar, inversion0");
        add_maser_args(s, o->m);
        s->add_option("--t-max-us", o->t_max_us, "simulation length (us)")->capture_default_str();
        s->add_option("--points", o->points, "output samples")->capture_default_str();
        s->add_option("--rtol", o->rtol, "relative tolerance")->capture_default_str();
        s->add_option("--atol", o->atol, "absolute tolerance (scaled state)")->capture_default_str();
        handlers_[name] = [this, o, name, maser_keys, resolve_maser, params_json] {
            const auto& c = common_.at(name);
            detail::ParamFile pf;
            if (!c.params.empty()) pf = {c.params, maser_keys};
            double inv0 = 0.52;
            const auto p = resolve_maser(o->m, pf, inv0);
            MaserSimOptions so;
            so.tol = {o->rtol, o->atol};
            so.n_points = o->points;
            const auto tr = simulate_maser(p, MaserState::initial(p.n_bar, inv0), 0.0, us_to_s(o->t_max_us), so);

            std::vector<double> n, re, im, sz, ss;
            for (const auto& st : tr.states) {
                n.push_back(st.photon_number);
                re.push_back(st.coherence.real());
                im.push_back(st.coherence.imag());
                sz.push_back(st.inversion);
                ss.push_back(st.spin_correlation / p.n_spins);
            }
            const auto file = out_path(name, "maser_trajectory.csv");
            csv::write_table(file.string(),
                             {"t_us", "photon_number", "re_coherence", "im_coherence", "inversion",
                              "spin_correlation_per_N"},
                             {detail::to_us(tr.t), n, re, im, sz, ss});
            plot_script(name, file.string(), "maser burst", 2, true);

            const auto ip = static_cast<std::size_t>(std::max_element(n.begin(), n.end()) - n.begin());
            json j;
            j["manifest"] = manifest(name).to_json();
            j["params"] = params_json(p, inv0);
            j["cooperativity"] = cooperativity(p.g_e, p.kappa_c, p.kappa_s);
            j["predicted_rabi_hz"] = angular_to_ordinary(predicted_rabi(p.g_e));
            j["peak_photon_number"] = n[ip];
            j["peak_time_us"] = s_to_us(tr.t[ip]);
            j["accepted_steps"] = tr.accepted_steps;
            j["rejected_steps"] = tr.rejected_steps;
            j["max_error_estimate"] =
                tr.error_estimate.empty() ? 0.0 : *std::max_element(tr.error_estimate.begin(), tr.error_estimate.end());
            emit_json(name, j, true);
        };
    }

    // ---- fit-maser
    {
        struct Opts {
            std::string input;
            MaserArgs m;
            std::string loss = "log10";
            double search_decades = 2.0;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "fit-maser";
        auto* s = add(app, name, "Fit g_e, kappa_s and N of the maser model to a photon-number trace", true);
        auto& c = common_[name];
        s->add_option("--input", o->input, "CSV photon-number trace (t_us,value), baseline-corrected")->required();
        s->add_option("--params", c.params,
                      "JSON file: fixed kappa_c, gamma, delta, n_bar, inversion0 and starting g_e, kappa_s, n_spins");
        add_maser_args(s, o->m);
        s->add_option("--loss", o->loss, "residual space: log10 or linear")->capture_default_str();
        s->add_option("--search-decades", o->search_decades, "parameter box half-width around the start (decades)")
            ->capture_default_str();
        handlers_[name] = [this, o, name, maser_keys, resolve_maser, params_json] {
            const auto& c = common_.at(name);
            detail::ParamFile pf;
            if (!c.params.empty()) pf = {c.params, maser_keys};
            double inv0 = 0.52;
            const auto p0 = resolve_maser(o->m, pf, inv0);
            MaserFitOptions fo;
            if (o->loss == "log10")
                fo.loss_space = fit::LossSpace::Log10;
            else if (o->loss == "linear")
                fo.loss_space = fit::LossSpace::Linear;
            else
                throw InvalidInput("--loss must be log10 or linear");
            fo.search_decades = o->search_decades;
            const auto tr = csv::read_trace(o->input, Unit::Photons);
            const MaserFitFixed fixed{p0.kappa_c, p0.gamma, p0.n_bar, inv0, p0.delta};
            const MaserFitInit init{p0.g_e, p0.kappa_s, p0.n_spins};
            const auto r = fit_maser_parameters(tr, fixed, init, fo);

            const auto model = maser_model_on_grid(r.params, inv0, tr.t(), fo.sim);
            const auto file = out_path(name, "fit_maser_curve.csv");
            csv::write_table(file.string(), {"t_us", "data", "fit"},
                             {detail::to_us(tr.t()), {tr.y().begin(), tr.y().end()}, model});
            plot_script(name, file.string(), "maser fit", 3, true);

            json j;
            j["manifest"] = manifest(name, {o->input}).to_json();
            j["loss_space"] = o->loss;
            j["params"] = params_json(r.params, inv0);
            j["g_e_hz"] = angular_to_ordinary(r.params.g_e);
            j["kappa_s_hz"] = angular_to_ordinary(r.params.kappa_s);
            j["uncertainties"] = {{"g_e", detail::finite_or_null(r.uncertainties[0])},
                                  {"kappa_s", detail::finite_or_null(r.uncertainties[1])},
                                  {"n_spins", detail::finite_or_null(r.uncertainties[2])}};
            j["cooperativity"] = r.cooperativity;
            j["residual_norm"] = r.fit.residual_norm;
            j["converged"] = r.fit.converged;
            j["iterations"] = r.fit.iterations;
            j["jacobian_condition"] = detail::finite_or_null(r.fit.jacobian_condition);
            emit_json(name, j, true);
        };
    }

    // ---- cooperativity
    {
        struct Opts {
            RateArg ge, kappa_c, kappa_s;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "cooperativity";
        auto* s = add(app, name, "C = 4 g_e^2 / (kappa_c kappa_s)", false);
        add_rate(s, "--ge,--ge-hz", "--ge-angular", o->ge, "ensemble coupling g_e");
        add_rate(s, "--kappa-c", "--kappa-c-angular", o->kappa_c, "cavity decay rate");
        add_rate(s, "--kappa-s,--kappa-s-hz", "--kappa-s-angular", o->kappa_s, "spin dephasing rate");
        handlers_[name] = [this, o, name] {
            if (!o->ge.given() || !o->kappa_c.given() || !o->kappa_s.given())
                throw InvalidInput("need --ge, --kappa-c and --kappa-s");
            const double cval = cooperativity(o->ge.si(), o->kappa_c.si(), o->kappa_s.si());
            json j;
            j["manifest"] = manifest(name).to_json();
            j["g_e"] = o->ge.si();
            j["kappa_c"] = o->kappa_c.si();
            j["kappa_s"] = o->kappa_s.si();
            j["cooperativity"] = cval;
            emit_scalar(name, cval, j);
        };
    }

    // ---- rabi
    {
        struct Opts {
            std::string input;
            double t_start_us = detail::unset, t_end_us = detail::unset;
            RateArg ge;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "rabi";
        auto* s = add(app, name, "Measured Rabi frequency of a burst and/or the 2 g_e prediction (Hz)", false);
        s->add_option("--input", o->input, "CSV photon-number trace (t_us,value)");
        s->add_option("--t-start-us", o->t_start_us, "start of the analysis window (us)");
        s->add_option("--t-end-us", o->t_end_us, "end of the analysis window (us)");
        add_rate(s, "--ge,--ge-hz", "--ge-angular", o->ge, "ensemble coupling g_e for the prediction");
        handlers_[name] = [this, o, name] {
            if (o->input.empty() && !o->ge.given()) throw InvalidInput("need --input and/or --ge");
            json j;
            j["manifest"] = manifest(name, o->input.empty() ? std::vector<std::string>{}
                                                            : std::vector<std::string>{o->input})
                                .to_json();
            double value = detail::unset;
            j["predicted_frequency_hz"] = nullptr;
            j["measured_frequency_hz"] = nullptr;
            if (o->ge.given()) {
                value = angular_to_ordinary(predicted_rabi(o->ge.si()));
                j["predicted_frequency_hz"] = value;
            }
            if (!o->input.empty()) {
                const auto tr = csv::read_trace(o->input, Unit::Photons);
                const double a = given(o->t_start_us) ? us_to_s(o->t_start_us) : tr.t().front();
                const double b = given(o->t_end_us) ? us_to_s(o->t_end_us) : tr.t().back();
                const auto est = extract_rabi_frequency(tr, a, b);
                value = est.frequency;
                j["measured_frequency_hz"] = est.frequency;
                j["peak_to_floor"] = est.peak_magnitude / est.floor_magnitude;
                if (o->ge.given()) j["predicted_over_measured"] = j["predicted_frequency_hz"].get<double>() / value;
            }
            emit_scalar(name, value, j);
        };
    }

    // ---- svd-tas
    {
        struct Opts {
            std::string input;
            double threshold = 0.10;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "svd-tas";
        auto* s = add(app, name, "SVD global analysis of a transient-absorption matrix", true);
        s->add_option("--input", o->input, "CSV matrix: first row wavelengths (nm), first column delays (ps)")
            ->required();
        s->add_option("--threshold", o->threshold, "significance threshold relative to the largest singular value")
            ->capture_default_str();
        handlers_[name] = [this, o, name] {
            const auto m = csv::read_matrix(o->input);
            const auto r = svd_global_analysis(m, o->threshold);
            const std::size_t k = r.significant_count;
            if (k > 0) {
                std::vector<std::string> hu{"wavelength_nm"}, hv{"delay_ps"}, hd{"wavelength_nm"};
                std::vector<std::vector<double>> cu{m.wavelengths()}, cv{m.delays()}, cd{m.wavelengths()};
                for (std::size_t i = 0; i < k; ++i) {
                    const auto ii = static_cast<Eigen::Index>(i);
                    hu.push_back("u" + std::to_string(i + 1));
                    hv.push_back("v" + std::to_string(i + 1));
                    cu.emplace_back(r.spectral_components.col(ii).data(),
                                    r.spectral_components.col(ii).data() + r.spectral_components.rows());
                    cv.emplace_back(r.time_profiles.col(ii).data(),
                                    r.time_profiles.col(ii).data() + r.time_profiles.rows());
                    if (static_cast<Eigen::Index>(i) < r.decay_associated_spectra.cols()) {
                        hd.push_back("das" + std::to_string(i + 1));
                        cd.emplace_back(r.decay_associated_spectra.col(ii).data(),
                                        r.decay_associated_spectra.col(ii).data() + r.decay_associated_spectra.rows());
                    }
                }
                const auto fu = out_path(name, "svd_spectral_components.csv");
                csv::write_table(fu.string(), hu, cu);
                plot_script(name, fu.string(), "spectral components", k + 1, false);
                const auto fv = out_path(name, "svd_time_profiles.csv");
                csv::write_table(fv.string(), hv, cv);
                plot_script(name, fv.string(), "time profiles", k + 1, false);
                if (cd.size() > 1) {
                    const auto fd = out_path(name, "svd_das.csv");
                    csv::write_table(fd.string(), hd, cd);
                    plot_script(name, fd.string(), "decay-associated spectra", cd.size(), false);
                }
            }
            json j;
            j["manifest"] = manifest(name, {o->input}).to_json();
            j["threshold"] = o->threshold;
            j["singular_values"] = r.singular_values;
            j["significant_count"] = k;
            j["component_lifetimes_ps"] = r.component_lifetimes;
            j["component_lifetime_uncertainties_ps"] = json::array();
            for (double u : r.component_lifetime_uncertainties)
                j["component_lifetime_uncertainties_ps"].push_back(detail::finite_or_null(u));
            j["profile_lifetimes_ps"] = r.profile_lifetimes;
            j["lifetimes_converged"] = r.lifetimes_converged;
            emit_json(name, j, true);
        };
    }

    // ---- fit-tcspc
    {
        struct Opts {
            std::string input;
            std::size_t components = 2;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "fit-tcspc";
        auto* s = add(app, name, "Multi-exponential tail fit of a TCSPC histogram", true);
        s->add_option("--input", o->input, "CSV counts histogram (t_ns,value or another time header)")->required();
        s->add_option("--components", o->components, "number of exponentials (1-3)")->capture_default_str();
        handlers_[name] = [this, o, name] {
            const auto tr = csv::read_trace(o->input, Unit::Counts);
            const auto f = fit_tcspc(tr, o->components);
            std::vector<double> tn, data, model;
            for (std::size_t i = 0; i < tr.size(); ++i) {
                if (tr.t()[i] < f.peak_time) continue;
                const double dt = tr.t()[i] - f.peak_time;
                double v = 0.0;
                for (std::size_t c = 0; c < f.lifetimes.size(); ++c)
                    v += f.amplitude_scale * f.amplitudes[c] * std::exp(-dt / f.lifetimes[c]);
                tn.push_back(tr.t()[i] * 1e9);
                data.push_back(tr.y()[i]);
                model.push_back(v);
            }
            const auto file = out_path(name, "tcspc_fit.csv");
            csv::write_table(file.string(), {"t_ns", "data", "fit"}, {tn, data, model});
            plot_script(name, file.string(), "TCSPC tail fit", 3, true);

            json j;
            j["manifest"] = manifest(name, {o->input}).to_json();
            j["components_requested"] = o->components;
            j["components_supported"] = f.components_supported;
            j["lifetimes_ns"] = json::array();
            j["lifetime_uncertainties_ns"] = json::array();
            for (std::size_t c = 0; c < f.lifetimes.size(); ++c) {
                j["lifetimes_ns"].push_back(f.lifetimes[c] * 1e9);
                j["lifetime_uncertainties_ns"].push_back(detail::finite_or_null(f.lifetime_uncertainties[c] * 1e9));
            }
            j["amplitudes"] = f.amplitudes;
            j["amplitude_scale"] = f.amplitude_scale;
            j["peak_time_ns"] = f.peak_time * 1e9;
            j["reduced_chi2"] = f.reduced_chi2;
            j["converged"] = f.converged;
            emit_json(name, j, true);
        };
    }

    // ---- quantum-yield
    {
        struct Opts {
            double tau_f = detail::unset, tau_isc = detail::unset;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "quantum-yield";
        auto* s = add(app, name, "Triplet yield theta_T = kappa_ISC / kappa_f from two lifetimes", false);
        s->add_option("--tau-f-ns", o->tau_f, "fluorescence lifetime (ns)")->required();
        s->add_option("--tau-isc-ns", o->tau_isc, "intersystem-crossing lifetime (ns)")->required();
        handlers_[name] = [this, o, name] {
            const auto r = rates_from_lifetimes(o->tau_f, o->tau_isc);
            json j;
            j["manifest"] = manifest(name).to_json();
            j["kappa_f_per_ns"] = r.kappa_f;
            j["kappa_isc_per_ns"] = r.kappa_isc;
            j["kappa_ic_plus_rad_per_ns"] = r.kappa_ic_plus_rad;
            j["theta_t"] = r.theta_t;
            emit_scalar(name, r.theta_t, j);
        };
    }

    // ---- gen-synthetic
    {
        struct Opts {
            std::string kind;
            std::uint64_t seed = 1;
            double noise = detail::unset;
        };
        auto o = std::make_shared<Opts>();
        const std::string name = "gen-synthetic";
        auto* s = add(app, name, "Write a deterministic synthetic dataset plus a sidecar JSON", true);
        auto& c = common_[name];
        s->add_option("--kind", o->kind, "biexp-trepr | maser-burst | rank2-tas | tcspc")->required();
        s->add_option("--seed", o->seed, "random seed")->capture_default_str();
        s->add_option("--noise", o->noise, "noise level (relative; ignored for tcspc, which is Poisson)");
        s->add_option("--params", c.params, "JSON file overriding the generator parameters");
        handlers_[name] = [this, o, name, maser_keys, params_json] {
            const auto& c = common_.at(name);
            json gen;
            std::string data_file = o->kind + ".csv";
            if (o->kind == "biexp-trepr") {
                detail::ParamFile pf;
                if (!c.params.empty()) pf = {c.params, {"A", "B", "alpha_minus", "alpha_plus", "t_max_us", "points"}};
                BiexpFit b;
                b.A = pf.number("A", 0.547);
                b.B = pf.number("B", -0.066);
                b.alpha_minus = pf.rate("alpha_minus", -3.93e5);
                b.alpha_plus = pf.rate("alpha_plus", -0.459e5);
                const double tmax = pf.number("t_max_us", 30.0);
                const double pts = pf.number("points", 601);
                if (!(tmax > 0.0) || !(pts >= 8)) throw InvalidInput("need t_max_us > 0 and points >= 8");
                const double noise = given(o->noise) ? o->noise : 0.0;
                const auto grid = linspace(0.0, us_to_s(tmax), static_cast<std::size_t>(pts));
                const auto tr = synthetic::trepr(b, grid, noise, o->seed);
                const auto f = out_path(name, data_file);
                csv::write_trace(f.string(), tr);
                plot_script(name, f.string(), "synthetic trEPR", 2, false);
                gen = {{"A", b.A}, {"B", b.B}, {"alpha_minus", b.alpha_minus}, {"alpha_plus", b.alpha_plus},
                       {"t_max_us", tmax}, {"points", pts}, {"noise", noise}};
            } else if (o->kind == "maser-burst") {
                auto keys = maser_keys;
                keys.insert({"t_max_us", "points"});
                detail::ParamFile pf;
                if (!c.params.empty()) pf = {c.params, keys};
                auto p = MaserSystemParams::reference();
                p.g_e = pf.rate("g_e", p.g_e);
                p.kappa_c = pf.rate("kappa_c", p.kappa_c);
                p.kappa_s = pf.rate("kappa_s", p.kappa_s);
                p.gamma = pf.rate("gamma", p.gamma);
                p.delta = pf.rate("delta", p.delta);
                p.n_spins = pf.number("n_spins", p.n_spins);
                p.n_bar = pf.number("n_bar", p.n_bar);
                p.validate();
                const double inv0 = pf.number("inversion0", 0.52);
                const double tmax = pf.number("t_max_us", 10.0);
                const double pts = pf.number("points", 501);
                if (!(tmax > 0.0) || !(pts >= 4)) throw InvalidInput("need t_max_us > 0 and points >= 4");
                const double noise = given(o->noise) ? o->noise : 0.0;
                const auto grid = linspace(0.0, us_to_s(tmax), static_cast<std::size_t>(pts));
                const auto tr = synthetic::maser_burst(p, inv0, grid, noise, o->seed);
                const auto f = out_path(name, data_file);
                csv::write_trace(f.string(), tr);
                plot_script(name, f.string(), "synthetic maser burst", 2, true);
                gen = params_json(p, inv0);
                gen["t_max_us"] = tmax;
                gen["points"] = pts;
                gen["noise"] = noise;
            } else if (o->kind == "rank2-tas") {
                detail::ParamFile pf;
                if (!c.params.empty())
                    pf = {c.params, {"tau_decay_ps", "tau_rise_ps", "rise_amplitude", "n_wavelengths", "n_delays",
                                     "delay_max_ps"}};
                synthetic::Rank2TasSpec sp;
                sp.tau_decay_ps = pf.number("tau_decay_ps", sp.tau_decay_ps);
                sp.tau_rise_ps = pf.number("tau_rise_ps", sp.tau_rise_ps);
                sp.rise_amplitude = pf.number("rise_amplitude", sp.rise_amplitude);
                sp.n_wavelengths = static_cast<std::size_t>(pf.number("n_wavelengths", static_cast<double>(sp.n_wavelengths)));
                sp.n_delays = static_cast<std::size_t>(pf.number("n_delays", static_cast<double>(sp.n_delays)));
                sp.delay_max_ps = pf.number("delay_max_ps", sp.delay_max_ps);
                if (given(o->noise)) sp.noise = o->noise;
                if (sp.n_wavelengths < 2 || sp.n_delays < 2) throw InvalidInput("matrix must be at least 2x2");
                const auto m = synthetic::rank2_tas(sp, o->seed);
                const auto f = out_path(name, data_file);
                csv::write_matrix(f.string(), m);
                gen = {{"tau_decay_ps", sp.tau_decay_ps}, {"tau_rise_ps", sp.tau_rise_ps},
                       {"rise_amplitude", sp.rise_amplitude}, {"noise", sp.noise},
                       {"n_wavelengths", sp.n_wavelengths}, {"n_delays", sp.n_delays},
                       {"delay_max_ps", sp.delay_max_ps}};
            } else if (o->kind == "tcspc") {
                detail::ParamFile pf;
                if (!c.params.empty())
                    pf = {c.params, {"lifetimes_ns", "amplitudes", "peak_counts", "onset_ns", "span_ns", "bin_ns",
                                     "background"}};
                synthetic::TcspcSpec sp;
                sp.lifetimes_ns = pf.numbers("lifetimes_ns", sp.lifetimes_ns);
                sp.amplitudes = pf.numbers("amplitudes", sp.amplitudes);
                sp.peak_counts = pf.number("peak_counts", sp.peak_counts);
                sp.onset_ns = pf.number("onset_ns", sp.onset_ns);
                sp.span_ns = pf.number("span_ns", sp.span_ns);
                sp.bin_ns = pf.number("bin_ns", sp.bin_ns);
                sp.background = pf.number("background", sp.background);
                if (!(sp.bin_ns > 0.0) || !(sp.span_ns > sp.bin_ns)) throw InvalidInput("need span_ns > bin_ns > 0");
                const auto tr = synthetic::tcspc(sp, o->seed);
                const auto f = out_path(name, data_file);
                csv::write_trace(f.string(), tr, "t_ns");
                plot_script(name, f.string(), "synthetic TCSPC", 2, true);
                gen = {{"lifetimes_ns", sp.lifetimes_ns}, {"amplitudes", sp.amplitudes},
                       {"peak_counts", sp.peak_counts},   {"onset_ns", sp.onset_ns},
                       {"span_ns", sp.span_ns},           {"bin_ns", sp.bin_ns},
                       {"background", sp.background}};
            } else {
                throw InvalidInput("unknown kind '" + o->kind + "' (biexp-trepr, maser-burst, rank2-tas, tcspc)");
            }
            json j;
            j["manifest"] = manifest(name, {}, o->seed).to_json();
            j["kind"] = o->kind;
            j["seed"] = o->seed;
            j["data_file"] = data_file;
            j["parameters"] = gen;
            emit_json(name, j, true, o->kind + ".json");
        };
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Runner r(out, err);
    return r.run(argc, argv);
}

}  // namespace zfmaser::cli
